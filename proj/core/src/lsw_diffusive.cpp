#include "coarsen/lsw_diffusive.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "coarsen/errors.hpp"

namespace coarsen {

double diffusion_coefficient(double eps, double x)
{
    return eps * std::cbrt(1.0 + x / eps);
}

namespace {

// Solves a tridiagonal system in place: lower[i] c[i-1] + diag[i] c[i] + upper[i] c[i+1] = rhs[i].
void thomas(std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper, std::vector<double>& rhs)
{
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
}

// Per-grid quantities reused by every stage.
struct Scheme {
    const Grid& grid;
    double eps;
    std::vector<double> edge_cbrt;    // p_f = x_f^{1/3}
    std::vector<double> center_cbrt;  // x_i^{1/3}
    std::vector<double> D;            // D at centers
    std::vector<double> g;            // 1 / distance across face f, f = 0..m-1
    std::vector<double> d;            // distance across face f (x_0 for f = 0)

    Scheme(const Grid& grid_, double eps_) : grid(grid_), eps(eps_)
    {
        const auto& xe = grid.edges();
        const auto& xc = grid.centers();
        const std::size_t m = xc.size();
        edge_cbrt.resize(m + 1);
        for (std::size_t f = 0; f <= m; ++f) edge_cbrt[f] = std::cbrt(xe[f]);
        center_cbrt.resize(m);
        D.resize(m);
        g.resize(m);
        d.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            center_cbrt[i] = std::cbrt(xc[i]);
            D[i] = diffusion_coefficient(eps, xc[i]);
            d[i] = i == 0 ? xc[0] : xc[i] - xc[i - 1];
            g[i] = 1.0 / d[i];
        }
    }

    // Limited linear reconstruction; face f sits at edge f. minus[f] is the
    // value from the cell on the left, plus[f] from the cell on the right.
    void reconstruct(const std::vector<double>& c, std::vector<double>& minus, std::vector<double>& plus) const
    {
        const auto& xc = grid.centers();
        const auto& dx = grid.widths();
        const std::size_t m = c.size();
        minus.assign(m + 1, 0.0);
        plus.assign(m + 1, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double slope = 0.0;
            if (i + 1 < m) {
                // Dirichlet value c(0) = 0 stands in for the left neighbour of cell 0
                const double xl = i == 0 ? 0.0 : xc[i - 1];
                const double cl = i == 0 ? 0.0 : c[i - 1];
                const double dl = c[i] - cl;
                const double dr = c[i + 1] - c[i];
                if (dl * dr > 0.0) {
                    const double central = (c[i + 1] - cl) / (xc[i + 1] - xl);
                    const double bound = 2.0 * std::min(std::abs(dl), std::abs(dr)) / dx[i];
                    slope = std::copysign(std::min(std::abs(central), bound), dl);
                }
            }
            plus[i] = c[i] - 0.5 * slope * dx[i];
            minus[i + 1] = c[i] + 0.5 * slope * dx[i];
        }
    }

    double moment_L(const std::vector<double>& c) const
    {
        const auto& dx = grid.widths();
        double s0 = 0.0;
        double s1 = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            s0 += dx[i] * c[i];
            s1 += dx[i] * c[i] * center_cbrt[i];
        }
        if (!(s0 > 0.0) || !(s1 > 0.0)) throw InvalidArgument("determine_L: empty distribution");
        const double r = s1 / s0;
        return r * r * r;
    }

    // Semi-discrete mass derivative as a function of lambda = L^{-1/3}:
    // sum_f (lambda p_f - 1) d_f c_f(lambda) - D c at the last cell, with c_f the
    // upwind face value. Piecewise linear and nondecreasing in lambda.
    struct MassRate {
        const std::vector<double>* p;
        std::vector<double> s1p, s0p, s1m, s0m;
        double far = 0.0;

        double operator()(double lambda) const
        {
            // faces with lambda p_f > 1 move right and take the left value
            const std::size_t m = s1p.size() - 1;
            const auto k = static_cast<std::size_t>(
                std::upper_bound(p->begin(), p->begin() + static_cast<std::ptrdiff_t>(m), 1.0 / lambda) - p->begin());
            return lambda * (s1p[k] + s1m[k]) - (s0p[k] + s0m[k]) - far;
        }
    };

    MassRate mass_rate(const std::vector<double>& c) const
    {
        const std::size_t m = c.size();
        std::vector<double> minus, plus;
        reconstruct(c, minus, plus);
        MassRate r{&edge_cbrt, std::vector<double>(m + 1, 0.0), std::vector<double>(m + 1, 0.0),
                   std::vector<double>(m + 1, 0.0), std::vector<double>(m + 1, 0.0), 0.0};
        for (std::size_t f = 0; f < m; ++f) {
            r.s1p[f + 1] = r.s1p[f] + edge_cbrt[f] * d[f] * plus[f];
            r.s0p[f + 1] = r.s0p[f] + d[f] * plus[f];
        }
        for (std::size_t f = m; f-- > 1;) {
            r.s1m[f] = r.s1m[f + 1] + edge_cbrt[f] * d[f] * minus[f];
            r.s0m[f] = r.s0m[f + 1] + d[f] * minus[f];
        }
        r.far = D[m - 1] * c[m - 1];
        return r;
    }

    double conserve_L(const std::vector<double>& c) const
    {
        const double Lm = moment_L(c);
        const auto rate = mass_rate(c);
        const double lo = std::cbrt(1.0 / (2.0 * Lm));
        const double hi = std::cbrt(2.0 / Lm);
        const double f_lo = rate(lo);
        const double f_hi = rate(hi);
        if (f_lo == 0.0) return 1.0 / (lo * lo * lo);
        if (f_hi == 0.0) return 1.0 / (hi * hi * hi);
        if (f_lo > 0.0 || f_hi < 0.0) throw SolverFailure("determine_L: conserve root not bracketed by [L/2, 2L]");
        std::uintmax_t iters = 100;
        const auto r = boost::math::tools::toms748_solve(rate, lo, hi, f_lo, f_hi,
                                                         boost::math::tools::eps_tolerance<double>(53), iters);
        const double lambda = std::abs(rate(r.first)) <= std::abs(rate(r.second)) ? r.first : r.second;
        return 1.0 / (lambda * lambda * lambda);
    }

    double stable_dt(double L, double cfl) const
    {
        const auto& dx = grid.widths();
        const double lambda = 1.0 / std::cbrt(L);
        double dt = std::numeric_limits<double>::infinity();
        double a_left = 1.0;
        for (std::size_t i = 0; i < dx.size(); ++i) {
            const double a_right = std::abs(lambda * edge_cbrt[i + 1] - 1.0);
            const double a = std::max(a_left, a_right);
            if (a > 0.0) dt = std::min(dt, cfl * dx[i] / a);
            a_left = a_right;
        }
        return dt;
    }

    // One IMEX-Euler stage at fixed L: explicit limited upwind advection, then
    // (I - dt A) c_new = c_star with A the centered operator on phi = D c.
    std::vector<double> imex_stage(const std::vector<double>& c, double L, double dt) const
    {
        const auto& dx = grid.widths();
        const std::size_t m = c.size();
        std::vector<double> minus, plus;
        reconstruct(c, minus, plus);
        const double lambda = 1.0 / std::cbrt(L);
        std::vector<double> flux(m + 1, 0.0);
        for (std::size_t f = 0; f < m; ++f) {
            const double a = lambda * edge_cbrt[f] - 1.0;
            flux[f] = a * (a > 0.0 ? minus[f] : plus[f]);
        }
        std::vector<double> out(m);
        std::vector<double> lower(m, 0.0), diag(m), upper(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            out[i] = c[i] - dt * (flux[i + 1] - flux[i]) / dx[i];
            const double k = dt / dx[i];
            const double g_right = i + 1 < m ? g[i + 1] : 0.0;
            diag[i] = 1.0 + k * (g[i] + g_right) * D[i];
            if (i > 0) lower[i] = -k * g[i] * D[i - 1];
            if (i + 1 < m) upper[i] = -k * g_right * D[i + 1];
        }
        thomas(lower, diag, upper, out);
        return out;
    }

    double stage_L(const std::vector<double>& c, double t, const DiffusiveOptions& opts) const
    {
        switch (opts.mode) {
        case LMode::Moment:
            return moment_L(c);
        case LMode::Conserve:
            return conserve_L(c);
        case LMode::Prescribed:
            return opts.prescribed->at_clamped(t);
        }
        return 1.0;
    }

    double step(ContinuousState& state, double dt, const DiffusiveOptions& opts) const
    {
        const double L1 = stage_L(state.cbar, state.t, opts);
        dt = std::min(dt, stable_dt(L1, opts.cfl));
        for (int attempt = 0; attempt <= opts.max_rejections; ++attempt) {
            const auto c1 = imex_stage(state.cbar, L1, dt);
            const double L2 = stage_L(c1, state.t + dt, opts);
            auto c2 = imex_stage(c1, L2, dt);
            double c_max = 0.0;
            double c_min = 0.0;
            for (std::size_t i = 0; i < c2.size(); ++i) {
                c2[i] = 0.5 * (state.cbar[i] + c2[i]);
                c_max = std::max(c_max, c2[i]);
                c_min = std::min(c_min, c2[i]);
            }
            if (c_min >= -opts.negativity_tol * c_max) {
                state.cbar = std::move(c2);
                state.t += dt;
                state.L = L1;
                return dt;
            }
            dt *= 0.5;
        }
        throw SolverFailure("step_diffusive: negativity persists after step rejections");
    }
};

}  // namespace

ContinuousState discretize(const Grid& grid, const InitialProfile& profile, double eps)
{
    if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
    ContinuousState s;
    s.eps = eps;
    const auto& xe = grid.edges();
    s.cbar.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        s.cbar[i] = profile.cell_average(xe[i], xe[i + 1]);
    }
    const double m = discrete_mass(grid, s.cbar);
    if (!(m > 0.0)) throw InvalidArgument("initial data has no mass on the grid");
    const double scale = profile.mass() / m;
    for (double& v : s.cbar) v *= scale;
    s.L = Scheme(grid, eps).moment_L(s.cbar);
    return s;
}

double discrete_mass(const Grid& grid, const std::vector<double>& c)
{
    double m = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) m += grid.centers()[i] * grid.widths()[i] * c[i];
    return m;
}

double discrete_number(const Grid& grid, const std::vector<double>& c)
{
    double n = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) n += grid.widths()[i] * c[i];
    return n;
}

double discrete_tail(const Grid& grid, const std::vector<double>& c, double x)
{
    const auto& xe = grid.edges();
    double s = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) {
        if (xe[i + 1] <= x) break;
        s += (xe[i + 1] - std::max(xe[i], x)) * c[i];
    }
    return s;
}

double mass_derivative(const Grid& grid, const ContinuousState& state, double L)
{
    return Scheme(grid, state.eps).mass_rate(state.cbar)(1.0 / std::cbrt(L));
}

double determine_L(const Grid& grid, const ContinuousState& state, LMode mode)
{
    switch (mode) {
    case LMode::Moment:
        return Scheme(grid, state.eps).moment_L(state.cbar);
    case LMode::Conserve:
        return Scheme(grid, state.eps).conserve_L(state.cbar);
    case LMode::Prescribed:
        return state.L;
    }
    return state.L;
}

void validate(const DiffusiveOptions& opts)
{
    if (!(opts.cfl > 0.0 && opts.cfl <= 0.5)) throw InvalidArgument("diffusive.cfl must lie in (0, 0.5]");
    if (!(opts.dt_max > 0.0)) throw InvalidArgument("diffusive.dt_max must be positive");
    if (!(opts.negativity_tol >= 0.0)) throw InvalidArgument("diffusive.negativity_tol must be >= 0");
    if (opts.mode == LMode::Prescribed && opts.prescribed == nullptr) {
        throw InvalidArgument("diffusive.mode prescribed needs an L history");
    }
}

double stable_dt(const Grid& grid, double L, double cfl)
{
    return Scheme(grid, 1.0).stable_dt(L, cfl);
}

double step_diffusive(const Grid& grid, ContinuousState& state, double dt, const DiffusiveOptions& opts)
{
    validate(opts);
    if (!(dt > 0.0)) throw InvalidArgument("step_diffusive: dt must be positive");
    if (state.cbar.size() != grid.size()) throw InvalidArgument("step_diffusive: state does not match grid");
    return Scheme(grid, state.eps).step(state, dt, opts);
}

void validate(const DiffusiveRunConfig& config)
{
    validate(config.initial);
    validate(config.options);
    validate(config.grid);
    if (!(config.eps > 0.0)) throw InvalidArgument("diffusive.eps must be positive");
    if (!(config.dilation > 0.0)) throw InvalidArgument("diffusive.dilation must be positive");
    if (!(config.t_end > 0.0)) throw InvalidArgument("diffusive.t_end must be positive");
    if (!(config.output_dt > 0.0)) throw InvalidArgument("diffusive.output_dt must be positive");
    if (config.snapshot_every < 1) throw InvalidArgument("diffusive.snapshot_every must be >= 1");
}

Grid make_grid(const DiffusiveRunConfig& config)
{
    GridSpec spec = config.grid;
    if (config.grid_delta_from_eps) spec.delta = config.eps;
    const Grid grid = Grid::graded(spec);
    if (grid.widths().front() > 0.25 * config.eps) {
        throw InvalidArgument("grid.cells too small: first cell wider than eps/4");
    }
    return grid;
}

SeriesRecord diffusive_record(const Grid& grid, const ContinuousState& state, double mass0, const DiffusiveOptions& opts)
{
    const auto& xc = grid.centers();
    const auto& dx = grid.widths();
    SeriesRecord r;
    r.t = state.t;
    r.L = opts.mode == LMode::Prescribed ? opts.prescribed->at_clamped(state.t) : determine_L(grid, state, opts.mode);
    double N = 0.0, mass = 0.0, E = 0.0, M = 0.0;
    for (std::size_t i = 0; i < xc.size(); ++i) {
        const double w = dx[i] * state.cbar[i];
        const double u = std::cbrt(xc[i]);
        N += w;
        mass += xc[i] * w;
        E += u * u * w;
        M += u * u * u * u * w;
    }
    r.N = N;
    r.mass = mass;
    r.E = E;
    r.M = M;
    r.lambda = N > 0.0 ? mass / N : not_available;
    r.mass_residual = (mass - mass0) / mass0;
    return r;
}

DiffusiveRunResult run_diffusive(const DiffusiveRunConfig& config)
{
    validate(config);
    return run_diffusive(config, make_grid(config));
}

DiffusiveRunResult run_diffusive(const DiffusiveRunConfig& config, const Grid& grid)
{
    validate(config);
    auto profile = InitialProfile::from_spec(config.initial);
    if (config.dilation != 1.0) profile = profile.dilated(config.dilation);

    DiffusiveRunResult out{grid, {}, {}, TrajectorySeries({"diffusive", 0}), LHistory(1e-12), {}, 0, 0.0};
    ContinuousState state = discretize(grid, profile, config.eps);
    out.initial = state;
    const double mass0 = profile.mass();
    const auto& opts = config.options;
    const Scheme scheme(grid, config.eps);

    out.series.push(diffusive_record(grid, state, mass0, opts));
    out.snapshots.push_back({state.t, state.cbar});

    long k = 1;
    while (state.t < config.t_end) {
        const double target = std::min(k * config.output_dt, config.t_end);
        const double t_before = state.t;
        const double m_before = discrete_mass(grid, state.cbar);
        const double want = std::min(opts.dt_max, target - t_before);
        const double taken = scheme.step(state, want, opts);
        out.history.append(t_before, state.L);
        ++out.steps;
        out.max_step_mass_drift =
            std::max(out.max_step_mass_drift, std::abs(discrete_mass(grid, state.cbar) - m_before) / mass0);
        if (taken == target - t_before) {
            state.t = target;
            out.series.push(diffusive_record(grid, state, mass0, opts));
            if (k % config.snapshot_every == 0 || target == config.t_end) {
                out.snapshots.push_back({state.t, state.cbar});
            }
            ++k;
        }
    }
    state.L = opts.mode == LMode::Prescribed ? opts.prescribed->at_clamped(state.t) : determine_L(grid, state, opts.mode);
    out.history.append(state.t, state.L);
    out.final_state = std::move(state);
    return out;
}

std::vector<double> payoff_on_grid(const Grid& grid, const Payoff& payoff)
{
    std::vector<double> w(grid.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = payoff.cell_average(grid.edges()[i], grid.edges()[i + 1]);
    return w;
}

double interpolate_centers(const Grid& grid, const std::vector<double>& values, double x)
{
    const auto& xc = grid.centers();
    if (x <= 0.0) return 0.0;
    if (x <= xc.front()) return values.front() * x / xc.front();
    if (x >= xc.back()) return values.back();
    const auto i = static_cast<std::size_t>(std::upper_bound(xc.begin(), xc.end(), x) - xc.begin());
    const double w = (x - xc[i - 1]) / (xc[i] - xc[i - 1]);
    return values[i - 1] + w * (values[i] - values[i - 1]);
}

double pairing(const Grid& grid, const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += grid.widths()[i] * a[i] * b[i];
    return s;
}

std::vector<double> adjoint_solve(const Grid& grid, const std::vector<double>& w_T, double T, const LHistory& L,
                                  double eps, const AdjointOptions& opts)
{
    if (w_T.size() != grid.size()) throw InvalidArgument("adjoint_solve: payoff does not match grid");
    if (!(eps > 0.0)) throw InvalidArgument("adjoint_solve: eps must be positive");
    if (!(opts.dt_max > 0.0)) throw InvalidArgument("adjoint_solve: dt_max must be positive");
    const double t0 = L.t_begin();
    if (!(T > t0) || T > L.t_end() + 1e-12 * std::max(1.0, T)) throw InvalidArgument("adjoint_solve: T outside L history");

    std::vector<double> levels;
    const auto knots = L.times();
    auto add_interval = [&](double a, double b) {
        const auto n = static_cast<long>(std::ceil((b - a) / opts.dt_max - 1e-9));
        for (long j = 0; j < n; ++j) levels.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(n));
    };
    for (std::size_t i = 0; i + 1 < knots.size() && knots[i] < T; ++i) add_interval(knots[i], std::min(knots[i + 1], T));
    levels.push_back(T);

    const auto& xc = grid.centers();
    const std::size_t m = xc.size();
    std::vector<double> D(m);
    for (std::size_t i = 0; i < m; ++i) D[i] = diffusion_coefficient(eps, xc[i]);

    std::vector<double> w = w_T;
    std::vector<double> lower(m), diag(m), upper(m);
    for (std::size_t k = levels.size() - 1; k-- > 0;) {
        const double h = levels[k + 1] - levels[k];
        const double lambda = 1.0 / std::cbrt(L.at_clamped(levels[k]));
        for (std::size_t i = 0; i < m; ++i) {
            const double xl = i == 0 ? 0.0 : xc[i - 1];
            const double hl = xc[i] - xl;
            double a_l, a_c, a_r;  // operator coefficients on w_{i-1}, w_i, w_{i+1}
            if (i + 1 < m) {
                const double hr = xc[i + 1] - xc[i];
                a_l = 2.0 * D[i] / (hl * (hl + hr));
                a_r = 2.0 * D[i] / (hr * (hl + hr));
                a_c = -a_l - a_r;
                const double u = 1.0 - lambda * std::cbrt(xc[i]);
                if (std::abs(u) * std::max(hl, hr) <= 2.0 * D[i]) {
                    // central difference keeps the matrix monotone here
                    a_l += u * hr / (hl * (hl + hr));
                    a_c -= u * (hr - hl) / (hl * hr);
                    a_r -= u * hl / (hr * (hl + hr));
                } else if (u > 0.0) {
                    a_l += u / hl;
                    a_c -= u / hl;
                } else {
                    a_r -= u / hr;
                    a_c += u / hr;
                }
            } else {
                // mirrored ghost: zero slope at the far end
                a_l = D[i] / (hl * hl);
                a_c = -a_l;
                a_r = 0.0;
            }
            lower[i] = -h * a_l;
            diag[i] = 1.0 - h * a_c;
            upper[i] = -h * a_r;
        }
        lower[0] = 0.0;  // w(0) = 0
        thomas(lower, diag, upper, w);
    }
    return w;
}

}  // namespace coarsen
