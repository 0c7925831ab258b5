#include "coarsen/lsw_classical.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "coarsen/errors.hpp"

namespace coarsen {

namespace odeint = boost::numeric::odeint;

namespace {

using Foot = std::array<double, 2>;  // x, log J

constexpr int kGaussPoints = 8;

}  // namespace

CharacteristicFoot trace_backward(double x, double t, const LHistory& L, const CharacteristicOptions& opts)
{
    if (!(x >= 0.0)) throw InvalidArgument("characteristic: x must be >= 0");
    if (L.empty()) throw InvalidArgument("characteristic: empty L history");
    const double t0 = L.t_begin();
    if (t < t0 - 1e-12 || t > L.t_end() + 1e-12) throw InvalidArgument("characteristic: t outside L history");
    t = std::clamp(t, t0, L.t_end());
    if (t == t0) return {x, 1.0};

    const auto ts = L.times();
    const auto Ls = L.values();
    auto k = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
    k = std::min(k, ts.size() - 1);

    auto stepper = odeint::make_controlled(opts.atol, opts.rtol, odeint::runge_kutta_dopri5<Foot>());
    Foot y{x, 0.0};
    double tau = 0.0;
    for (std::size_t i = k; i-- > 0;) {
        const double s_lo = ts[i];
        const double tau_end = std::cbrt(t - s_lo);
        if (!(tau_end > tau)) continue;
        const double slope = (Ls[i + 1] - Ls[i]) / (ts[i + 1] - ts[i]);
        const double L_lo = Ls[i];
        auto rhs = [&](const Foot& q, Foot& dq, double tq) {
            const double tau2 = tq * tq;
            const double s = t - tau2 * tq;
            const double Ls_val = L_lo + slope * (s - s_lo);
            const double xq = std::max(q[0], 0.0);
            dq[0] = 3.0 * tau2 * (1.0 - std::cbrt(xq / Ls_val));
            // x ~ tau^3 when starting from 0, so tau^2 / x^{2/3} -> 1 there
            dq[1] = xq > 0.0 ? -tau2 / std::cbrt(xq * xq * Ls_val) : -1.0 / std::cbrt(Ls_val);
        };
        odeint::integrate_adaptive(stepper, rhs, y, tau, tau_end, tau_end - tau);
        tau = tau_end;
        if (y[0] > opts.x_escape) throw SolverFailure("backward characteristic escaped beyond x_escape");
        if (y[0] < 0.0) throw SolverFailure("backward characteristic became negative");
    }
    return {y[0], std::exp(y[1])};
}

double characteristic_backward(double x, double t, const LHistory& L, const CharacteristicOptions& opts)
{
    return trace_backward(x, t, L, opts).F;
}

double characteristic_jacobian(double x, double t, const LHistory& L, const CharacteristicOptions& opts)
{
    return trace_backward(x, t, L, opts).jacobian;
}

double exit_time(double x, const LHistory& L, const CharacteristicOptions& opts)
{
    if (!(x >= 0.0)) throw InvalidArgument("exit_time: x must be >= 0");
    const double t0 = L.t_begin();
    if (x == 0.0) return t0;
    auto f = [&](double t) { return characteristic_backward(0.0, t, L, opts) - x; };
    // F(0, t) < t - t0, so the root lies beyond t0 + x
    double lo = std::min(t0 + x, L.t_end());
    double hi = lo;
    double f_hi = f(hi);
    while (f_hi < 0.0) {
        if (hi >= L.t_end()) throw SolverFailure("exit_time: characteristic does not reach 0 within the L history");
        lo = hi;
        hi = std::min(t0 + 2.0 * (hi - t0), L.t_end());
        f_hi = f(hi);
    }
    if (f_hi == 0.0) return hi;
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, f(lo), f_hi,
                                                     boost::math::tools::eps_tolerance<double>(48), iters);
    return 0.5 * (r.first + r.second);
}

void validate(const ClassicalOptions& opts)
{
    if (!(opts.dt > 0.0)) throw InvalidArgument("classical.dt must be positive");
    if (opts.panels < 1) throw InvalidArgument("classical.panels must be >= 1");
    if (!(opts.tail_tol > 0.0 && opts.tail_tol < 1e-3)) throw InvalidArgument("classical.tail_tol must lie in (0, 1e-3)");
    if (!(opts.fixed_point_tol > 0.0)) throw InvalidArgument("classical.fixed_point_tol must be positive");
    if (opts.max_iterations < 1) throw InvalidArgument("classical.max_iterations must be >= 1");
    if (!(opts.L_floor > 0.0)) throw InvalidArgument("classical.L_floor must be positive");
}

ClassicalSolver::ClassicalSolver(InitialProfile initial, ClassicalOptions opts)
    : initial_(std::move(initial)), opts_(opts), L_(opts.L_floor), mass0_(initial_.mass())
{
    validate(opts_);
    // L at t = 0 from the initial moments; F(x, 0) = x needs no history
    L_.append(0.0, std::max(1.0, opts_.L_floor));
    const auto q = quadrature(std::cbrt(x_max(0.0)));
    const auto m = moments(0.0, q);
    const double L0 = m.cbrt_L * m.cbrt_L * m.cbrt_L;
    if (!(L0 >= opts_.L_floor)) throw SolverFailure("initial L below L_floor");
    L_.set_back(L0);
    current_ = moments(0.0, q);
}

double ClassicalSolver::tail(double x, double s) const
{
    return initial_.tail(characteristic_backward(x, s, L_, opts_.characteristics));
}

double ClassicalSolver::x_max(double s) const
{
    const double level = opts_.tail_tol * initial_.number();
    double x = initial_.support_end(opts_.tail_tol);
    while (tail(x, s) > level) x *= 1.5;
    return x;
}

ClassicalSolver::Quadrature ClassicalSolver::quadrature(double u_max) const
{
    using G = boost::math::quadrature::gauss<double, kGaussPoints>;
    const auto& abs = G::abscissa();
    const auto& wts = G::weights();
    Quadrature q;
    const double h = u_max / opts_.panels;
    for (int p = 0; p < opts_.panels; ++p) {
        const double mid = (p + 0.5) * h;
        for (std::size_t j = 0; j < abs.size(); ++j) {
            for (double sign : {-1.0, 1.0}) {
                q.u.push_back(mid + sign * 0.5 * h * abs[j]);
                q.weight.push_back(0.5 * h * wts[j]);
            }
        }
    }
    return q;
}

ClassicalMoments ClassicalSolver::moments(double s, const Quadrature& q) const
{
    ClassicalMoments m;
    const auto foot = trace_backward(0.0, s, L_, opts_.characteristics);
    m.foot0 = foot.F;
    m.jacobian0 = foot.jacobian;
    m.N = initial_.tail(foot.F);
    if (!(m.N > 0.0)) throw SolverFailure("classical: all clusters have dissolved");
    double int_w = 0.0;
    for (std::size_t k = 0; k < q.u.size(); ++k) {
        const double u = q.u[k];
        const double w = q.weight[k] * tail(u * u * u, s);
        int_w += w;
        m.mass += 3.0 * u * u * w;
        m.E += 2.0 * u * w;
        m.M += 4.0 * u * u * u * w;
    }
    m.cbrt_L = int_w / m.N;
    return m;
}

ClassicalMoments ClassicalSolver::moments(double s) const
{
    return moments(s, quadrature(std::cbrt(x_max(s))));
}

int ClassicalSolver::advance(double dt)
{
    if (!(dt > 0.0)) throw InvalidArgument("advance: dt must be positive");
    const double t1 = t_ + dt;
    const double L_old = L_.values().back();
    L_.append(t1, L_old);
    try {
        const auto q = quadrature(std::cbrt(x_max(t1)));
        double L_prev = L_old;
        for (int it = 1; it <= opts_.max_iterations; ++it) {
            const auto m = moments(t1, q);
            const double L_new = m.cbrt_L * m.cbrt_L * m.cbrt_L;
            if (!(L_new >= opts_.L_floor)) throw SolverFailure("classical: L fell below L_floor");
            L_.set_back(L_new);
            if (std::abs(L_new - L_prev) <= opts_.fixed_point_tol * L_new) {
                t_ = t1;
                current_ = m;
                return it;
            }
            L_prev = L_new;
        }
    } catch (...) {
        L_.pop_back();
        throw;
    }
    L_.pop_back();
    throw SolverFailure("classical: L fixed point did not converge; reduce dt");
}

SeriesRecord ClassicalSolver::record() const
{
    const auto& m = current_;
    SeriesRecord r;
    r.t = t_;
    r.L = L_.values().back();
    r.N = m.N;
    r.lambda = mass0_ / m.N;
    r.E = m.E;
    r.M = m.M;
    r.mass = m.mass;
    r.mass_residual = (m.mass - mass0_) / mass0_;
    return r;
}

double ClassicalSolver::semi_analytic_rate() const
{
    const double N = current_.N;
    return mass0_ * initial_.density(current_.foot0) * current_.jacobian0 / (N * N);
}

void validate(const ClassicalRunConfig& config)
{
    validate(config.initial);
    validate(config.options);
    if (!(config.dilation > 0.0)) throw InvalidArgument("classical.dilation must be positive");
    if (!(config.t_end > 0.0)) throw InvalidArgument("classical.t_end must be positive");
    if (config.snapshot_every < 1) throw InvalidArgument("classical.snapshot_every must be >= 1");
    if (config.snapshot_points < 2) throw InvalidArgument("classical.snapshot_points must be >= 2");
}

namespace {

TailSnapshot take_snapshot(const ClassicalSolver& solver, int points)
{
    TailSnapshot snap;
    snap.t = solver.t();
    const double u_max = std::cbrt(solver.x_max(solver.t()));
    for (int i = 0; i < points; ++i) {
        const double u = u_max * i / (points - 1);
        snap.x.push_back(u * u * u);
        snap.w.push_back(solver.tail(snap.x.back()));
    }
    return snap;
}

}  // namespace

ClassicalRunResult run_classical(const ClassicalRunConfig& config)
{
    validate(config);
    auto profile = InitialProfile::from_spec(config.initial);
    if (config.dilation != 1.0) profile = profile.dilated(config.dilation);

    ClassicalRunResult out{ClassicalSolver(profile, config.options), TrajectorySeries({"classical", 0}), {}, {}, 0};
    auto& solver = out.solver;
    out.series.push(solver.record());
    out.semi_analytic_rate.push_back(solver.semi_analytic_rate());
    out.snapshots.push_back(take_snapshot(solver, config.snapshot_points));

    const double dt = config.options.dt;
    const auto n_steps = static_cast<long>(std::ceil(config.t_end / dt - 1e-9));
    for (long n = 1; n <= n_steps; ++n) {
        const double target = n == n_steps ? config.t_end : n * dt;
        out.max_iterations_used = std::max(out.max_iterations_used, solver.advance(target - solver.t()));
        out.series.push(solver.record());
        out.semi_analytic_rate.push_back(solver.semi_analytic_rate());
        if (n % config.snapshot_every == 0 || n == n_steps) {
            out.snapshots.push_back(take_snapshot(solver, config.snapshot_points));
        }
    }
    return out;
}

}  // namespace coarsen
