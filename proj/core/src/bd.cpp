#include "coarsen/bd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "coarsen/errors.hpp"

namespace coarsen {

namespace {

// Rate tables indexed by cluster size (entry 0 unused).
struct RateTable {
    std::vector<double> a;
    std::vector<double> b;

    RateTable(const RateModel& model, std::size_t ell_max) : a(ell_max + 2), b(ell_max + 2)
    {
        for (std::size_t ell = 1; ell < a.size(); ++ell) {
            a[ell] = model.attach(ell);
            b[ell] = model.detach(ell);
        }
    }
};

double weighted_tail_mass(std::span<const double> c)
{
    double m = 0.0;
    for (std::size_t i = 1; i < c.size(); ++i) m += static_cast<double>(i + 1) * c[i];
    return m;
}

double truncated_dirichlet_c1(std::span<const double> c, const RateTable& r)
{
    const std::size_t n = c.size();
    double evap = 0.0;
    double attach = 0.0;
    for (std::size_t ell = 2; ell <= n; ++ell) {
        evap += r.b[ell] * c[ell - 1];
        if (ell < n) attach += r.a[ell] * c[ell - 1];
    }
    evap += r.b[2] * c[1];
    if (!(attach > 0.0)) throw SolverFailure("Dirichlet closure: distribution is extinct");
    return evap / attach;
}

double monomer_for(std::span<const double> c, const RateTable& r, const Closure& closure)
{
    if (closure.kind == ClosureKind::Full) {
        return std::max(closure.rho - weighted_tail_mass(c), 0.0);
    }
    return truncated_dirichlet_c1(c, r);
}

// dc_l/dt for l >= 2 written into out[l-1]; out[0] gets the full-closure
// monomer rate (or 0). `slot1` is the value of c(1) seen by J_1.
void rhs_into(std::span<const double> c, double c1, double slot1, const RateTable& r,
              std::span<double> out)
{
    const std::size_t n = c.size();
    auto flux = [&](std::size_t ell) {
        if (ell >= n) return 0.0;
        const double c_ell = ell == 1 ? slot1 : c[ell - 1];
        return r.a[ell] * c1 * c_ell - r.b[ell + 1] * c[ell];
    };
    double j_prev = flux(1);
    double weighted = 0.0;
    for (std::size_t ell = 2; ell <= n; ++ell) {
        const double j = flux(ell);
        out[ell - 1] = j_prev - j;
        weighted += static_cast<double>(ell) * out[ell - 1];
        j_prev = j;
    }
    out[0] = -weighted;
}

}  // namespace

double bd_flux(const DiscreteState& state, const RateModel& model, double c1, std::size_t ell)
{
    const std::size_t n = state.ell_max();
    if (ell == 0 || ell > n) {
        throw InvalidArgument("bd_flux: index " + std::to_string(ell) + " outside [1, " +
                              std::to_string(n) + "]");
    }
    if (ell == n) return 0.0;
    return model.attach(ell) * c1 * state.c[ell - 1] - model.detach(ell + 1) * state.c[ell];
}

double monomer_closure_full(const DiscreteState& state, double rho)
{
    return std::max(rho - weighted_tail_mass(state.c), 0.0);
}

double monomer_closure_dirichlet(const DiscreteState& state, const RateModel& model)
{
    const std::size_t n = state.ell_max();
    if (n < 2) throw InvalidArgument("Dirichlet closure needs ell_max >= 2");
    double number = 0.0;
    double attach = 0.0;
    for (std::size_t ell = 2; ell <= n; ++ell) {
        number += state.c[ell - 1];
        attach += model.attach(ell) * state.c[ell - 1];
    }
    if (!(attach > 0.0)) throw SolverFailure("Dirichlet closure: distribution is extinct");
    return model.z_s() + (model.a1() * model.q() * number + model.detach(2) * state.c[1]) / attach;
}

double monomer_closure_dirichlet_truncated(const DiscreteState& state, const RateModel& model)
{
    if (state.ell_max() < 3) throw InvalidArgument("truncated Dirichlet closure needs ell_max >= 3");
    return truncated_dirichlet_c1(state.c, RateTable(model, state.ell_max()));
}

double closure_monomer(const DiscreteState& state, const RateModel& model, const Closure& closure)
{
    if (closure.kind == ClosureKind::Full) return monomer_closure_full(state, closure.rho);
    return monomer_closure_dirichlet_truncated(state, model);
}

std::vector<double> bd_rhs(const DiscreteState& state, const RateModel& model, const Closure& closure)
{
    const std::size_t n = state.ell_max();
    if (n < 3) throw InvalidArgument("bd_rhs needs ell_max >= 3");
    const RateTable rates(model, n);
    const double c1 = monomer_for(state.c, rates, closure);
    const double slot1 = closure.kind == ClosureKind::Full ? c1 : 0.0;
    std::vector<double> out(n, 0.0);
    rhs_into(state.c, c1, slot1, rates, out);
    if (closure.kind == ClosureKind::Dirichlet) out[0] = 0.0;
    return out;
}

double conserved_mass(const DiscreteState& state, const Closure& closure)
{
    const double tail = weighted_tail_mass(state.c);
    return closure.kind == ClosureKind::Full ? tail + state.c.at(0) : tail;
}

SeriesRecord bd_record(const DiscreteState& state, const RateModel& model, const Closure& closure)
{
    SeriesRecord rec;
    rec.t = state.t;
    const std::size_t first = closure.kind == ClosureKind::Full ? 1 : 2;
    double number = 0.0, mass = 0.0, energy = 0.0, scale = 0.0, g = 0.0;
    for (std::size_t ell = first; ell <= state.ell_max(); ++ell) {
        const double c = state.c[ell - 1];
        const double l = static_cast<double>(ell);
        const double l13 = std::cbrt(l);
        number += c;
        mass += l * c;
        energy += l13 * l13 * c;
        scale += l * l13 * c;
        if (ell >= 2) g += c;
    }
    rec.N = number;
    rec.mass = mass;
    rec.E = energy;
    rec.M = scale;
    rec.g = g;
    rec.lambda = number > 0.0 ? mass / number : not_available;
    rec.c1 = closure_monomer(state, model, closure);
    const double excess = rec.c1 - model.z_s();
    rec.L = (excess > 0.0 && model.q() > 0.0) ? std::pow(model.q() / excess, 3.0) : not_available;
    return rec;
}

std::vector<double> equilibrium_initial(const RateModel& model, std::size_t ell_max, double c1)
{
    return EquilibriumTable(model, ell_max).profile(c1);
}

std::vector<double> band_initial(std::size_t ell_max, std::size_t lo, std::size_t hi, double mass)
{
    if (lo < 1 || hi < lo || hi > ell_max) throw InvalidArgument("band_initial: need 1 <= lo <= hi <= ell_max");
    std::vector<double> c(ell_max, 0.0);
    double weight = 0.0;
    for (std::size_t ell = lo; ell <= hi; ++ell) weight += static_cast<double>(ell);
    for (std::size_t ell = lo; ell <= hi; ++ell) c[ell - 1] = mass / weight;
    return c;
}

void validate(const BdRunConfig& config)
{
    const auto& g = config.initial;
    if (g.size() < 3) throw InvalidArgument("bd: initial data needs ell_max >= 3");
    if (std::any_of(g.begin(), g.end(), [](double v) { return !(v >= 0.0); })) {
        throw InvalidArgument("bd: initial densities must be nonnegative");
    }
    if (!(config.t_end > 0.0)) throw InvalidArgument("bd: t_end must be positive");
    if (!(config.dt_init > 0.0)) throw InvalidArgument("bd: dt_init must be positive");
    if (!(config.output_stride > 0.0)) throw InvalidArgument("bd: output_stride must be positive");
    const double tail = weighted_tail_mass(g);
    if (config.closure.kind == ClosureKind::Full) {
        const double total = tail + g[0];
        if (std::abs(total - config.closure.rho) > 1e-10 * std::max(1.0, config.closure.rho)) {
            throw InvalidArgument("bd: full closure requires sum l gamma_l = rho");
        }
    } else {
        if (g[0] != 0.0) throw InvalidArgument("bd: Dirichlet closure requires gamma_1 = 0");
        if (std::abs(tail - 1.0) > 1e-10) {
            throw InvalidArgument("bd: Dirichlet closure requires sum_{l>=2} l gamma_l = 1");
        }
    }
}

namespace {

class BdIntegrator {
public:
    explicit BdIntegrator(const BdRunConfig& config)
        : cfg_(config), rates_(config.model, config.initial.size()), n_(config.initial.size())
    {
        state_.c = config.initial;
        state_.t = 0.0;
        if (cfg_.closure.kind == ClosureKind::Full) {
            state_.c[0] = monomer_for(state_.c, rates_, cfg_.closure);
        }
        mass0_ = conserved_mass(state_, cfg_.closure);
        if (!(mass0_ > 0.0)) throw InvalidArgument("bd: initial conserved mass must be positive");
    }

    BdRunResult run()
    {
        BdRunResult result;
        result.series.set_provenance({"bd", 0});
        const auto n_out = static_cast<std::size_t>(std::ceil(cfg_.t_end / cfg_.output_stride - 1e-9));
        record(result, 0, n_out);

        double dt = cfg_.dt_init;
        std::size_t k = 1;
        namespace odeint = boost::numeric::odeint;
        auto controlled = odeint::make_controlled(cfg_.atol, cfg_.rtol,
                                                  odeint::runge_kutta_dopri5<std::vector<double>>());

        for (; k <= n_out; ++k) {
            const double t_target = std::min(static_cast<double>(k) * cfg_.output_stride, cfg_.t_end);
            while (state_.t < t_target) {
                const double remaining = t_target - state_.t;
                const bool last = dt >= remaining * (1.0 - 1e-12);
                const double h = last ? remaining : dt;
                bool ok = false;
                double h_next = h;
                if (cfg_.scheme == BdScheme::SemiImplicit) {
                    ok = semi_implicit_step(h, h_next, result);
                } else {
                    ok = explicit_step(controlled, h, h_next, result);
                }
                if (ok) {
                    if (last) state_.t = t_target;
                    ++result.accepted_steps;
                    monitor(result);
                    // keep the proposal from the controller unless we only took a short final step
                    dt = last ? std::max(dt, h_next) : h_next;
                } else {
                    ++result.rejected_steps;
                    dt = h_next;
                }
                if (dt < cfg_.dt_min) {
                    throw SolverFailure("bd: step size underflow at t = " + std::to_string(state_.t));
                }
            }
            record(result, k, n_out);
        }
        return result;
    }

private:
    void record(BdRunResult& result, std::size_t k, std::size_t n_out)
    {
        result.series.push(bd_record(state_, cfg_.model, cfg_.closure));
        if (cfg_.snapshot_every > 0 && (k % cfg_.snapshot_every == 0 || k == n_out)) result.snapshots.push_back(state_);
    }

    void monitor(BdRunResult& result)
    {
        const double mass = conserved_mass(state_, cfg_.closure);
        const double drift = std::abs(mass - mass0_) / mass0_;
        result.max_mass_drift = std::max(result.max_mass_drift, drift);
        if (drift > cfg_.mass_tolerance) {
            throw SolverFailure("bd: mass drift " + std::to_string(drift) + " exceeds tolerance at t = " +
                                std::to_string(state_.t));
        }
        const double top_limit = cfg_.saturation_factor * mass0_ / static_cast<double>(n_);
        if (state_.c[n_ - 1] > top_limit) {
            throw SolverFailure("bd: truncation saturated (top bin density " +
                                std::to_string(state_.c[n_ - 1]) + ") at t = " + std::to_string(state_.t) +
                                "; increase ell_max");
        }
    }

    // Negative entries above -clip_threshold are zeroed; anything below rejects the step.
    bool accept_nonnegative(std::vector<double>& c, BdRunResult& result) const
    {
        for (std::size_t i = 1; i < c.size(); ++i) {
            if (c[i] < -cfg_.clip_threshold) return false;
        }
        for (std::size_t i = 1; i < c.size(); ++i) {
            if (c[i] < 0.0) {
                c[i] = 0.0;
                ++result.clipped_values;
            }
        }
        return true;
    }

    // One linearly implicit Euler step: evaporation implicit, attachment explicit,
    // c1 fixed so that the conserved mass is reproduced exactly.
    bool euler_imex(std::span<const double> c, double h, std::vector<double>& out) const
    {
        const bool full = cfg_.closure.kind == ClosureKind::Full;
        out.assign(n_, 0.0);
        auto back_solve = [&](std::vector<double>& v) {
            for (std::size_t ell = n_; ell >= 2; --ell) {
                const double inflow = ell < n_ ? h * rates_.b[ell + 1] * v[ell] : 0.0;
                v[ell - 1] = (v[ell - 1] + inflow) / (1.0 + h * rates_.b[ell]);
            }
        };
        // attachment operator applied to c (without the c1 factor); slot 1 is c1 (Full) or 0
        auto attach_op = [&](double slot1) {
            std::vector<double> v(n_, 0.0);
            for (std::size_t ell = 2; ell <= n_; ++ell) {
                const double below = ell == 2 ? slot1 : c[ell - 2];
                const double out_rate = ell < n_ ? rates_.a[ell] * c[ell - 1] : 0.0;
                v[ell - 1] = rates_.a[ell - 1] * below - out_rate;
            }
            return v;
        };

        if (full) {
            const double c1 = monomer_for(c, rates_, cfg_.closure);
            if (h * c1 * rates_.a[n_ - 1] > 1.0) return false;
            std::vector<double> a = attach_op(c1);
            for (std::size_t ell = 2; ell <= n_; ++ell) out[ell - 1] = c[ell - 1] + h * c1 * a[ell - 1];
            back_solve(out);
            out[0] = std::max(cfg_.closure.rho - weighted_tail_mass(out), 0.0);
            return true;
        }

        std::vector<double> u(c.begin(), c.end());
        u[0] = 0.0;
        back_solve(u);
        std::vector<double> v = attach_op(0.0);
        back_solve(v);
        const double denom = h * weighted_tail_mass(v);
        if (!(denom > 0.0)) return false;
        const double c1 = (mass0_ - weighted_tail_mass(u)) / denom;
        if (!(c1 > 0.0) || h * c1 * rates_.a[n_ - 1] > 1.0) return false;
        for (std::size_t ell = 2; ell <= n_; ++ell) out[ell - 1] = u[ell - 1] + h * c1 * v[ell - 1];
        out[0] = 0.0;
        return true;
    }

    // Step doubling with Richardson extrapolation; local error from the difference.
    bool semi_implicit_step(double h, double& h_next, BdRunResult& result)
    {
        std::vector<double> coarse, half, fine;
        if (!euler_imex(state_.c, h, coarse) || !euler_imex(state_.c, 0.5 * h, half) ||
            !euler_imex(half, 0.5 * h, fine)) {
            h_next = 0.5 * h;
            return false;
        }
        double err = 0.0;
        for (std::size_t i = 1; i < n_; ++i) {
            const double scale = cfg_.atol + cfg_.rtol * std::max(std::abs(state_.c[i]), std::abs(fine[i]));
            err = std::max(err, std::abs(fine[i] - coarse[i]) / scale);
        }
        const double factor = err > 0.0 ? 0.9 / std::sqrt(err) : 2.0;
        h_next = h * std::clamp(factor, 0.2, 2.0);
        if (err > 1.0) return false;

        std::vector<double> next(n_);
        for (std::size_t i = 0; i < n_; ++i) next[i] = 2.0 * fine[i] - coarse[i];
        if (!accept_nonnegative(next, result)) {
            h_next = 0.5 * h;
            return false;
        }
        if (cfg_.closure.kind == ClosureKind::Full) {
            next[0] = std::max(cfg_.closure.rho - weighted_tail_mass(next), 0.0);
        }
        state_.c = std::move(next);
        state_.t += h;
        return true;
    }

    template <class Controlled>
    bool explicit_step(Controlled& controlled, double h, double& h_next, BdRunResult& result)
    {
        namespace odeint = boost::numeric::odeint;
        const bool full = cfg_.closure.kind == ClosureKind::Full;
        auto system = [&](const std::vector<double>& x, std::vector<double>& dxdt, double) {
            const double c1 = monomer_for(x, rates_, cfg_.closure);
            rhs_into(x, c1, full ? c1 : 0.0, rates_, dxdt);
            dxdt[0] = 0.0;  // slot 1 is reconstructed algebraically after the step
        };
        std::vector<double> x = state_.c;
        double t = state_.t;
        double dt = h;
        controlled.reset();
        const auto status = controlled.try_step(system, x, t, dt);
        if (status == odeint::fail) {
            h_next = dt;
            return false;
        }
        h_next = dt;
        const double taken = t - state_.t;
        if (!accept_nonnegative(x, result)) {
            h_next = 0.5 * h;
            return false;
        }
        if (full) x[0] = std::max(cfg_.closure.rho - weighted_tail_mass(x), 0.0);
        state_.c = std::move(x);
        state_.t += taken;
        return true;
    }

    const BdRunConfig& cfg_;
    RateTable rates_;
    std::size_t n_;
    DiscreteState state_;
    double mass0_ = 0.0;
};

}  // namespace

BdRunResult run_bd(const BdRunConfig& config)
{
    validate(config);
    return BdIntegrator(config).run();
}

}  // namespace coarsen
