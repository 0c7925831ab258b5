#include "coarsen/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "coarsen/errors.hpp"

namespace coarsen {

double mean_volume(const Grid& grid, const ContinuousState& state)
{
    const double n = discrete_number(grid, state.cbar);
    if (!(n > 0.0)) throw InvalidArgument("mean_volume: empty distribution");
    return discrete_mass(grid, state.cbar) / n;
}

double mean_volume(const DiscreteState& state, const Closure& closure)
{
    const std::size_t first = closure.kind == ClosureKind::Dirichlet ? 2 : 1;
    double n = 0.0;
    double m = 0.0;
    for (std::size_t l = first; l <= state.ell_max(); ++l) {
        n += state.at(l);
        m += static_cast<double>(l) * state.at(l);
    }
    if (!(n > 0.0)) throw InvalidArgument("mean_volume: empty distribution");
    return m / n;
}

EnergyScale energy_and_scale(const Grid& grid, const ContinuousState& state)
{
    const auto& xc = grid.centers();
    const auto& dx = grid.widths();
    EnergyScale out;
    double far = 0.0;
    const double x_far = 0.9 * grid.x_max();
    for (std::size_t i = 0; i < xc.size(); ++i) {
        const double u = std::cbrt(xc[i]);
        const double w = dx[i] * state.cbar[i];
        out.E += u * u * w;
        out.M += u * u * u * u * w;
        if (xc[i] > x_far) far += u * u * u * u * w;
    }
    out.M_unresolved = far > 1e-8 * out.M;
    return out;
}

EnergyScale energy_and_scale(const DiscreteState& state, const Closure& closure)
{
    const std::size_t first = closure.kind == ClosureKind::Dirichlet ? 2 : 1;
    const std::size_t n = state.ell_max();
    EnergyScale out;
    double far = 0.0;
    for (std::size_t l = first; l <= n; ++l) {
        const double u = std::cbrt(static_cast<double>(l));
        out.E += u * u * state.at(l);
        const double m = u * u * u * u * state.at(l);
        out.M += m;
        if (10 * l > 9 * n) far += m;
    }
    out.M_unresolved = far > 1e-8 * out.M;
    return out;
}

namespace {

double trapezoid_E2(const std::vector<SeriesRecord>& r, std::size_t upto)
{
    double s = 0.0;
    for (std::size_t k = 1; k <= upto; ++k) {
        s += 0.5 * (r[k].t - r[k - 1].t) * (r[k].E * r[k].E + r[k - 1].E * r[k - 1].E);
    }
    return s;
}

}  // namespace

KohnOttoReport kohn_otto_report(const TrajectorySeries& series, const KohnOttoOptions& opts)
{
    const auto& r = series.records();
    if (r.size() < 8) throw InvalidArgument("kohn_otto_report: series needs at least 8 samples");
    for (const auto& rec : r) {
        if (std::isnan(rec.E) || std::isnan(rec.M) || std::isnan(rec.mass) || std::isnan(rec.lambda)) {
            throw InvalidArgument("kohn_otto_report: series lacks E, M, mass or lambda");
        }
    }
    KohnOttoReport rep;

    rep.max_energy_increase = -std::numeric_limits<double>::infinity();
    rep.min_EM = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < r.size(); ++k) {
        rep.min_EM = std::min(rep.min_EM, r[k].E * r[k].M / (r[k].mass * r[k].mass));
        if (k > 0) rep.max_energy_increase = std::max(rep.max_energy_increase, (r[k].E - r[k - 1].E) / r[0].E);
    }
    rep.energy_nonincreasing = rep.max_energy_increase <= opts.energy_slack;
    rep.schwarz_ok = rep.min_EM >= 1.0 - opts.schwarz_slack;

    // finite-difference surrogate of |dM/dt|^2 <= K |dE/dt|
    std::vector<double> tm;
    std::vector<double> ratio;
    for (std::size_t k = 1; k < r.size(); ++k) {
        const double dt = r[k].t - r[k - 1].t;
        const double dE = std::abs(r[k].E - r[k - 1].E) / dt;
        const double dM = (r[k].M - r[k - 1].M) / dt;
        if (dE > 0.0) {
            tm.push_back(0.5 * (r[k].t + r[k - 1].t));
            ratio.push_back(dM * dM / dE);
        }
    }
    if (!ratio.empty()) {
        rep.max_ratio = *std::max_element(ratio.begin(), ratio.end());
        // least-squares trend over the last half of the run
        const double t_half = 0.5 * (r.front().t + r.back().t);
        double n = 0.0, st = 0.0, sr = 0.0, stt = 0.0, str = 0.0;
        for (std::size_t k = 0; k < ratio.size(); ++k) {
            if (tm[k] < t_half) continue;
            n += 1.0;
            st += tm[k];
            sr += ratio[k];
            stt += tm[k] * tm[k];
            str += tm[k] * ratio[k];
        }
        if (n >= 3.0) {
            const double slope = (n * str - st * sr) / (n * stt - st * st);
            const double mean = sr / n;
            rep.ratio_growth = mean > 0.0 ? slope * (r.back().t - t_half) / mean : 0.0;
            rep.ratio_bounded = std::isfinite(rep.max_ratio) && rep.ratio_growth <= opts.growth_limit;
        }
    }

    // coarsening ladder R(T) = [T^{-1} int_0^T E^2]^{-3/2} / T for T >= T0
    const double t_begin = r.front().t;
    const double t_end = r.back().t;
    rep.T0 = t_begin + (t_end - t_begin) / 16.0;
    for (const auto& rec : r) {
        if (rec.lambda >= 2.0 * r.front().lambda) {
            rep.T0 = rec.t;
            rep.T0_found = true;
            break;
        }
    }
    std::vector<double> Ts;
    for (double T = rep.T0; T < t_end; T *= 2.0) Ts.push_back(T);
    Ts.push_back(t_end);
    std::size_t k = 0;
    for (double T : Ts) {
        while (k + 1 < r.size() && r[k + 1].t <= T + 1e-12 * std::max(1.0, T)) ++k;
        const double span = r[k].t - t_begin;
        if (!(span > 0.0)) continue;
        const double avg = trapezoid_E2(r, k) / span;
        rep.ladder.push_back({r[k].t, std::pow(avg, -1.5) / span});
    }
    rep.ladder_bounded = !rep.ladder.empty();
    for (const auto& e : rep.ladder) {
        if (!(e.R <= rep.ladder.front().R * (1.0 + opts.ladder_slack))) rep.ladder_bounded = false;
    }
    return rep;
}

RateEstimate coarsening_rate(const TrajectorySeries& series, double t)
{
    const auto& r = series.records();
    std::size_t i = r.size();
    for (std::size_t k = 0; k < r.size(); ++k) {
        if (std::abs(r[k].t - t) <= 1e-9 * std::max(1.0, std::abs(t))) {
            i = k;
            break;
        }
    }
    if (i == r.size()) throw InvalidArgument("coarsening_rate: t is not a sample time");
    if (i < 2 || i + 2 >= r.size()) throw InvalidArgument("coarsening_rate: t needs two samples on each side");
    const double h1 = r[i + 1].t - r[i].t;
    const double h2 = r[i + 2].t - r[i].t;
    const auto uneven = [&](double a, double b) { return std::abs(a - b) > 1e-6 * std::abs(b); };
    if (uneven(r[i].t - r[i - 1].t, h1) || uneven(r[i].t - r[i - 2].t, h2) || uneven(h2, 2.0 * h1)) {
        throw InvalidArgument("coarsening_rate: samples around t are not evenly spaced");
    }
    RateEstimate e;
    e.stride1 = (r[i + 1].lambda - r[i - 1].lambda) / (2.0 * h1);
    e.stride2 = (r[i + 2].lambda - r[i - 2].lambda) / (2.0 * h2);
    e.rate = (4.0 * e.stride1 - e.stride2) / 3.0;
    e.smooth = std::abs(e.stride1 - e.stride2) <= 0.2 * std::abs(e.stride1) || std::abs(e.stride1 - e.stride2) < 1e-14;
    return e;
}

RateEstimate coarsening_rate(const ClassicalRunResult& run, double t)
{
    auto e = coarsening_rate(run.series, t);
    for (std::size_t k = 0; k < run.series.size(); ++k) {
        if (std::abs(run.series[k].t - t) <= 1e-9 * std::max(1.0, std::abs(t))) {
            e.semi_analytic = run.semi_analytic_rate[k];
            break;
        }
    }
    return e;
}

}  // namespace coarsen
