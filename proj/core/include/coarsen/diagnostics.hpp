#pragma once

#include <optional>
#include <vector>

#include "coarsen/bd.hpp"
#include "coarsen/lsw_classical.hpp"
#include "coarsen/lsw_diffusive.hpp"
#include "coarsen/series.hpp"

namespace coarsen {

/// Lambda = int x c / int c. Throws InvalidArgument on an empty distribution.
double mean_volume(const Grid& grid, const ContinuousState& state);
/// Weighted sums over l >= 2 (Dirichlet) or l >= 1 (Full).
double mean_volume(const DiscreteState& state, const Closure& closure);

struct EnergyScale {
    double E = 0.0;  // int x^{2/3} c
    double M = 0.0;  // int x^{4/3} c
    bool M_unresolved = false;  // the 4/3-moment still has weight near x_max
};

EnergyScale energy_and_scale(const Grid& grid, const ContinuousState& state);
EnergyScale energy_and_scale(const DiscreteState& state, const Closure& closure);

struct KohnOttoOptions {
    double energy_slack = 1e-12;   // relative rounding slack for E nonincreasing
    double schwarz_slack = 1e-6;   // E M >= mass^2 (1 - slack)
    double growth_limit = 0.5;     // allowed trend growth of the ratio over the last half
    double ladder_slack = 0.05;    // R(T) <= R(T0) (1 + slack)
};

struct LadderEntry {
    double T = 0.0;
    double R = 0.0;
};

struct KohnOttoReport {
    bool energy_nonincreasing = false;
    double max_energy_increase = 0.0;  // largest E(t_{k+1}) - E(t_k), relative to E(0)
    double min_EM = 0.0;               // min of E M / mass^2
    bool schwarz_ok = false;
    double max_ratio = 0.0;            // max |dM/dt|^2 / |dE/dt| over the run
    double ratio_growth = 0.0;         // trend growth over the last half, relative to its mean
    bool ratio_bounded = false;
    double T0 = 0.0;                   // first time Lambda doubles (or t_end / 16 if it never does)
    bool T0_found = false;
    std::vector<LadderEntry> ladder;
    bool ladder_bounded = false;

    bool passed() const noexcept { return energy_nonincreasing && schwarz_ok && ratio_bounded && ladder_bounded; }
};

/// Needs at least 8 samples with E, M, mass and lambda; throws InvalidArgument otherwise.
KohnOttoReport kohn_otto_report(const TrajectorySeries& series, const KohnOttoOptions& opts = {});

struct RateEstimate {
    double rate = 0.0;       // Richardson-combined centered difference
    double stride1 = 0.0;    // centered difference over +-1 sample
    double stride2 = 0.0;    // over +-2 samples
    bool smooth = true;      // the two strides agree within 20%
    double semi_analytic = not_available;
};

/// dLambda/dt at the sample time t (must match a series time to 1e-9 and have
/// two samples on each side, evenly spaced).
RateEstimate coarsening_rate(const TrajectorySeries& series, double t);
/// Same, with the classical semi-analytic value filled in.
RateEstimate coarsening_rate(const ClassicalRunResult& run, double t);

}  // namespace coarsen
