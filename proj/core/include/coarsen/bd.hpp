#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "coarsen/rates.hpp"
#include "coarsen/series.hpp"

namespace coarsen {

enum class ClosureKind { Full, Dirichlet };

/// How the monomer density c1 is tied to the rest of the distribution.
///   Full:      c1 = max(rho - sum_{l>=2} l c_l, 0), total mass rho.
///   Dirichlet: c(1,t) = 0 in the state; c1 chosen so sum_{l>=2} l c_l stays fixed.
struct Closure {
    ClosureKind kind = ClosureKind::Full;
    double rho = 0.0;  // Full only

    static Closure full(double rho) { return {ClosureKind::Full, rho}; }
    static Closure dirichlet() { return {ClosureKind::Dirichlet, 0.0}; }
};

/// Cluster densities c_l for l = 1..ell_max, stored at index l-1.
///
/// Under the full closure slot l = 1 holds the monomer density; under the
/// Dirichlet closure it is held at 0 and the driving monomer density lives
/// outside the state.
struct DiscreteState {
    std::vector<double> c;
    double t = 0.0;

    std::size_t ell_max() const noexcept { return c.size(); }
    double at(std::size_t ell) const { return c.at(ell - 1); }
};

/// J_l = a_l c1 c_l - b_{l+1} c_{l+1} with c_l read from the state (slot
/// l = 1 included) and c1 the monomer density driving attachment. Zero at
/// l = ell_max (closed top bin); throws InvalidArgument outside [1, ell_max].
double bd_flux(const DiscreteState& state, const RateModel& model, double c1, std::size_t ell);

/// c1 = max(rho - sum_{l>=2} l c_l, 0).
double monomer_closure_full(const DiscreteState& state, double rho);

/// c1 = z_s + [a1 q sum_{l>=2} c_l + b_2 c_2] / sum_{l>=2} a_l c_l over the
/// stored range. Throws SolverFailure when the denominator vanishes.
double monomer_closure_dirichlet(const DiscreteState& state, const RateModel& model);

/// Monomer density that makes d/dt sum_{l>=2} l c_l vanish exactly for the
/// truncated system (no flux out of the top bin). Agrees with
/// monomer_closure_dirichlet up to the top-bin attachment term.
double monomer_closure_dirichlet_truncated(const DiscreteState& state, const RateModel& model);

/// Monomer density the chosen closure assigns to the state.
double closure_monomer(const DiscreteState& state, const RateModel& model, const Closure& closure);

/// dc_l/dt for l = 1..ell_max (index l-1). Entry l = 1 is the monomer rate
/// implied by mass balance under the full closure and 0 under Dirichlet.
std::vector<double> bd_rhs(const DiscreteState& state, const RateModel& model, const Closure& closure);

/// sum l c_l over the range the closure conserves (l >= 1 Full, l >= 2 Dirichlet).
double conserved_mass(const DiscreteState& state, const Closure& closure);

enum class BdScheme { SemiImplicit, ExplicitAdaptive };

struct BdRunConfig {
    RateModel model{1.0, 1.0, 1.0};
    Closure closure = Closure::dirichlet();
    std::vector<double> initial;  // gamma_l at index l-1; length sets ell_max
    double t_end = 1.0;
    double dt_init = 1e-3;
    BdScheme scheme = BdScheme::SemiImplicit;
    double output_stride = 0.1;
    std::size_t snapshot_every = 10;  // snapshot every k-th output sample and the last; 0 disables

    double rtol = 1e-7;
    double atol = 1e-13;
    double dt_min = 1e-12;
    double mass_tolerance = 1e-8;      // relative to the initial conserved mass
    double saturation_factor = 1e-10;  // top-bin limit, times mass / ell_max
    double clip_threshold = 1e-14;
};

/// Checks the invariants on gamma listed for the chosen closure; throws InvalidArgument.
void validate(const BdRunConfig& config);

struct BdRunResult {
    TrajectorySeries series;
    std::vector<DiscreteState> snapshots;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    std::size_t clipped_values = 0;
    double max_mass_drift = 0.0;  // relative to the initial conserved mass
};

/// Integrates to t_end. Throws SolverFailure on step-size underflow, mass
/// drift beyond tolerance, or mass piling up in the top bin.
BdRunResult run_bd(const BdRunConfig& config);

/// Diagnostics record for a discrete state, moments over the closure's range.
SeriesRecord bd_record(const DiscreteState& state, const RateModel& model, const Closure& closure);

/// Initial data helpers.
std::vector<double> equilibrium_initial(const RateModel& model, std::size_t ell_max, double c1);
/// Uniform gamma on [lo, hi], scaled so sum l gamma_l = mass; zero elsewhere.
std::vector<double> band_initial(std::size_t ell_max, std::size_t lo, std::size_t hi, double mass);

}  // namespace coarsen
