#pragma once

#include <vector>

#include "coarsen/grid.hpp"
#include "coarsen/initial_data.hpp"
#include "coarsen/lhistory.hpp"
#include "coarsen/payoff.hpp"
#include "coarsen/series.hpp"

namespace coarsen {

/// D(x) = eps (1 + x/eps)^{1/3}; the equation carries d^2/dx^2 [D c].
double diffusion_coefficient(double eps, double x);

enum class LMode {
    Moment,     // L^{1/3} = int x^{1/3} c / int c (midpoint quadrature)
    Conserve,   // L chosen so the semi-discrete mass derivative vanishes
    Prescribed, // L taken from a given history; conservation is not enforced
};

struct ContinuousState {
    std::vector<double> cbar;  // cell averages
    double t = 0.0;
    double eps = 0.1;
    double L = 1.0;
};

/// Cell averages of the profile, rescaled so the discrete mass equals profile.mass().
ContinuousState discretize(const Grid& grid, const InitialProfile& profile, double eps);

double discrete_mass(const Grid& grid, const std::vector<double>& c);
double discrete_number(const Grid& grid, const std::vector<double>& c);
/// int_x^inf c with c piecewise constant on cells.
double discrete_tail(const Grid& grid, const std::vector<double>& c, double x);

/// Semi-discrete d(mass)/dt of the assembled scheme at the given L.
double mass_derivative(const Grid& grid, const ContinuousState& state, double L);

/// L for mode Moment or Conserve. Throws InvalidArgument on an empty state and
/// SolverFailure if the conserve root is not bracketed by [L_m/2, 2 L_m].
double determine_L(const Grid& grid, const ContinuousState& state, LMode mode);

struct DiffusiveOptions {
    LMode mode = LMode::Conserve;
    double cfl = 0.4;
    double dt_max = 0.05;
    double negativity_tol = 1e-12;  // relative to max c
    int max_rejections = 10;
    const LHistory* prescribed = nullptr;  // required for LMode::Prescribed
};

void validate(const DiffusiveOptions& opts);

/// Advective stability limit for the current state and L.
double stable_dt(const Grid& grid, double L, double cfl);

/// One step of at most dt: two IMEX-Euler stages averaged (Heun form), each
/// re-determining L. The step is shortened to respect the CFL limit and halved
/// on negativity beyond tolerance. Returns the step taken; on return state.L
/// holds the L of the first stage, i.e. L at the old time.
double step_diffusive(const Grid& grid, ContinuousState& state, double dt, const DiffusiveOptions& opts);

struct Snapshot {
    double t = 0.0;
    std::vector<double> c;
};

struct DiffusiveRunConfig {
    InitialDataSpec initial;
    double dilation = 1.0;
    double eps = 0.1;
    GridSpec grid;
    bool grid_delta_from_eps = true;  // grid.delta := eps
    double t_end = 1.0;
    double output_dt = 0.01;
    int snapshot_every = 100;  // in outputs
    DiffusiveOptions options;
};

void validate(const DiffusiveRunConfig& config);
Grid make_grid(const DiffusiveRunConfig& config);

struct DiffusiveRunResult {
    Grid grid;
    ContinuousState initial;
    ContinuousState final_state;
    TrajectorySeries series;
    LHistory history;  // L at every step start and at t_end
    std::vector<Snapshot> snapshots;
    long steps = 0;
    double max_step_mass_drift = 0.0;
};

DiffusiveRunResult run_diffusive(const DiffusiveRunConfig& config);
/// Same, on a given grid (the grid fields of the config are ignored).
DiffusiveRunResult run_diffusive(const DiffusiveRunConfig& config, const Grid& grid);

SeriesRecord diffusive_record(const Grid& grid, const ContinuousState& state, double mass0, const DiffusiveOptions& opts);

struct AdjointOptions {
    double dt_max = 1e-3;  // extra subdivision of the history knots
};

/// Solves dw/dt = -[D w_xx - (1 - (x/L)^{1/3}) w_x] backward from w(., T) = w_T,
/// with w(0, t) = 0 and zero slope at x_max, by backward Euler on the knots of L
/// (refined to dt_max). Values are at cell centers; returns w(., L.t_begin()).
std::vector<double> adjoint_solve(const Grid& grid, const std::vector<double>& w_T, double T, const LHistory& L,
                                  double eps, const AdjointOptions& opts = {});

/// Payoff cell averages on the grid.
std::vector<double> payoff_on_grid(const Grid& grid, const Payoff& payoff);

/// Linear interpolation of cell-center values, with value 0 at x = 0.
double interpolate_centers(const Grid& grid, const std::vector<double>& values, double x);

/// sum_i width_i * a_i * b_i
double pairing(const Grid& grid, const std::vector<double>& a, const std::vector<double>& b);

}  // namespace coarsen
