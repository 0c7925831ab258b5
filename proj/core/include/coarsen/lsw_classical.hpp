#pragma once

#include <vector>

#include "coarsen/initial_data.hpp"
#include "coarsen/lhistory.hpp"
#include "coarsen/series.hpp"

namespace coarsen {

struct CharacteristicOptions {
    double rtol = 1e-12;
    double atol = 1e-14;
    double x_escape = 1e8;  // a backward characteristic beyond this signals an under-resolved L
};

/// Foot of the backward characteristic through (x, t) and dF/dx along it.
struct CharacteristicFoot {
    double F = 0.0;
    double jacobian = 1.0;
};

/// Integrates dx/ds = -(1 - (x/L(s))^{1/3}) backward from x(t) = x to s = L.t_begin().
///
/// The integration variable is (t - s)^{1/3}, which keeps the start at x = 0
/// smooth; the log-Jacobian is carried along the same path.
CharacteristicFoot trace_backward(double x, double t, const LHistory& L, const CharacteristicOptions& opts = {});

double characteristic_backward(double x, double t, const LHistory& L, const CharacteristicOptions& opts = {});
double characteristic_jacobian(double x, double t, const LHistory& L, const CharacteristicOptions& opts = {});

/// Time T at which the forward characteristic from x reaches 0, i.e. F(0, T) = x.
/// Throws SolverFailure if that does not happen within the history.
double exit_time(double x, const LHistory& L, const CharacteristicOptions& opts = {});

struct ClassicalOptions {
    double dt = 5e-3;
    int panels = 32;               // Gauss-Legendre panels in u = x^{1/3}
    double tail_tol = 1e-14;       // relative tail level defining x_max
    double fixed_point_tol = 1e-10;
    int max_iterations = 50;
    double L_floor = 1e-8;
    CharacteristicOptions characteristics;
};

void validate(const ClassicalOptions& opts);

struct ClassicalMoments {
    double N = 0.0;       // w(0, t)
    double mass = 0.0;    // int w dx = int x c
    double cbrt_L = 0.0;  // int x^{1/3} c / int c
    double E = 0.0;
    double M = 0.0;
    double foot0 = 0.0;      // F(0, t)
    double jacobian0 = 1.0;  // dF/dx(0, t)
};

/// Classical LSW state: the initial tail plus the L history up to time t().
class ClassicalSolver {
public:
    ClassicalSolver(InitialProfile initial, ClassicalOptions opts = {});

    double t() const noexcept { return t_; }
    const LHistory& history() const noexcept { return L_; }
    const InitialProfile& initial() const noexcept { return initial_; }
    const ClassicalOptions& options() const noexcept { return opts_; }

    /// w(x, s) = w0(F(x, s)) for s in [0, t()].
    double tail(double x, double s) const;
    double tail(double x) const { return tail(x, t_); }

    /// Moments at time s in [0, t()].
    ClassicalMoments moments(double s) const;

    /// Appends L on [t, t + dt] by fixed-point iteration.
    /// Returns the number of iterations used.
    int advance(double dt);

    SeriesRecord record() const;
    /// d Lambda / dt from dN/dt = -c0(F(0,t)) dF/dx(0,t), Lambda = mass / N.
    double semi_analytic_rate() const;
    /// Upper end of the quadrature domain at time s.
    double x_max(double s) const;

private:
    struct Quadrature {
        std::vector<double> u;
        std::vector<double> weight;
    };
    Quadrature quadrature(double u_max) const;
    ClassicalMoments moments(double s, const Quadrature& q) const;

    InitialProfile initial_;
    ClassicalOptions opts_;
    LHistory L_;
    double t_ = 0.0;
    double mass0_ = 1.0;
    ClassicalMoments current_;  // moments at t_ from the last converged iterate
};

struct TailSnapshot {
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> w;
};

struct ClassicalRunConfig {
    InitialDataSpec initial;
    double dilation = 1.0;  // runs lambda c0(lambda x) when != 1
    double t_end = 1.0;
    ClassicalOptions options;
    int snapshot_every = 50;
    int snapshot_points = 201;
};

void validate(const ClassicalRunConfig& config);

struct ClassicalRunResult {
    ClassicalSolver solver;  // final state; history() holds L(t)
    TrajectorySeries series;
    std::vector<double> semi_analytic_rate;  // one per series record
    std::vector<TailSnapshot> snapshots;
    int max_iterations_used = 0;
};

ClassicalRunResult run_classical(const ClassicalRunConfig& config);

}  // namespace coarsen
