#pragma once

#include <cstdint>
#include <vector>

#include "coarsen/initial_data.hpp"
#include "coarsen/lhistory.hpp"
#include "coarsen/payoff.hpp"

namespace coarsen {

enum class BoundaryScheme { Naive, Bridge };

struct McConfig {
    double eps = 0.25;              // 0 switches the noise off
    const LHistory* L = nullptr;    // required; queried at t0 + s
    double t0 = 0.0;
    double T = 0.25;                // horizon
    std::int64_t n_paths = 10000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    BoundaryScheme boundary = BoundaryScheme::Bridge;
    int workers = 1;
};

void validate(const McConfig& config);

struct PathResult {
    bool absorbed = false;
    double exit_time = 0.0;  // absolute time of absorption, if absorbed
    double x_final = 0.0;    // position at t0 + T, if not absorbed
};

/// Euler-Maruyama path of dX = -(1 - (X/L)^{1/3}) ds + sqrt(2 eps) (1 + X/eps)^{1/6} dW
/// from X(t0) = x_start, absorbed at 0. The noise stream is (seed, path_index).
PathResult simulate_path(const McConfig& config, double x_start, std::uint64_t path_index);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t n_paths = 0;
    std::int64_t n_absorbed = 0;
    std::int64_t n_survived = 0;
};

/// E[w0(X(t0 + T)); tau > t0 + T] from x_start.
McEstimate estimate_survival_payoff(const McConfig& config, const Payoff& payoff, double x_start);

/// N0 * E[w0(X(T)); tau > T] with X(t0) drawn from c0 / N0, which estimates
/// int w_eps(x, t0) c0(x) dx = int w0(x) c(x, t0 + T) dx.
McEstimate estimate_pairing(const McConfig& config, const Payoff& payoff, const InitialProfile& initial);

struct ExitTimeHistogram {
    std::vector<double> edges;    // absolute times
    std::vector<double> density;  // integrates to the absorbed fraction
    double absorbed_fraction = 0.0;
    double survival_fraction = 0.0;
};

ExitTimeHistogram exit_time_histogram(const McConfig& config, double x_start, int bins);

}  // namespace coarsen
