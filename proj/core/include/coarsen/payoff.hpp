#pragma once

#include <string>
#include <string_view>

namespace coarsen {

enum class PayoffKind { One, CubeRoot, Indicator };

/// Terminal payoff w0 on x > 0.
struct Payoff {
    PayoffKind kind = PayoffKind::One;
    double x0 = 0.0;  // threshold of the indicator 1_{x > x0}

    double operator()(double x) const;
    /// Average of the payoff over [lo, hi].
    double cell_average(double lo, double hi) const;
    std::string name() const;
};

/// "one", "cuberoot", "indicator"; throws InvalidArgument otherwise.
PayoffKind parse_payoff_kind(std::string_view s);

}  // namespace coarsen
