#include "coarsen/payoff.hpp"

#include <algorithm>
#include <cmath>

#include "coarsen/errors.hpp"

namespace coarsen {

double Payoff::operator()(double x) const
{
    if (x <= 0.0) return 0.0;
    switch (kind) {
    case PayoffKind::One:
        return 1.0;
    case PayoffKind::CubeRoot:
        return std::cbrt(x);
    case PayoffKind::Indicator:
        return x > x0 ? 1.0 : 0.0;
    }
    return 0.0;
}

double Payoff::cell_average(double lo, double hi) const
{
    if (!(hi > lo)) throw InvalidArgument("payoff cell average: empty cell");
    lo = std::max(lo, 0.0);
    switch (kind) {
    case PayoffKind::One:
        return 1.0;
    case PayoffKind::CubeRoot: {
        const auto p = [](double x) { return 0.75 * x * std::cbrt(x); };
        return (p(hi) - p(lo)) / (hi - lo);
    }
    case PayoffKind::Indicator:
        return std::clamp((hi - std::max(lo, x0)) / (hi - lo), 0.0, 1.0);
    }
    return 0.0;
}

std::string Payoff::name() const
{
    switch (kind) {
    case PayoffKind::One:
        return "one";
    case PayoffKind::CubeRoot:
        return "cuberoot";
    case PayoffKind::Indicator:
        return "indicator";
    }
    return "unknown";
}

PayoffKind parse_payoff_kind(std::string_view s)
{
    if (s == "one") return PayoffKind::One;
    if (s == "cuberoot") return PayoffKind::CubeRoot;
    if (s == "indicator") return PayoffKind::Indicator;
    throw InvalidArgument("payoff must be one of one, cuberoot, indicator");
}

}  // namespace coarsen
