#include "coarsen/initial_data.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include "coarsen/errors.hpp"

namespace coarsen {

namespace {

double bump_shape(double y, double a, double b)
{
    if (y <= a || y >= b) return 0.0;
    const double s = (2.0 * y - a - b) / (b - a);
    const double u = 1.0 - s * s;
    return u * u * u;
}

// Integral of an affine segment times x^power over [x0, x1] where c is linear
// between (x0, c0) and (x1, c1); power is 0 or 1.
double segment_moment(double x0, double x1, double c0, double c1, int power)
{
    const double h = x1 - x0;
    if (power == 0) return 0.5 * h * (c0 + c1);
    // int x c(x) dx with c linear: Simpson is exact for quadratics
    const double xm = 0.5 * (x0 + x1);
    const double cm = 0.5 * (c0 + c1);
    return h / 6.0 * (x0 * c0 + 4.0 * xm * cm + x1 * c1);
}

}  // namespace

void validate(const InitialDataSpec& spec)
{
    switch (spec.kind) {
    case InitialKind::ExponentialMoment:
        return;
    case InitialKind::CompactBump:
        if (!(spec.a >= 0.0)) throw InvalidArgument("initial.a must be >= 0");
        if (!(spec.b > spec.a)) throw InvalidArgument("initial.b must exceed initial.a");
        return;
    case InitialKind::Table:
        if (spec.xs.size() < 2 || spec.xs.size() != spec.cs.size()) {
            throw InvalidArgument("initial.table needs >= 2 (x, c) pairs of equal length");
        }
        if (spec.xs.front() < 0.0) throw InvalidArgument("initial.table x values must be >= 0");
        for (std::size_t i = 1; i < spec.xs.size(); ++i) {
            if (!(spec.xs[i] > spec.xs[i - 1])) throw InvalidArgument("initial.table x values must increase");
        }
        for (double c : spec.cs) {
            if (!(c >= 0.0)) throw InvalidArgument("initial.table c values must be >= 0");
        }
        return;
    }
}

InitialProfile InitialProfile::from_spec(const InitialDataSpec& spec)
{
    validate(spec);
    InitialProfile p;
    p.spec_ = spec;
    if (spec.kind == InitialKind::Table) {
        const auto& x = spec.xs;
        const auto& c = spec.cs;
        p.table_tail_.assign(x.size(), 0.0);
        for (std::size_t i = x.size() - 1; i-- > 0;) {
            p.table_tail_[i] = p.table_tail_[i + 1] + segment_moment(x[i], x[i + 1], c[i], c[i + 1], 0);
        }
    }
    const double m = p.base_mass();
    if (!(m > 0.0)) throw InvalidArgument("initial data has zero mass");
    p.amplitude_ = 1.0 / m;
    p.mass_ = 1.0;
    return p;
}

double InitialProfile::base_density(double y) const
{
    if (y < 0.0) return 0.0;
    switch (spec_.kind) {
    case InitialKind::ExponentialMoment:
        return 0.5 * y * std::exp(-y);
    case InitialKind::CompactBump:
        return bump_shape(y, spec_.a, spec_.b);
    case InitialKind::Table: {
        const auto& x = spec_.xs;
        const auto& c = spec_.cs;
        if (y < x.front() || y > x.back()) return 0.0;
        const auto it = std::upper_bound(x.begin(), x.end(), y);
        if (it == x.end()) return c.back();
        const auto i = static_cast<std::size_t>(it - x.begin());
        const double w = (y - x[i - 1]) / (x[i] - x[i - 1]);
        return c[i - 1] + w * (c[i] - c[i - 1]);
    }
    }
    return 0.0;
}

double InitialProfile::base_tail(double y) const
{
    y = std::max(y, 0.0);
    switch (spec_.kind) {
    case InitialKind::ExponentialMoment:
        return 0.5 * (1.0 + y) * std::exp(-y);
    case InitialKind::CompactBump: {
        const double lo = std::max(y, spec_.a);
        if (lo >= spec_.b) return 0.0;
        // degree-6 polynomial: 8-point Gauss-Legendre is exact
        return boost::math::quadrature::gauss<double, 8>::integrate(
            [&](double s) { return bump_shape(s, spec_.a, spec_.b); }, lo, spec_.b);
    }
    case InitialKind::Table: {
        const auto& x = spec_.xs;
        const auto& c = spec_.cs;
        if (y <= x.front()) return table_tail_.front();
        if (y >= x.back()) return 0.0;
        const auto it = std::upper_bound(x.begin(), x.end(), y);
        const auto i = static_cast<std::size_t>(it - x.begin());
        return table_tail_[i] + segment_moment(y, x[i], base_density(y), c[i], 0);
    }
    }
    return 0.0;
}

double InitialProfile::base_mass() const
{
    switch (spec_.kind) {
    case InitialKind::ExponentialMoment:
        return 1.0;
    case InitialKind::CompactBump:
        return boost::math::quadrature::gauss<double, 8>::integrate(
            [&](double s) { return s * bump_shape(s, spec_.a, spec_.b); }, spec_.a, spec_.b);
    case InitialKind::Table: {
        double m = 0.0;
        for (std::size_t i = 0; i + 1 < spec_.xs.size(); ++i) {
            m += segment_moment(spec_.xs[i], spec_.xs[i + 1], spec_.cs[i], spec_.cs[i + 1], 1);
        }
        return m;
    }
    }
    return 0.0;
}

double InitialProfile::density(double x) const { return amplitude_ * lambda_ * base_density(lambda_ * x); }

double InitialProfile::tail(double x) const { return amplitude_ * base_tail(lambda_ * x); }

double InitialProfile::cell_average(double lo, double hi) const
{
    if (!(hi > lo)) throw InvalidArgument("cell_average: empty cell");
    return (tail(lo) - tail(hi)) / (hi - lo);
}

double InitialProfile::support_end(double rel_tol) const
{
    const double target = rel_tol * number();
    double hi = 1.0 / lambda_;
    while (tail(hi) > target) hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (tail(mid) > target ? lo : hi) = mid;
    }
    return hi;
}

double InitialProfile::quantile(double fraction) const
{
    if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("quantile fraction must lie in (0, 1)");
    const double target = fraction * number();
    double lo = 0.0;
    double hi = support_end(1e-16);
    auto f = [&](double x) { return tail(x) - target; };
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (r.first + r.second);
}

InitialProfile InitialProfile::dilated(double lambda) const
{
    if (!(lambda > 0.0)) throw InvalidArgument("dilation factor must be positive");
    InitialProfile p = *this;
    p.lambda_ = lambda_ * lambda;
    p.mass_ = mass_ / lambda;
    return p;
}

}  // namespace coarsen
