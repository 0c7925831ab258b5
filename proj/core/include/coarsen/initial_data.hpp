#pragma once

#include <vector>

namespace coarsen {

enum class InitialKind {
    ExponentialMoment,  // c0(x) = x e^{-x} / 2
    CompactBump,        // (1 - s^2)^3 on [a, b], s the rescaled coordinate
    Table,              // piecewise-linear through sampled (x, c) pairs
};

struct InitialDataSpec {
    InitialKind kind = InitialKind::ExponentialMoment;
    double a = 0.5;  // bump support
    double b = 1.5;
    std::vector<double> xs;  // table abscissae, strictly increasing, >= 0
    std::vector<double> cs;  // table values, >= 0
};

/// Validates a spec; throws InvalidArgument naming the offending field.
void validate(const InitialDataSpec& spec);

/// Initial cluster-volume density with its tail w0(x) = int_x^inf c0.
///
/// Built with unit mass int x c0 = 1. dilated(lambda) gives lambda c0(lambda x),
/// whose mass is 1/lambda.
class InitialProfile {
public:
    static InitialProfile from_spec(const InitialDataSpec& spec);

    double density(double x) const;
    double tail(double x) const;
    double number() const { return tail(0.0); }
    double mass() const { return mass_; }
    /// Exact cell average (tail(lo) - tail(hi)) / (hi - lo).
    double cell_average(double lo, double hi) const;
    /// Smallest x (to bisection accuracy) with tail(x) <= rel_tol * number().
    double support_end(double rel_tol) const;
    /// x with tail(x) = fraction * number(), fraction in (0, 1).
    double quantile(double fraction) const;

    InitialProfile dilated(double lambda) const;
    double dilation() const noexcept { return lambda_; }
    const InitialDataSpec& spec() const noexcept { return spec_; }

private:
    InitialProfile() = default;

    double base_density(double y) const;
    double base_tail(double y) const;
    double base_mass() const;

    InitialDataSpec spec_;
    double amplitude_ = 1.0;
    double lambda_ = 1.0;
    double mass_ = 1.0;
    std::vector<double> table_tail_;  // tail at each table abscissa (unscaled)
};

}  // namespace coarsen
