#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace coarsen {

/// Time-indexed record of L(t): knots (t_i, L_i), piecewise linear in between.
class LHistory {
public:
    explicit LHistory(double floor = 1e-12);

    /// L(t) = value on [t0, t1].
    static LHistory constant(double value, double t0, double t1, double floor = 1e-12);

    /// Appends a knot. Throws InvalidArgument if t does not increase or L < floor.
    void append(double t, double value);
    /// Replaces the value at the last knot.
    void set_back(double value);
    void pop_back();

    /// Piecewise-linear value; throws InvalidArgument outside [t_begin, t_end].
    double at(double t) const;
    /// Same as at(), but clamps t to the domain.
    double at_clamped(double t) const;

    bool empty() const noexcept { return times_.empty(); }
    std::size_t size() const noexcept { return times_.size(); }
    double t_begin() const;
    double t_end() const;
    double floor() const noexcept { return floor_; }
    double min_value() const;
    std::span<const double> times() const noexcept { return times_; }
    std::span<const double> values() const noexcept { return values_; }

    /// History of the dilated problem: t -> t * time_factor, L -> L * value_factor.
    LHistory scaled(double time_factor, double value_factor) const;

private:
    double floor_;
    std::vector<double> times_;
    std::vector<double> values_;
};

}  // namespace coarsen
