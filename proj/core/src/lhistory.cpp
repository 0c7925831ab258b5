#include "coarsen/lhistory.hpp"

#include <algorithm>
#include <string>

#include "coarsen/errors.hpp"

namespace coarsen {

LHistory::LHistory(double floor) : floor_(floor)
{
    if (!(floor > 0.0)) throw InvalidArgument("LHistory floor must be positive");
}

LHistory LHistory::constant(double value, double t0, double t1, double floor)
{
    LHistory h(floor);
    h.append(t0, value);
    h.append(t1, value);
    return h;
}

void LHistory::append(double t, double value)
{
    if (!times_.empty() && !(t > times_.back())) {
        throw InvalidArgument("LHistory: knot times must increase");
    }
    if (!(value >= floor_)) {
        throw InvalidArgument("LHistory: L = " + std::to_string(value) + " below floor");
    }
    times_.push_back(t);
    values_.push_back(value);
}

void LHistory::set_back(double value)
{
    if (values_.empty()) throw InvalidArgument("LHistory: set_back on empty history");
    if (!(value >= floor_)) {
        throw InvalidArgument("LHistory: L = " + std::to_string(value) + " below floor");
    }
    values_.back() = value;
}

void LHistory::pop_back()
{
    if (values_.empty()) throw InvalidArgument("LHistory: pop_back on empty history");
    times_.pop_back();
    values_.pop_back();
}

double LHistory::t_begin() const
{
    if (times_.empty()) throw InvalidArgument("LHistory is empty");
    return times_.front();
}

double LHistory::t_end() const
{
    if (times_.empty()) throw InvalidArgument("LHistory is empty");
    return times_.back();
}

double LHistory::min_value() const
{
    if (values_.empty()) throw InvalidArgument("LHistory is empty");
    return *std::min_element(values_.begin(), values_.end());
}

double LHistory::at(double t) const
{
    if (times_.empty()) throw InvalidArgument("LHistory is empty");
    const double slack = 1e-12 * std::max(1.0, std::abs(times_.back()));
    if (t < times_.front() - slack || t > times_.back() + slack) {
        throw InvalidArgument("LHistory: t = " + std::to_string(t) + " outside [" +
                              std::to_string(times_.front()) + ", " + std::to_string(times_.back()) + "]");
    }
    return at_clamped(t);
}

double LHistory::at_clamped(double t) const
{
    if (times_.empty()) throw InvalidArgument("LHistory is empty");
    if (times_.size() == 1 || t <= times_.front()) return values_.front();
    if (t >= times_.back()) return values_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto i = static_cast<std::size_t>(it - times_.begin());
    const double w = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
    return values_[i - 1] + w * (values_[i] - values_[i - 1]);
}

LHistory LHistory::scaled(double time_factor, double value_factor) const
{
    LHistory out(floor_ * value_factor);
    for (std::size_t i = 0; i < times_.size(); ++i) {
        out.append(times_[i] * time_factor, values_[i] * value_factor);
    }
    return out;
}

}  // namespace coarsen
