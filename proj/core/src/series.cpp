#include "coarsen/series.hpp"

#include "coarsen/errors.hpp"

namespace coarsen {

void TrajectorySeries::push(const SeriesRecord& record)
{
    if (!records_.empty() && !(record.t > records_.back().t)) {
        throw InvalidArgument("TrajectorySeries: times must be strictly increasing");
    }
    records_.push_back(record);
}

std::vector<double> TrajectorySeries::times() const
{
    std::vector<double> t;
    t.reserve(records_.size());
    for (const auto& r : records_) t.push_back(r.t);
    return t;
}

}  // namespace coarsen
