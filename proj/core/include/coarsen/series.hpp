#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace coarsen {

inline constexpr double not_available = std::numeric_limits<double>::quiet_NaN();

/// One sample of the coarsening functionals. Fields a solver does not
/// produce are left as not_available.
struct SeriesRecord {
    double t = 0.0;
    double lambda = not_available;  // mean cluster volume
    double L = not_available;       // conservation-enforcing parameter
    double E = not_available;       // int x^{2/3} c
    double M = not_available;       // int x^{4/3} c
    double N = not_available;       // number, int c
    double mass = not_available;    // int x c (or sum l c_l)
    double mass_residual = not_available;
    double c1 = not_available;      // monomer density (discrete systems)
    double g = not_available;       // sum_{l>=2} c_l (discrete systems)
};

struct Provenance {
    std::string solver;
    std::uint64_t config_hash = 0;
};

/// Time series of diagnostics for one run; times strictly increasing.
class TrajectorySeries {
public:
    TrajectorySeries() = default;
    explicit TrajectorySeries(Provenance provenance) : provenance_(std::move(provenance)) {}

    /// Appends a record. Throws InvalidArgument if t does not increase.
    void push(const SeriesRecord& record);

    const std::vector<SeriesRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const SeriesRecord& operator[](std::size_t i) const { return records_[i]; }
    const SeriesRecord& back() const { return records_.back(); }
    std::vector<double> times() const;

    const Provenance& provenance() const noexcept { return provenance_; }
    void set_provenance(Provenance p) { provenance_ = std::move(p); }

private:
    Provenance provenance_;
    std::vector<SeriesRecord> records_;
};

}  // namespace coarsen
