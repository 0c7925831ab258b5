#pragma once

#include <cstddef>
#include <vector>

namespace coarsen {

/// Cell density rho(x) ~ [1 + refinement / (1 + x/delta)] / (1 + x/stretch):
/// cells are fine on [0, delta], uniform-ish up to stretch, then geometric.
struct GridSpec {
    int cells = 1024;
    double x_max = 40.0;
    double delta = 0.05;
    double stretch = 1.0;
    double refinement = 4.0;
};

void validate(const GridSpec& spec);

class Grid {
public:
    static Grid graded(const GridSpec& spec);
    /// Throws InvalidArgument unless edges start at 0 and strictly increase.
    static Grid from_edges(std::vector<double> edges);

    std::size_t size() const noexcept { return centers_.size(); }
    const std::vector<double>& edges() const noexcept { return edges_; }
    const std::vector<double>& centers() const noexcept { return centers_; }
    const std::vector<double>& widths() const noexcept { return widths_; }
    double x_max() const noexcept { return edges_.back(); }
    double min_width() const noexcept { return min_width_; }

    /// Grid with every edge multiplied by factor.
    Grid scaled(double factor) const;
    /// Each cell split in two.
    Grid refined() const;

private:
    explicit Grid(std::vector<double> edges);

    std::vector<double> edges_;
    std::vector<double> centers_;
    std::vector<double> widths_;
    double min_width_ = 0.0;
};

}  // namespace coarsen
