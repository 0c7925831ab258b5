#include "coarsen/grid.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "coarsen/errors.hpp"

namespace coarsen {

namespace {

// int_0^x of the unnormalized cell density
double cumulative(const GridSpec& s, double x)
{
    const double base = s.stretch * std::log1p(x / s.stretch);
    if (s.refinement == 0.0) return base;
    double layer;
    if (std::abs(s.delta - s.stretch) <= 1e-12 * s.stretch) {
        // 1 / (1 + x/d)^2
        layer = x / (1.0 + x / s.delta);
    } else {
        layer = (std::log1p(x / s.delta) - std::log1p(x / s.stretch)) / (1.0 / s.delta - 1.0 / s.stretch);
    }
    return base + s.refinement * layer;
}

}  // namespace

void validate(const GridSpec& spec)
{
    if (spec.cells < 4) throw InvalidArgument("grid.cells must be >= 4");
    if (!(spec.x_max > 0.0)) throw InvalidArgument("grid.x_max must be positive");
    if (!(spec.delta > 0.0)) throw InvalidArgument("grid.delta must be positive");
    if (!(spec.stretch > 0.0)) throw InvalidArgument("grid.stretch must be positive");
    if (!(spec.refinement >= 0.0)) throw InvalidArgument("grid.refinement must be >= 0");
}

Grid::Grid(std::vector<double> edges) : edges_(std::move(edges))
{
    const std::size_t m = edges_.size() - 1;
    centers_.resize(m);
    widths_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        centers_[i] = 0.5 * (edges_[i] + edges_[i + 1]);
        widths_[i] = edges_[i + 1] - edges_[i];
    }
    min_width_ = *std::min_element(widths_.begin(), widths_.end());
}

Grid Grid::from_edges(std::vector<double> edges)
{
    if (edges.size() < 2) throw InvalidArgument("grid needs at least one cell");
    if (edges.front() != 0.0) throw InvalidArgument("grid edges must start at 0");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) throw InvalidArgument("grid edges must increase");
    }
    return Grid(std::move(edges));
}

Grid Grid::graded(const GridSpec& spec)
{
    validate(spec);
    const double total = cumulative(spec, spec.x_max);
    std::vector<double> edges(static_cast<std::size_t>(spec.cells) + 1);
    edges.front() = 0.0;
    edges.back() = spec.x_max;
    double lo = 0.0;
    for (int i = 1; i < spec.cells; ++i) {
        const double target = total * i / spec.cells;
        auto f = [&](double x) { return cumulative(spec, x) - target; };
        std::uintmax_t iters = 100;
        const auto r = boost::math::tools::toms748_solve(f, lo, spec.x_max, boost::math::tools::eps_tolerance<double>(52), iters);
        edges[static_cast<std::size_t>(i)] = 0.5 * (r.first + r.second);
        lo = edges[static_cast<std::size_t>(i)];
    }
    return from_edges(std::move(edges));
}

Grid Grid::scaled(double factor) const
{
    if (!(factor > 0.0)) throw InvalidArgument("grid scale factor must be positive");
    std::vector<double> e = edges_;
    for (double& x : e) x *= factor;
    return Grid(std::move(e));
}

Grid Grid::refined() const
{
    std::vector<double> e;
    e.reserve(2 * edges_.size() - 1);
    for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
        e.push_back(edges_[i]);
        e.push_back(centers_[i]);
    }
    e.push_back(edges_.back());
    return Grid(std::move(e));
}

}  // namespace coarsen
