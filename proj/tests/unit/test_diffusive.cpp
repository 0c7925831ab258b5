#include <cmath>

#include "coarsen/diagnostics.hpp"
#include "coarsen/errors.hpp"
#include "coarsen/lsw_diffusive.hpp"
#include "doctest.h"

using namespace coarsen;

namespace {

Grid small_grid(double eps, int cells = 256, double x_max = 30.0)
{
    GridSpec g;
    g.cells = cells;
    g.x_max = x_max;
    g.delta = eps;
    return Grid::graded(g);
}

}  // namespace

TEST_CASE("diffusion coefficient")
{
    CHECK(diffusion_coefficient(0.3, 0.0) == doctest::Approx(0.3));
    CHECK(diffusion_coefficient(1.0, 7.0) == doctest::Approx(2.0).epsilon(1e-15));
    const double eps = 1e-3, x = 50.0;
    CHECK(diffusion_coefficient(eps, x) == doctest::Approx(std::pow(eps, 2.0 / 3.0) * std::cbrt(x)).epsilon(1e-4));
}

TEST_CASE("graded grid")
{
    GridSpec spec;
    spec.cells = 400;
    spec.delta = 0.1;
    const auto g = Grid::graded(spec);
    CHECK(g.size() == 400);
    CHECK(g.edges().front() == 0.0);
    CHECK(g.x_max() == doctest::Approx(spec.x_max));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g.widths()[i] > 0.0);
    CHECK(g.widths().front() < g.widths().back());
    // halving delta and x_max halves every edge
    spec.delta = 0.05;
    spec.x_max /= 2;
    spec.stretch /= 2;
    const auto h = Grid::graded(spec);
    for (std::size_t i = 0; i <= g.size(); ++i) CHECK(h.edges()[i] == doctest::Approx(g.edges()[i] / 2).epsilon(1e-12));
    CHECK(g.refined().size() == 800);
    CHECK_THROWS_AS(Grid::from_edges({0.0, 1.0, 1.0}), InvalidArgument);
}

TEST_CASE("determine_L")
{
    auto grid = Grid::from_edges({0.0, 2.0, 4.0, 6.0, 7.9, 8.1, 10.0});
    ContinuousState point{{0, 0, 0, 0, 5.0, 0}, 0.0, 0.1, 1.0};
    CHECK(determine_L(grid, point, LMode::Moment) == doctest::Approx(8.0).epsilon(1e-14));

    const auto fine = small_grid(0.05, 2048, 40.0);
    const auto s = discretize(fine, InitialProfile::from_spec({}), 0.05);
    CHECK(discrete_mass(fine, s.cbar) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(determine_L(fine, s, LMode::Moment) == doctest::Approx(1.6878766048918030127).epsilon(1e-3));
    const double Lc = determine_L(fine, s, LMode::Conserve);
    CHECK(std::abs(mass_derivative(fine, s, Lc)) < 1e-13);
    CHECK(Lc == doctest::Approx(1.6878766048918030127).epsilon(0.05));

    ContinuousState zero{std::vector<double>(fine.size(), 0.0), 0.0, 0.05, 1.0};
    CHECK_THROWS_AS(determine_L(fine, zero, LMode::Moment), InvalidArgument);
}

TEST_CASE("run_diffusive: conservation, bracket and refinement")
{
    DiffusiveRunConfig c;
    c.eps = 0.1;
    c.grid.cells = 512;
    c.t_end = 1.0;
    c.output_dt = 0.05;
    const auto r = run_diffusive(c);
    for (const auto& rec : r.series.records()) {
        CHECK(std::abs(rec.mass_residual) < 1e-8);
        CHECK(rec.L <= rec.lambda);
    }
    for (std::size_t i = 1; i < r.series.size(); ++i) {
        CHECK(r.series[i].lambda >= r.series[i - 1].lambda);
        CHECK(r.series[i].E <= r.series[i - 1].E);
    }
    const double L0 = 1.788531;  // classical reference at t = 1
    CHECK(r.series.back().L > 0.8 * L0);
    CHECK(r.series.back().L < 1.25 * L0);

    const auto fine = run_diffusive(c, make_grid(c).refined());
    CHECK(std::abs(fine.series.back().L - r.series.back().L) < 1e-3);
}

TEST_CASE("diffusive dilation pairing")
{
    for (const double lambda : {2.0, 3.0}) {
    CAPTURE(lambda);
    DiffusiveRunConfig base;
    base.eps = 0.2;
    base.grid.cells = 512;
    base.t_end = 0.5;
    base.output_dt = 0.05;
    DiffusiveRunConfig dil = base;
    dil.eps = base.eps / lambda;
    dil.dilation = lambda;
    dil.t_end = base.t_end / lambda;
    dil.output_dt = base.output_dt / lambda;
    dil.options.dt_max = base.options.dt_max / lambda;
    const Grid g = make_grid(base);
    const auto a = run_diffusive(base, g);
    const auto b = run_diffusive(dil, g.scaled(1.0 / lambda));
    REQUIRE(a.series.size() == b.series.size());
    for (std::size_t i = 0; i < a.series.size(); ++i) {
        CHECK(b.series[i].L * lambda == doctest::Approx(a.series[i].L).epsilon(1e-3));
        CHECK(b.series[i].lambda * lambda == doctest::Approx(a.series[i].lambda).epsilon(1e-3));
    }
    }
}

TEST_CASE("adjoint: maximum principle, monotonicity, duality")
{
    const double eps = 0.25, T = 0.3;
    DiffusiveRunConfig c;
    c.eps = eps;
    c.grid.cells = 512;
    c.t_end = T;
    c.output_dt = 0.05;
    const auto r = run_diffusive(c);

    const auto w1 = adjoint_solve(r.grid, payoff_on_grid(r.grid, {}), T, r.history, eps);
    for (double v : w1) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
    }
    const Payoff cube{PayoffKind::CubeRoot, 0.0};
    const auto wc = adjoint_solve(r.grid, payoff_on_grid(r.grid, cube), T, r.history, eps);
    for (std::size_t i = 1; i < wc.size(); ++i) CHECK(wc[i] >= wc[i - 1]);

    const auto wT = payoff_on_grid(r.grid, {});
    const double residual = pairing(r.grid, wT, r.final_state.cbar) - pairing(r.grid, w1, r.initial.cbar);
    CHECK(std::abs(residual) < 1e-4);
    CHECK(interpolate_centers(r.grid, w1, 0.0) == 0.0);
}

TEST_CASE("payoffs")
{
    const Payoff one{};
    const Payoff cube{PayoffKind::CubeRoot, 0.0};
    const Payoff ind{PayoffKind::Indicator, 1.0};
    CHECK(one(3.0) == 1.0);
    CHECK(cube(8.0) == doctest::Approx(2.0));
    CHECK(ind(0.5) == 0.0);
    CHECK(ind(1.5) == 1.0);
    CHECK(ind.cell_average(0.5, 1.5) == doctest::Approx(0.5));
    CHECK(cube.cell_average(0.0, 1.0) == doctest::Approx(0.75));
    CHECK(parse_payoff_kind("cuberoot") == PayoffKind::CubeRoot);
    CHECK_THROWS_AS(parse_payoff_kind("square"), InvalidArgument);
}

TEST_CASE("configuration errors")
{
    DiffusiveRunConfig c;
    c.eps = 0.0;
    CHECK_THROWS_AS(run_diffusive(c), InvalidArgument);
    DiffusiveOptions o;
    o.mode = LMode::Prescribed;
    CHECK_THROWS_AS(validate(o), InvalidArgument);
}
