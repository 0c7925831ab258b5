#include <cmath>

#include "coarsen/errors.hpp"
#include "coarsen/lsw_diffusive.hpp"
#include "coarsen/philox.hpp"
#include "coarsen/sde.hpp"
#include "doctest.h"

using namespace coarsen;

namespace {

// Deterministic exit time for L = 1: T(y) = -3/2 u^2 - 3u - 3 log(1 - u), u = y^{1/3}.
double exit_time_closed_form(double y)
{
    const double u = std::cbrt(y);
    return -1.5 * u * u - 3.0 * u - 3.0 * std::log1p(-u);
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers")
{
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::block({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
    Philox4x32 a(5, 1), b(5, 1), c(5, 2);
    bool differs = false;
    for (int i = 0; i < 10; ++i) {
        const auto x = a();
        CHECK(x == b());
        differs = differs || x != c();
    }
    CHECK(differs);
}

TEST_CASE("noise-free paths follow the characteristic")
{
    CHECK(exit_time_closed_form(0.3) == doctest::Approx(0.64032773601749044859).epsilon(1e-14));
    const auto L = LHistory::constant(1.0, 0.0, 2.0);
    McConfig c;
    c.eps = 0.0;
    c.L = &L;
    c.T = 2.0;
    c.dt = 1e-4;
    const auto p = simulate_path(c, 0.5, 0);
    REQUIRE(p.absorbed);
    CHECK(std::abs(p.exit_time - exit_time_closed_form(0.5)) <= c.dt);
    const auto z = simulate_path(c, 0.0, 0);
    CHECK(z.absorbed);
    CHECK(z.exit_time == 0.0);
}

TEST_CASE("estimates are reproducible and independent of the worker count")
{
    const auto L = LHistory::constant(1.0, 0.0, 0.25);
    McConfig c;
    c.L = &L;
    c.n_paths = 10000;
    c.seed = 42;
    const auto a = estimate_survival_payoff(c, {}, 0.5);
    c.workers = 3;
    const auto b = estimate_survival_payoff(c, {}, 0.5);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    CHECK(a.n_absorbed + a.n_survived == a.n_paths);
    c.seed = 43;
    CHECK(estimate_survival_payoff(c, {}, 0.5).mean != a.mean);
}

TEST_CASE("short horizons and large L")
{
    auto L1 = LHistory::constant(1.0, 0.0, 1.0);
    McConfig c;
    c.L = &L1;
    c.n_paths = 4000;
    c.T = 1e-3;
    CHECK(estimate_survival_payoff(c, {}, 1.0).mean == doctest::Approx(1.0).epsilon(1e-3));

    // stronger inward drift under a larger L can only lower survival
    c.T = 0.5;
    c.n_paths = 20000;
    const double s1 = estimate_survival_payoff(c, {}, 0.4).mean;
    auto L2 = LHistory::constant(2.0, 0.0, 1.0);
    c.L = &L2;
    const double s2 = estimate_survival_payoff(c, {}, 0.4).mean;
    CHECK(s2 < s1);
}

TEST_CASE("exit time histogram")
{
    const auto L = LHistory::constant(1.0, 0.0, 1.0);
    McConfig c;
    c.eps = 1e-6;
    c.L = &L;
    c.T = 1.0;
    c.n_paths = 4000;
    c.dt = 1e-3;
    const auto h = exit_time_histogram(c, 0.3, 50);
    double mass = 0.0;
    std::size_t mode = 0;
    for (std::size_t b = 0; b < h.density.size(); ++b) {
        mass += h.density[b] * (h.edges[b + 1] - h.edges[b]);
        if (h.density[b] > h.density[mode]) mode = b;
    }
    CHECK(mass == doctest::Approx(h.absorbed_fraction).epsilon(1e-12));
    CHECK(h.absorbed_fraction + h.survival_fraction == doctest::Approx(1.0));
    const double Tx = exit_time_closed_form(0.3);
    CHECK(h.edges[mode] <= Tx + 0.02);
    CHECK(h.edges[mode + 1] >= Tx - 0.02);
}

TEST_CASE("survival probability against the adjoint equation")
{
    const auto L = LHistory::constant(1.0, 0.0, 0.25);
    GridSpec gs;
    gs.cells = 1024;
    gs.x_max = 20.0;
    gs.delta = 0.25;
    const auto g = Grid::graded(gs);
    const auto w = adjoint_solve(g, payoff_on_grid(g, {}), 0.25, L, 0.25, {1e-4});
    McConfig c;
    c.L = &L;
    c.n_paths = 20000;
    c.seed = 11;
    for (double x : {0.25, 1.0}) {
        const auto e = estimate_survival_payoff(c, {}, x);
        CHECK(std::abs(e.mean - interpolate_centers(g, w, x)) < 3.0 * e.std_error + 2e-3);
    }
}

TEST_CASE("pairing estimate matches the forward solve")
{
    DiffusiveRunConfig d;
    d.eps = 0.25;
    d.grid.cells = 512;
    d.t_end = 0.25;
    d.output_dt = 0.05;
    const auto r = run_diffusive(d);
    const Payoff cube{PayoffKind::CubeRoot, 0.0};
    const double pde = pairing(r.grid, payoff_on_grid(r.grid, cube), r.final_state.cbar);
    McConfig c;
    c.eps = 0.25;
    c.L = &r.history;
    c.T = 0.25;
    c.n_paths = 20000;
    c.seed = 3;
    const auto e = estimate_pairing(c, cube, InitialProfile::from_spec({}));
    CHECK(std::abs(e.mean - pde) < 3.0 * e.std_error + 1e-3);
}

TEST_CASE("validation")
{
    McConfig c;
    CHECK_THROWS_AS(validate(c), InvalidArgument);  // no L history
    const auto L = LHistory::constant(1.0, 0.0, 0.1);
    c.L = &L;
    c.T = 0.25;
    CHECK_THROWS_AS(estimate_survival_payoff(c, {}, 0.5), InvalidArgument);
}
