#include <cmath>

#include "coarsen/errors.hpp"
#include "coarsen/lsw_classical.hpp"
#include "doctest.h"

using namespace coarsen;

// Reference values from the separable ODE ds = -dx / (1 - x^{1/3}) in extended precision.
namespace oracle {
constexpr double F0_half = 0.251005433430258428;
constexpr double F_half_half = 0.59108292551642598683;
constexpr double T_exit_03 = 0.64032773601749044859;
constexpr double J0_half = 0.36919609350077700311;
constexpr double J_half_half = 0.77928707152336699031;
constexpr double J1_quarter = 0.92004441462932324789;
constexpr double N_half = 0.4866524628758748216;
constexpr double cbrt_L0 = 1.1906393487589989483;  // Gamma(7/3)
constexpr double E0 = 0.75228774412577800941;
constexpr double M0 = 1.3890792402188321063;
}  // namespace oracle

TEST_CASE("characteristics with L = 1")
{
    const auto L = LHistory::constant(1.0, 0.0, 2.0);
    CHECK(characteristic_backward(0.0, 0.5, L) == doctest::Approx(oracle::F0_half).epsilon(1e-10));
    CHECK(characteristic_backward(0.5, 0.5, L) == doctest::Approx(oracle::F_half_half).epsilon(1e-10));
    CHECK(exit_time(0.3, L) == doctest::Approx(oracle::T_exit_03).epsilon(1e-10));
    CHECK(characteristic_jacobian(1.0, 0.25, L) == doctest::Approx(oracle::J1_quarter).epsilon(1e-10));
    CHECK(characteristic_jacobian(0.5, 0.5, L) == doctest::Approx(oracle::J_half_half).epsilon(1e-9));
    // finite and nonzero at the origin
    CHECK(characteristic_jacobian(0.0, 0.5, L) == doctest::Approx(oracle::J0_half).epsilon(1e-9));
    CHECK(characteristic_backward(1.0, 1.7, L) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(characteristic_jacobian(0.7, 0.0, L) == 1.0);
}

TEST_CASE("characteristic properties under a varying L")
{
    LHistory L(1e-8);
    for (int k = 0; k <= 20; ++k) L.append(0.1 * k, 1.0 + 0.3 * std::sin(1.3 * k));
    const double t = 1.7;
    double prevF = -1.0, prevJ = 0.0;
    for (double x = 0.0; x < 6.0; x += 0.37) {
        const auto foot = trace_backward(x, t, L);
        CHECK(foot.F > prevF);
        CHECK(foot.F < x + t);
        CHECK(foot.jacobian > 0.0);
        CHECK(foot.jacobian <= 1.0);
        CHECK(foot.jacobian > prevJ);
        prevF = foot.F;
        prevJ = foot.jacobian;
    }
    const double F0 = characteristic_backward(0.0, t, L);
    CHECK(F0 > 0.0);
    CHECK(F0 < t);
    // the Jacobian is the derivative of the foot
    const double h = 1e-5;
    const double fd = (characteristic_backward(2.0 + h, t, L) - characteristic_backward(2.0 - h, t, L)) / (2 * h);
    CHECK(characteristic_jacobian(2.0, t, L) == doctest::Approx(fd).epsilon(1e-7));
    CHECK_THROWS_AS(characteristic_backward(1.0, 2.5, L), InvalidArgument);
}

TEST_CASE("initial moments of the exponential-moment data")
{
    const ClassicalSolver s(InitialProfile::from_spec({}));
    const auto m = s.moments(0.0);
    CHECK(m.N == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(m.mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.cbrt_L == doctest::Approx(oracle::cbrt_L0).epsilon(1e-12));
    CHECK(m.E == doctest::Approx(oracle::E0).epsilon(1e-12));
    CHECK(m.M == doctest::Approx(oracle::M0).epsilon(1e-12));
    const auto r = s.record();
    CHECK(r.lambda == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.L == doctest::Approx(std::pow(oracle::cbrt_L0, 3)).epsilon(1e-12));
    CHECK(s.tail(0.7, 0.0) == doctest::Approx(1.7 * std::exp(-0.7) / 2).epsilon(1e-14));
}

TEST_CASE("prescribed L = 1 tail follows the characteristic")
{
    // w(0, t) = w0(F(0, t)) with the exact foot
    const double y = oracle::F0_half;
    CHECK((1 + y) * std::exp(-y) / 2 == doctest::Approx(oracle::N_half).epsilon(1e-14));
}

TEST_CASE("classical run: conservation, monotonicity and rates")
{
    ClassicalRunConfig c;
    c.t_end = 0.6;
    c.options.dt = 0.02;
    c.options.panels = 16;
    const auto r = run_classical(c);
    const auto& s = r.series;
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(std::abs(s[i].mass_residual) < 2e-6);
        CHECK(s[i].L <= s[i].lambda);
        if (i > 0) CHECK(s[i].lambda >= s[i - 1].lambda);
    }
    // Lambda = mass / w0(F(0, t))
    const double F0 = characteristic_backward(0.0, r.solver.t(), r.solver.history());
    CHECK(s.back().lambda == doctest::Approx(1.0 / r.solver.initial().tail(F0)).epsilon(1e-10));
    // semi-analytic rate against a centered difference of the series
    const std::size_t i = s.size() / 2;
    const double fd = (s[i + 1].lambda - s[i - 1].lambda) / (s[i + 1].t - s[i - 1].t);
    CHECK(r.semi_analytic_rate[i] == doctest::Approx(fd).epsilon(1e-3));
}

TEST_CASE("time step convergence is second order")
{
    auto final_L = [](double dt) {
        ClassicalRunConfig c;
        c.t_end = 0.4;
        c.options.dt = dt;
        c.options.panels = 16;
        return run_classical(c).series.back().L;
    };
    const double a = final_L(0.04), b = final_L(0.02), d = final_L(0.01);
    const double order = std::log2(std::abs(a - b) / std::abs(b - d));
    CHECK(order > 1.6);
    CHECK(order < 2.4);
}

TEST_CASE("classical dilation covariance")
{
    // lambda = 2 rescales exactly in binary floating point; 3 does not
    for (const double lambda : {2.0, 3.0}) {
    CAPTURE(lambda);
    ClassicalRunConfig base;
    base.t_end = 0.4;
    base.options.dt = 0.02;
    base.options.panels = 16;
    ClassicalRunConfig dil = base;
    dil.dilation = lambda;
    dil.t_end = base.t_end / lambda;
    dil.options.dt = base.options.dt / lambda;
    const auto a = run_classical(base);
    const auto b = run_classical(dil);
    REQUIRE(a.series.size() == b.series.size());
    for (std::size_t i = 0; i < a.series.size(); ++i) {
        CHECK(b.series[i].t * lambda == doctest::Approx(a.series[i].t).epsilon(1e-12));
        CHECK(b.series[i].L * lambda == doctest::Approx(a.series[i].L).epsilon(1e-4));
        CHECK(b.series[i].lambda * lambda == doctest::Approx(a.series[i].lambda).epsilon(1e-4));
    }
    }
}

TEST_CASE("compact bump data")
{
    InitialDataSpec spec;
    spec.kind = InitialKind::CompactBump;
    spec.a = 0.5;
    spec.b = 1.5;
    const auto p = InitialProfile::from_spec(spec);
    CHECK(p.mass() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(p.tail(1.5) == 0.0);
    CHECK(p.density(0.4) == 0.0);
    ClassicalRunConfig c;
    c.initial = spec;
    c.t_end = 0.3;
    c.options.dt = 0.02;
    c.options.panels = 16;
    const auto r = run_classical(c);
    CHECK(std::abs(r.series.back().mass_residual) < 1e-6);
}

TEST_CASE("option validation")
{
    ClassicalOptions o;
    o.dt = 0.0;
    CHECK_THROWS_AS(validate(o), InvalidArgument);
    const auto L = LHistory::constant(1.0, 0.0, 0.2);
    CHECK_THROWS_AS(exit_time(0.9, L), SolverFailure);
}
