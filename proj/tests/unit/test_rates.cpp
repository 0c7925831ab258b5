#include <cmath>
#include <vector>

#include "coarsen/errors.hpp"
#include "coarsen/rates.hpp"
#include "doctest.h"

using namespace coarsen;

TEST_CASE("cluster rates")
{
    const RateModel unit(1.0, 1.0, 1.0);
    auto r1 = cluster_rates(unit, 1);
    CHECK(r1.attach == doctest::Approx(1.0));
    CHECK(r1.detach == doctest::Approx(2.0));
    auto r2 = cluster_rates(unit, 2);
    CHECK(r2.attach == doctest::Approx(1.2599210498948732).epsilon(1e-14));
    CHECK(r2.detach == doctest::Approx(2.2599210498948732).epsilon(1e-14));
    auto r8 = cluster_rates(RateModel(2.0, 0.5, 0.0), 8);
    CHECK(r8.attach == doctest::Approx(4.0));
    CHECK(r8.detach == doctest::Approx(2.0));
    CHECK_THROWS_AS(unit.attach(0), InvalidArgument);
}

TEST_CASE("detach over attach decreases to z_s")
{
    const RateModel m(1.0, 1.3, 0.7);
    double prev = INFINITY;
    for (std::size_t l = 1; l < 5000; l += 37) {
        const double ratio = m.detach(l) / m.attach(l);
        CHECK(ratio > m.z_s());
        CHECK(ratio < prev);
        prev = ratio;
    }
}

TEST_CASE("equilibrium table")
{
    const RateModel unit(1.0, 1.0, 1.0);
    const auto Q = equilibrium_table(unit, 64);
    CHECK(Q.q(1) == 1.0);
    // mpmath recursion values
    CHECK(Q.q(2) == doctest::Approx(0.44249333402444210333).epsilon(1e-14));
    CHECK(Q.q(64) == doctest::Approx(1.7407350837311274727e-9).epsilon(1e-12));

    // The leading asymptote exp(-3/2 l^{2/3}) l^{-1/3} only holds on the log
    // scale; with the next-order factor exp(3/2 l^{1/3}) l^{-1/3} the log
    // difference settles to a constant.
    const auto big = equilibrium_table(unit, 20000);
    double prev_ratio = 0.0;
    std::vector<double> gap;
    for (std::size_t l : {1000u, 8000u, 20000u}) {
        const double x = static_cast<double>(l);
        const double lead = -1.5 * std::pow(x, 2.0 / 3.0) - std::log(x) / 3.0;
        const double ratio = big.log_q(l) / lead;
        CHECK(ratio > 0.9);
        CHECK(ratio < 1.0);
        CHECK(ratio > prev_ratio);
        prev_ratio = ratio;
        gap.push_back(big.log_q(l) - (lead + 1.5 * std::cbrt(x) - std::log(x) / 3.0));
    }
    // extended-precision values of the corrected gap
    CHECK(gap[0] == doctest::Approx(0.7663036289763276).epsilon(1e-9));
    CHECK(gap[2] == doctest::Approx(0.8407927142881393).epsilon(1e-9));
    CHECK(std::abs(gap[2] - gap[1]) < 0.02);
    // a1 cancels
    const auto scaled = equilibrium_table(RateModel(3.0, 1.0, 1.0), 64);
    CHECK(scaled.log_q(64) == doctest::Approx(Q.log_q(64)).epsilon(1e-13));
}

TEST_CASE("critical density")
{
    // 10^4-term extended-precision sums
    CHECK(critical_density(RateModel(1.0, 1.0, 1.0), 1e-12) == doctest::Approx(4.4684877653720019887).epsilon(1e-10));
    CHECK(critical_density(RateModel(1.0, 1.0, 2.0), 1e-12) == doctest::Approx(2.3422467004383504106).epsilon(1e-10));
    CHECK(critical_density(RateModel(5.0, 1.0, 1.0), 1e-12) ==
          doctest::Approx(critical_density(RateModel(1.0, 1.0, 1.0), 1e-12)).epsilon(1e-12));
}
