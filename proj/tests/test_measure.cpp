#include "opdyn/measure.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "test_util.hpp"

using opdyn::Atom;
using opdyn::ConvictionMarginal;
using opdyn::EmpiricalMeasure;
using opdyn::WeightedPoints;

TEST_CASE("measure construction validates atoms") {
    CHECK_THROWS_AS(EmpiricalMeasure({}), std::invalid_argument);
    CHECK_THROWS_AS(EmpiricalMeasure({{1.0, 1.0, 0.5}}), std::invalid_argument);  // mass 0.5
    CHECK_THROWS_AS(EmpiricalMeasure({{-1.0, 1.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(EmpiricalMeasure({{1.0, 0.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(EmpiricalMeasure({{1.0, 1.0, 0.0}}), std::invalid_argument);
    CHECK_NOTHROW(EmpiricalMeasure({{1.0, 2.0, 0.25}, {2.0, 1.0, 0.75}}));
}

TEST_CASE("atoms keep construction order, groups are exact-theta") {
    const EmpiricalMeasure mu({{2.0, 3.0, 0.2}, {1.0, 1.0, 0.3}, {3.0, 3.0, 0.5}});
    CHECK(mu.atoms()[0].y == 2.0);
    CHECK(mu.atoms()[1].y == 1.0);
    REQUIRE(mu.distinct_thetas() == std::vector<double>{1.0, 3.0});
    CHECK(mu.groups()[0] == std::vector<std::size_t>{1});
    CHECK(mu.groups()[1] == std::vector<std::size_t>{0, 2});
}

TEST_CASE("conviction marginal sums group masses") {
    const EmpiricalMeasure mu({{1.0, 1.0, 0.5}, {2.0, 3.0, 0.5}});
    const ConvictionMarginal pi = conviction_marginal(mu);
    REQUIRE(pi.size() == 2);
    CHECK(pi.atoms()[0] == std::pair<double, double>{1.0, 0.5});
    CHECK(pi.atoms()[1] == std::pair<double, double>{3.0, 0.5});

    testutil::Rng rng(101);
    for (int rep = 0; rep < 20; ++rep) {
        const auto m = testutil::random_measure(rng, 3 + rep % 17, {0.5, 1.0, 1.5, 2.5});
        const auto marg = conviction_marginal(m);
        double total = 0.0;
        for (const auto& [t, w] : marg.atoms()) total += w;
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("slice renormalizes and rejects missing convictions") {
    const EmpiricalMeasure mu({{1.0, 2.0, 0.25}, {2.0, 2.0, 0.25}, {3.0, 5.0, 0.5}});
    const auto s = slice(mu, 2.0);
    REQUIRE(s.atoms.size() == 2);
    CHECK(s.atoms[0] == std::pair<double, double>{1.0, 0.5});
    CHECK(s.atoms[1] == std::pair<double, double>{2.0, 0.5});
    CHECK_THROWS_AS(slice(mu, 7.0), std::invalid_argument);
}

TEST_CASE("1-D distance: pinned values") {
    const WeightedPoints a{{0.0, 0.5}, {1.0, 0.5}};
    const WeightedPoints b{{0.5, 1.0}};
    CHECK(opdyn::wasserstein1_1d(a, b) == doctest::Approx(0.5).epsilon(1e-14));

    // Diracs: the distance is the travel length.
    CHECK(opdyn::wasserstein1_1d({{2.0, 1.0}}, {{5.5, 1.0}}) == doctest::Approx(3.5).epsilon(1e-14));

    // Self distance is exactly zero, and unnormalized input is rejected.
    CHECK(opdyn::wasserstein1_1d(a, a) == 0.0);
    CHECK_THROWS_AS(opdyn::wasserstein1_1d({{1.0, 0.9}}, b), std::invalid_argument);
}

TEST_CASE("1-D distance equals the exhaustive coupling LP on 3x3 instances") {
    testutil::Rng rng(202);
    for (int rep = 0; rep < 50; ++rep) {
        WeightedPoints a, b;
        const auto wa = testutil::rational_weights(rng, 3);
        const auto wb = testutil::rational_weights(rng, 3);
        for (int i = 0; i < 3; ++i) a.emplace_back(testutil::uniform(rng, -2.0, 2.0), wa.w[i]);
        for (int j = 0; j < 3; ++j) b.emplace_back(testutil::uniform(rng, -2.0, 2.0), wb.w[j]);

        std::vector<double> cost(9);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) cost[i * 3 + j] = std::abs(a[i].first - b[j].first);
        const double lp = oracles::lp_transport_exhaustive(wa.w, wb.w, cost);
        CHECK(std::abs(opdyn::wasserstein1_1d(a, b) - lp) < 1e-12);
    }
}

TEST_CASE("1-D distance metric axioms on random instances") {
    testutil::Rng rng(303);
    auto random_points = [&](std::size_t n) {
        WeightedPoints pts;
        const auto w = testutil::rational_weights(rng, n);
        for (std::size_t i = 0; i < n; ++i)
            pts.emplace_back(testutil::uniform(rng, -1.0, 4.0), w.w[i]);
        return pts;
    };
    for (int rep = 0; rep < 40; ++rep) {
        const auto a = random_points(2 + rng() % 5);
        const auto b = random_points(2 + rng() % 5);
        const auto c = random_points(2 + rng() % 5);
        const double ab = opdyn::wasserstein1_1d(a, b);
        const double ba = opdyn::wasserstein1_1d(b, a);
        const double ac = opdyn::wasserstein1_1d(a, c);
        const double cb = opdyn::wasserstein1_1d(c, b);
        CHECK(ab >= 0.0);
        CHECK(std::abs(ab - ba) < 1e-12);
        CHECK(ab <= ac + cb + 1e-10);
    }
}

TEST_CASE("joint distance: pinned Dirac pair under the l1 ground metric") {
    const EmpiricalMeasure mu({{1.0, 1.0, 1.0}});
    const EmpiricalMeasure nu({{2.0, 3.0, 1.0}});
    CHECK(opdyn::wasserstein1_joint(mu, nu) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(opdyn::wasserstein1_joint(mu, mu) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("joint distance equals the exhaustive coupling LP on small instances") {
    testutil::Rng rng(404);
    const std::vector<double> pool{0.5, 1.0, 2.0, 3.5};
    for (int rep = 0; rep < 40; ++rep) {
        const auto mu = testutil::random_measure(rng, 2 + rng() % 3, pool);
        const auto nu = testutil::random_measure(rng, 2 + rng() % 3, pool);
        std::vector<double> sup, dem, cost;
        for (const auto& a : mu.atoms()) sup.push_back(a.weight);
        for (const auto& b : nu.atoms()) dem.push_back(b.weight);
        for (const auto& a : mu.atoms())
            for (const auto& b : nu.atoms())
                cost.push_back(std::abs(a.y - b.y) + std::abs(a.theta - b.theta));
        const double lp = oracles::lp_transport_exhaustive(sup, dem, cost);
        const double got = opdyn::wasserstein1_joint(mu, nu);
        CHECK(std::abs(got - lp) < 1e-12);
    }
}

TEST_CASE("joint distance metric axioms") {
    testutil::Rng rng(505);
    const std::vector<double> pool{0.5, 1.5, 2.5};
    for (int rep = 0; rep < 25; ++rep) {
        const auto a = testutil::random_measure(rng, 2 + rng() % 3, pool);
        const auto b = testutil::random_measure(rng, 2 + rng() % 3, pool);
        const auto c = testutil::random_measure(rng, 2 + rng() % 3, pool);
        const double ab = opdyn::wasserstein1_joint(a, b);
        const double ba = opdyn::wasserstein1_joint(b, a);
        const double ac = opdyn::wasserstein1_joint(a, c);
        const double cb = opdyn::wasserstein1_joint(c, b);
        CHECK(ab >= -1e-15);
        CHECK(std::abs(ab - ba) < 1e-10);
        CHECK(ab <= ac + cb + 1e-10);
    }
}

TEST_CASE("joint distance refuses oversized instances") {
    std::vector<Atom> big(2501, Atom{1.0, 1.0, 1.0 / 2501.0});
    // Fix the rounding of the last weight so the total is exactly representable.
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < big.size(); ++i) total += big[i].weight;
    big.back().weight = 1.0 - total;
    const EmpiricalMeasure mu(big);
    CHECK_THROWS_AS(opdyn::wasserstein1_joint(mu, mu), std::invalid_argument);
}

TEST_CASE("sup slice distance needs matching supports") {
    const EmpiricalMeasure mu({{1.0, 1.0, 0.5}, {2.0, 2.0, 0.5}});
    const EmpiricalMeasure nu({{1.5, 1.0, 0.5}, {2.0, 2.0, 0.5}});
    const EmpiricalMeasure other({{1.0, 1.0, 0.5}, {2.0, 3.0, 0.5}});
    CHECK(opdyn::sup_slice_distance(mu, mu) == 0.0);
    CHECK(opdyn::sup_slice_distance(mu, nu) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(opdyn::sup_slice_distance(mu, other), std::invalid_argument);
}

TEST_CASE("1-D distance matches integral-unit flow oracle on wider instances") {
    testutil::Rng rng(606);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t na = 2 + rng() % 7, nb = 2 + rng() % 7;
        const auto wa = testutil::rational_weights(rng, na);
        const auto wb = testutil::rational_weights(rng, nb);
        WeightedPoints a, b;
        for (std::size_t i = 0; i < na; ++i)
            a.emplace_back(testutil::uniform(rng, -3.0, 3.0), wa.w[i]);
        for (std::size_t j = 0; j < nb; ++j)
            b.emplace_back(testutil::uniform(rng, -3.0, 3.0), wb.w[j]);

        // Exact integral units: scale both sides to a common total.
        std::vector<long> su(na), du(nb);
        for (std::size_t i = 0; i < na; ++i) su[i] = wa.units[i] * wb.total;
        for (std::size_t j = 0; j < nb; ++j) du[j] = wb.units[j] * wa.total;
        std::vector<double> cost(na * nb);
        for (std::size_t i = 0; i < na; ++i)
            for (std::size_t j = 0; j < nb; ++j)
                cost[i * nb + j] = std::abs(a[i].first - b[j].first);
        const double units = oracles::lp_transport_ssp(su, du, cost);
        const double lp = units / (static_cast<double>(wa.total) * static_cast<double>(wb.total));
        CHECK(std::abs(opdyn::wasserstein1_1d(a, b) - lp) < 1e-12);
    }
}
