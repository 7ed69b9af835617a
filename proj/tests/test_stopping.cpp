#include "rsgnet/stopping.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

using namespace rsgnet;

TEST_CASE("uniform stopping pmf") {
    const auto dist = build_stopping(StoppingKind::Uniform, 4);
    REQUIRE(dist.pmf.size() == 4);
    for (double p : dist.pmf) CHECK(p == 0.25);
}

TEST_CASE("stepsize-coupled pmf") {
    SUBCASE("constant stepsize reduces to uniform") {
        const auto dist = build_stopping(StoppingKind::StepsizeCoupled, 2, 0.1, 0.0);
        CHECK(dist.pmf[0] == 0.5);
        CHECK(dist.pmf[1] == 0.5);
    }
    SUBCASE("decaying stepsize weights early iterations") {
        // weights 0.1*(1-0.008125...) and 0.05*(1-...), normalized
        const auto dist = build_stopping(StoppingKind::StepsizeCoupled, 2, 0.1, 1.0);
        CHECK(dist.pmf[0] == doctest::Approx(0.6569832402234637).epsilon(1e-14));
        CHECK(dist.pmf[1] == doctest::Approx(0.3430167597765363).epsilon(1e-14));
    }
    SUBCASE("positivity violation names the offending iteration") {
        CHECK_THROWS_WITH_AS(build_stopping(StoppingKind::StepsizeCoupled, 3, 1.3, 0.0),
                             doctest::Contains("k=1"), std::invalid_argument);
    }
    SUBCASE("pmf always sums to one") {
        Rng rng(5);
        for (int i = 0; i < 100; ++i) {
            const int n = 1 + uniform_index(rng, 50);
            const double gamma = uniform_range(rng, 0.01, 1.2);
            const double rho = uniform_range(rng, 0.0, 1.5);
            const auto dist = build_stopping(StoppingKind::StepsizeCoupled, n, gamma, rho);
            double sum = 0.0;
            for (double p : dist.pmf) sum += p;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("custom stopping") {
    const auto dist = custom_stopping({1.0, 1.0, 2.0});
    CHECK(dist.pmf[2] == 0.5);
    CHECK_THROWS_AS(custom_stopping({1.0, -0.5}), std::invalid_argument);
    CHECK_THROWS_AS(custom_stopping({}), std::invalid_argument);
    CHECK_THROWS_AS(custom_stopping({0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("sampling the stopping iteration") {
    SUBCASE("degenerate pmf always stops at its atom") {
        Rng rng(17);
        const auto one = custom_stopping({1.0});
        for (int i = 0; i < 20; ++i) CHECK(sample_stopping(one, rng) == 1);
        const auto at3 = point_stopping(5, 3);
        for (int i = 0; i < 20; ++i) CHECK(sample_stopping(at3, rng) == 3);
    }
    SUBCASE("uniform frequencies over 1e5 draws") {
        Rng rng(99);
        const auto dist = build_stopping(StoppingKind::Uniform, 10);
        std::vector<int> counts(10, 0);
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) ++counts[sample_stopping(dist, rng) - 1];
        double chi_square = 0.0;
        for (int c : counts) {
            const double freq = static_cast<double>(c) / draws;
            CHECK(freq > 0.09);
            CHECK(freq < 0.11);
            const double expected = draws / 10.0;
            chi_square += (c - expected) * (c - expected) / expected;
        }
        CHECK(chi_square < 30.0);  // df=9, far beyond the 99.9% quantile
    }
    SUBCASE("fixed seed reproduces the draw") {
        const auto dist = build_stopping(StoppingKind::Uniform, 1000);
        Rng a(4), b(4);
        for (int i = 0; i < 50; ++i) CHECK(sample_stopping(dist, a) == sample_stopping(dist, b));
    }
    SUBCASE("support is exactly 1..N") {
        Rng rng(8);
        const auto dist = build_stopping(StoppingKind::StepsizeCoupled, 7, 0.9, 1.0);
        for (int i = 0; i < 2000; ++i) {
            const int r = sample_stopping(dist, rng);
            CHECK(r >= 1);
            CHECK(r <= 7);
        }
    }
}
