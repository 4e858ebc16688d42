#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "steinpoisson/point_process.hpp"

using namespace steinpoisson;
using Catch::Approx;

TEST_CASE("sampling rejects bad arguments") {
    const TorusDomain dom(1);
    const Density f = Density::uniform(1);
    CHECK_THROWS_AS(sample_poisson_process(0.0, f, dom, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_poisson_process(-5.0, f, dom, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_poisson_process(10.0, Density::uniform(2), dom, 1),
                    std::invalid_argument);
}

TEST_CASE("bit-identical reproducibility") {
    const TorusDomain dom(2);
    const Density f = Density::sine(2, 0.3);
    const auto a = sample_poisson_process(50.0, f, dom, 987654321, 3);
    const auto b = sample_poisson_process(50.0, f, dom, 987654321, 3);
    REQUIRE(a.coords == b.coords);
    const auto c = sample_poisson_process(50.0, f, dom, 987654322, 3);
    CHECK(a.coords != c.coords);
}

TEST_CASE("counts are Poisson(n): mean and variance near 100") {
    const TorusDomain dom(1);
    const Density f = Density::uniform(1);
    const int reps = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int r = 0; r < reps; ++r) {
        const double k = static_cast<double>(sample_poisson_process(100.0, f, dom, 31, r).size());
        sum += k;
        sumsq += k * k;
    }
    const double mean = sum / reps;
    const double var = (sumsq - sum * sum / reps) / (reps - 1);
    CHECK(std::fabs(mean - 100.0) < 3.0 * std::sqrt(100.0 / reps));
    const double se_var = std::sqrt((100.0 * 301.0 - 1e4) / reps);
    CHECK(std::fabs(var - 100.0) < 4.0 * se_var);
}

TEST_CASE("thinning reproduces the sine density") {
    const double a = 0.5;
    const Density f = Density::sine(1, a);
    const TorusDomain dom(1);

    SECTION("mass of [0, 1/2] = 1/2 + 1/(2 pi)") {
        const double target = 0.5 + 1.0 / (2.0 * std::numbers::pi);
        double in_half = 0.0, total = 0.0;
        for (int r = 0; r < 10000; ++r) {
            const auto config = sample_poisson_process(100.0, f, dom, 71, r);
            for (std::size_t i = 0; i < config.size(); ++i)
                in_half += config.point(i)[0] < 0.5 ? 1.0 : 0.0;
            total += static_cast<double>(config.size());
        }
        const double frac = in_half / total;
        const double se = std::sqrt(target * (1.0 - target) / total);
        CHECK(std::fabs(frac - target) < 3.0 * se);
    }

    SECTION("Kolmogorov-Smirnov on 1e5 points") {
        const auto config = sample_poisson_process(1e5, f, dom, 20240601);
        std::vector<double> xs(config.coords);
        std::sort(xs.begin(), xs.end());
        auto cdf = [&](double x) {
            return x + a * (1.0 - std::cos(2 * std::numbers::pi * x)) / (2 * std::numbers::pi);
        };
        double dmax = 0.0;
        const double m = static_cast<double>(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            dmax = std::max(dmax, std::fabs(cdf(xs[i]) - (i + 1) / m));
            dmax = std::max(dmax, std::fabs(cdf(xs[i]) - i / m));
        }
        CHECK(dmax < 1.628 / std::sqrt(m)); // 99% band
    }
}

TEST_CASE("coordinates stay in [0,1)^d") {
    const auto config = sample_poisson_process(500.0, Density::sine(3, 0.7), TorusDomain(3), 5);
    for (double v : config.coords) {
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("counts are comonotone across intensities under a shared seed") {
    const TorusDomain dom(1);
    const Density f = Density::uniform(1);
    for (int r = 0; r < 200; ++r) {
        const auto small = sample_poisson_process(256.0, f, dom, 17, r);
        const auto large = sample_poisson_process(512.0, f, dom, 17, r);
        CHECK(small.size() <= large.size());
        // shared point stream: the common prefix coincides
        const std::size_t overlap = std::min(small.size(), large.size());
        for (std::size_t i = 0; i < overlap; ++i)
            CHECK(small.point(i)[0] == large.point(i)[0]);
    }
}
