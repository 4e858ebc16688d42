#pragma once

// Shared test oracles. These stay independent of the implementation paths
// they check: edge counts by exhaustive pairwise scan, integrals by
// trapezoid sums, expectations by direct Monte Carlo.

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "steinpoisson/domain.hpp"
#include "steinpoisson/rng.hpp"

namespace sptest {

using steinpoisson::PointConfiguration;
using steinpoisson::PointView;

inline std::int64_t brute_force_edges(const PointConfiguration& c, double t) {
    std::int64_t edges = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 1; j < c.size(); ++j) {
            const double d2 = steinpoisson::torus_distance_sq(c.point(i), c.point(j));
            if (d2 > 0.0 && d2 <= t * t) ++edges;
        }
    return edges;
}

inline int brute_force_degree(const PointConfiguration& c, PointView z, double t) {
    int deg = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double d2 = steinpoisson::torus_distance_sq(z, c.point(i));
        if (d2 > 0.0 && d2 <= t * t) ++deg;
    }
    return deg;
}

/// d = 1 configuration from a coordinate list.
inline PointConfiguration config_1d(std::initializer_list<double> xs, double intensity = 1.0) {
    PointConfiguration c;
    c.dim = 1;
    c.intensity = intensity;
    c.coords.assign(xs.begin(), xs.end());
    return c;
}

inline PointConfiguration random_config(int dim, int max_points, std::uint64_t seed,
                                        std::uint64_t rep) {
    steinpoisson::RngStream rng(seed, rep, steinpoisson::Stream::Quadrature);
    const int m = 1 + static_cast<int>(rng.next_unit() * max_points);
    PointConfiguration c;
    c.dim = dim;
    c.intensity = m;
    c.coords.resize(static_cast<std::size_t>(m) * dim);
    for (auto& v : c.coords) v = rng.next_unit();
    return c;
}

/// Trapezoid-quadrature oracle for the W1 distance to N(0,1): step-1e-4
/// trapezoid sums of |F_m - Phi| on [-10,10], with panel breaks at the order
/// statistics where the integrand jumps.
inline double w1_trapezoid_oracle(std::vector<double> sample) {
    std::sort(sample.begin(), sample.end());
    const double m = static_cast<double>(sample.size());
    auto emp_cdf = [&](double x) {
        return static_cast<double>(std::upper_bound(sample.begin(), sample.end(), x) -
                                   sample.begin()) /
               m;
    };
    auto phi = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
    std::vector<double> cuts{-10.0, 10.0};
    for (double v : sample)
        if (v > -10.0 && v < 10.0) cuts.push_back(v);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    const double step = 1e-4;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (b <= a) continue;
        const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / step)));
        const double h = (b - a) / panels;
        // open the segment slightly so the jump at its endpoints is not sampled
        double prev = std::fabs(emp_cdf(a + 1e-13 * (1 + std::fabs(a))) - phi(a));
        for (int p = 1; p <= panels; ++p) {
            const double x = a + p * h;
            const double xe = (p == panels) ? x - 1e-13 * (1 + std::fabs(x)) : x;
            const double cur = std::fabs(emp_cdf(xe) - phi(x));
            total += 0.5 * (prev + cur) * h;
            prev = cur;
        }
    }
    return total;
}

} // namespace sptest
