#pragma once

// Deterministic quadrature helpers plus seeded Monte Carlo integration
// against a torus density.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "steinpoisson/density.hpp"
#include "steinpoisson/point_process.hpp"
#include "steinpoisson/rng.hpp"

namespace steinpoisson {

/// Composite 16-point Gauss-Legendre on [a,b].
template <class Fn>
double integrate_panels(Fn&& fn, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        total += boost::math::quadrature::gauss<double, 16>::integrate(fn, lo, lo + h);
    }
    return total;
}

struct GaussHermiteRule {
    std::vector<double> nodes;   // roots of the physicists' Hermite polynomial
    std::vector<double> weights; // sum to sqrt(pi)
};

/// Gauss-Hermite rule for weight exp(-x^2), by Newton iteration on the
/// normalized Hermite recurrence.
inline GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: need n >= 1");
    GaussHermiteRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const int half = (n + 1) / 2;
    double z = 0.0, pp = 0.0;
    for (int i = 0; i < half; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * rule.nodes[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * rule.nodes[1];
        else
            z = 2.0 * z - rule.nodes[i - 2];
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = std::pow(std::numbers::pi, -0.25);
            double p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::fabs(dz) < 1e-15) break;
        }
        rule.nodes[i] = z;
        rule.nodes[n - 1 - i] = -z;
        rule.weights[i] = 2.0 / (pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

/// E[g(N)] for N ~ N(0,1) via an n-node Gauss-Hermite rule.
template <class Fn>
double gauss_hermite_normal_mean(Fn&& g, int n) {
    const GaussHermiteRule rule = gauss_hermite(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        total += rule.weights[i] * g(std::numbers::sqrt2 * rule.nodes[i]);
    return total / std::sqrt(std::numbers::pi);
}

struct McEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

/// Monte Carlo estimate of E_{X~f}[g(X)] with sample standard error.
template <class Fn>
McEstimate mc_density_mean(Fn&& g, const Density& f, long samples, std::uint64_t seed,
                           std::uint64_t replication = 0,
                           Stream stream = Stream::Quadrature) {
    if (samples < 2) throw std::invalid_argument("mc_density_mean: need >= 2 samples");
    RngStream rng(seed, replication, stream);
    double x[3];
    double sum = 0.0, sumsq = 0.0;
    for (long i = 0; i < samples; ++i) {
        sample_density_point(f, f.dim(), rng, x);
        const double v = g(PointView(x, static_cast<std::size_t>(f.dim())));
        sum += v;
        sumsq += v * v;
    }
    McEstimate est;
    est.value = sum / samples;
    const double var = std::max(0.0, (sumsq - sum * sum / samples) / (samples - 1));
    est.stderr_ = std::sqrt(var / samples);
    return est;
}

} // namespace steinpoisson
