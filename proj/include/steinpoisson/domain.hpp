#pragma once

// The state space: the d-dimensional unit torus [0,1)^d, d in {1,2,3}.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace steinpoisson {

struct TorusDomain {
    int dim = 1;

    explicit TorusDomain(int d) : dim(d) {
        if (d < 1 || d > 3)
            throw std::invalid_argument("TorusDomain: dimension must be 1, 2 or 3");
    }
};

using PointView = std::span<const double>;

/// Squared torus distance: per coordinate, the shorter of the direct and
/// the wrapped gap.
inline double torus_distance_sq(PointView x, PointView y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double g = std::fabs(x[i] - y[i]);
        g = std::min(g, 1.0 - g);
        s += g * g;
    }
    return s;
}

inline double torus_distance(PointView x, PointView y, const TorusDomain& domain) {
    if (x.size() != static_cast<std::size_t>(domain.dim) || y.size() != x.size())
        throw std::invalid_argument("torus_distance: dimension mismatch");
    return std::sqrt(torus_distance_sq(x, y));
}

/// A realization of the Poisson process: flat coordinate storage,
/// one point per dim-sized block.
struct PointConfiguration {
    int dim = 1;
    double intensity = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
    std::vector<double> coords;

    std::size_t size() const { return coords.size() / static_cast<std::size_t>(dim); }

    PointView point(std::size_t i) const {
        return PointView(coords.data() + i * static_cast<std::size_t>(dim),
                         static_cast<std::size_t>(dim));
    }

    void push_back(PointView p) { coords.insert(coords.end(), p.begin(), p.end()); }
};

} // namespace steinpoisson
