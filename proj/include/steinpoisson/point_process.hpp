#pragma once

// Sampling of Poisson point processes on the torus with intensity n * f.
//
// The point count is Poisson(n), inverted from a single uniform so that
// counts are comonotone across intensities under a shared seed. Given the
// count, points are i.i.d. with density f, realized by rejection thinning
// against the uniform proposal with acceptance probability f(x) / sup f.

#include <cstdint>
#include <limits>
#include <stdexcept>

#include "steinpoisson/density.hpp"
#include "steinpoisson/domain.hpp"
#include "steinpoisson/rng.hpp"

namespace steinpoisson {

/// One thinned draw from f (uniform densities skip the acceptance draw).
template <class Rng>
inline void sample_density_point(const Density& f, int dim, Rng& rng, double* out) {
    if (f.is_uniform()) {
        for (int k = 0; k < dim; ++k) out[k] = rng.next_unit();
        return;
    }
    const double sup = f.sup_bound();
    if (!(sup > 0.0) || !std::isfinite(sup))
        throw std::invalid_argument("sample_density_point: sup bound must be finite and positive");
    for (;;) {
        for (int k = 0; k < dim; ++k) out[k] = rng.next_unit();
        const double accept = rng.next_unit();
        if (accept * sup < f.eval(PointView(out, static_cast<std::size_t>(dim))))
            return;
    }
}

inline PointConfiguration sample_poisson_process(double n, const Density& density,
                                                 const TorusDomain& domain,
                                                 std::uint64_t seed,
                                                 std::uint64_t replication = 0) {
    if (!(n > 0.0)) throw std::invalid_argument("sample_poisson_process: intensity must be > 0");
    if (!std::isfinite(density.sup_bound()))
        throw std::invalid_argument("sample_poisson_process: density sup bound must be finite");
    if (density.dim() != domain.dim)
        throw std::invalid_argument("sample_poisson_process: density/domain dimension mismatch");

    RngStream rng(seed, replication, Stream::Points);
    const long long count = poisson_quantile(n, rng.next_unit());

    PointConfiguration config;
    config.dim = domain.dim;
    config.intensity = n;
    config.seed = seed;
    config.replication = replication;
    config.coords.resize(static_cast<std::size_t>(count) * domain.dim);
    for (long long i = 0; i < count; ++i)
        sample_density_point(density, domain.dim, rng, config.coords.data() + i * domain.dim);
    return config;
}

} // namespace steinpoisson
