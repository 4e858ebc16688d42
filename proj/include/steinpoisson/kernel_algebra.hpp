#pragma once

// Chaos kernels of order-2 U-statistics and their contractions.
//
// For F = sum_{(x1,x2) in eta^2_{neq}} h(x1,x2) under a Poisson process of
// intensity n*f, the chaotic representation is F = E(F) + I_1(h1) + I_2(h2)
// with h1(z) = 2n int h(a,z) f(a) da and h2 = h.
//
// Convention: the underlying construction lives on the marked space
// R_+ x Z with control measure dt x mu. The mark dimension is folded away;
// every L^p norm or inner product "over nu" below carries one explicit
// factor n per free argument from int_0^n dt. All closed forms are exact
// on the torus for t < 1/2.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include "steinpoisson/density.hpp"
#include "steinpoisson/domain.hpp"
#include "steinpoisson/quadrature.hpp"

namespace steinpoisson {

/// Volume of the intersection of two radius-t balls in R^d at center
/// distance s.
inline double lens_volume(double s, double t, int d) {
    if (s < 0.0) throw std::invalid_argument("lens_volume: center distance must be >= 0");
    if (s >= 2.0 * t || t <= 0.0) return 0.0;
    switch (d) {
        case 1: return 2.0 * t - s;
        case 2: {
            if (s == 0.0) return std::numbers::pi * t * t;
            return 2.0 * t * t * std::acos(s / (2.0 * t)) -
                   0.5 * s * std::sqrt(4.0 * t * t - s * s);
        }
        case 3: {
            const double h = t - 0.5 * s; // cap height
            return 2.0 * std::numbers::pi / 3.0 * h * h * (3.0 * t - h);
        }
        default: throw std::invalid_argument("lens_volume: dimension must be 1, 2 or 3");
    }
}

namespace detail {

// Intersection volume of the torus balls B(x,t) and B(y,t): for t < 1/2 the
// translates of one ball are pairwise disjoint, so the volume is the sum of
// Euclidean lenses over the 3^d integer shifts of the displacement.
inline double torus_lens_from_gaps(const double* gap, int d, double t) {
    double total = 0.0;
    const int shifts = (d == 1) ? 3 : (d == 2 ? 9 : 27);
    for (int code = 0; code < shifts; ++code) {
        int c = code;
        double s2 = 0.0;
        for (int k = 0; k < d; ++k) {
            const double g = gap[k] + (c % 3 - 1);
            c /= 3;
            s2 += g * g;
        }
        if (s2 < 4.0 * t * t) total += lens_volume(std::sqrt(s2), t, d);
    }
    return total;
}

} // namespace detail

/// Volume of B(x,t) intersected with B(y,t) on the torus (exact, t < 1/2).
inline double torus_lens_volume(PointView x, PointView y, double t) {
    const int d = static_cast<int>(x.size());
    double gap[3] = {0, 0, 0};
    for (int k = 0; k < d; ++k) gap[k] = y[k] - x[k];
    return detail::torus_lens_from_gaps(gap, d, t);
}

/// d = 1 shortcut from the torus distance s in [0, 1/2].
inline double torus_lens_volume_1d(double s, double t) {
    return lens_volume(s, t, 1) + lens_volume(1.0 - s, t, 1);
}

/// A symmetric order-2 kernel. The indicator kind is the edge-count kernel
/// (1/2) 1{0 < |x-y|_torus <= t}; general kernels supply a callable and may
/// supply the conditional mean b(z) = int h(x,z) f(x) dx when the Malliavin
/// operators need it.
struct KernelSpec {
    enum class Kind { Indicator, General };

    Kind kind = Kind::Indicator;
    double radius = 0.0;
    bool nonneg = true;
    std::function<double(PointView, PointView)> fn;
    std::function<double(PointView)> conditional_mean; // b(z), optional

    static KernelSpec indicator(double t) {
        if (!(t > 0.0 && t < 0.5))
            throw std::invalid_argument("KernelSpec::indicator: need 0 < t < 1/2");
        KernelSpec k;
        k.kind = Kind::Indicator;
        k.radius = t;
        k.nonneg = true;
        return k;
    }

    static KernelSpec general(std::function<double(PointView, PointView)> h, bool nonneg,
                              std::function<double(PointView)> cond_mean = nullptr) {
        KernelSpec k;
        k.kind = Kind::General;
        k.fn = std::move(h);
        k.nonneg = nonneg;
        k.conditional_mean = std::move(cond_mean);
        return k;
    }

    double eval(PointView x, PointView y) const {
        if (kind == Kind::Indicator) {
            const double d2 = torus_distance_sq(x, y);
            return (d2 > 0.0 && d2 <= radius * radius) ? 0.5 : 0.0;
        }
        return fn(x, y);
    }

    bool is_indicator() const { return kind == Kind::Indicator; }
};

struct MeanVariance {
    double mean = 0.0;
    double variance = 0.0;
};

/// The chaos-norm ingredients of the exact phi_1 formula, with
/// A = h1 *_1^1 h2, B = h2 *_2^1 h2, C = h2 *_1^1 h2:
///   phi_1^2 = (9||A||^2 + 12<A,B> + 4||B||^2 + 8||C||^2) / Var^2.
struct Phi1Norms {
    double norm2_A = 0.0;  // ||A||^2_{L2(nu)}
    double inner_AB = 0.0; // <A,B>_{L2(nu)}
    double norm2_B = 0.0;  // ||B||^2_{L2(nu)}
    double norm2_C = 0.0;  // ||C||^2_{L2(nu^2)}
};

class ChaosKernels {
public:
    /// Every L^p(nu) quantity carries one factor n per free argument,
    /// absorbing int_0^n dt of the marked-space construction.
    static constexpr const char* time_factor_note =
        "norms over nu = dt x mu are folded onto Z with one explicit factor n "
        "per free argument";

    ChaosKernels(KernelSpec kernel, Density density, TorusDomain domain, double n)
        : kernel_(std::move(kernel)), density_(std::move(density)), domain_(domain), n_(n) {
        if (!(n > 0.0)) throw std::invalid_argument("ChaosKernels: intensity must be > 0");
        if (density_.dim() != domain_.dim)
            throw std::invalid_argument("ChaosKernels: density/domain dimension mismatch");
    }

    const KernelSpec& kernel() const { return kernel_; }
    const Density& density() const { return density_; }
    const TorusDomain& domain() const { return domain_; }
    double intensity() const { return n_; }

    /// Closed-form (or deterministic-quadrature) path available for the
    /// pointwise kernels, mean/variance and the nu-norms without lenses.
    bool analytic() const {
        if (!kernel_.is_indicator()) return false;
        return density_.kind() != Density::Kind::Tabulated || domain_.dim == 1;
    }

    /// Full phi_1 closed form (needs the lens-square integral).
    bool analytic_phi1() const { return kernel_.is_indicator() && density_.is_uniform(); }

    // -- pointwise kernels ---------------------------------------------------

    /// b(z) = int h(a,z) f(a) da; h1(z) = 2n b(z).
    double conditional_mean(PointView z) const {
        if (kernel_.is_indicator()) return 0.5 * density_.ball_average(z, kernel_.radius);
        if (kernel_.conditional_mean) return kernel_.conditional_mean(z);
        throw std::runtime_error("ChaosKernels: general kernel without conditional_mean; "
                                 "use the Monte Carlo backend");
    }

    double h1(PointView z) const { return 2.0 * n_ * conditional_mean(z); }

    /// h2 *_2^1 h2 (z) = n int h^2(z,a) f(a) da.
    double contraction_21(PointView z) const {
        require_analytic("contraction_21");
        return 0.5 * n_ * conditional_mean(z); // h^2 = h/2 for the indicator
    }

    /// h2 *_1^1 h2 (x,y) = n int h(x,a) h(y,a) f(a) da.
    double contraction_11(PointView x, PointView y) const {
        if (!kernel_.is_indicator())
            throw std::runtime_error("contraction_11: use the Monte Carlo backend");
        const double t = kernel_.radius;
        if (density_.is_uniform()) return 0.25 * n_ * torus_lens_volume(x, y, t);
        if (domain_.dim == 1) return 0.25 * n_ * lens_density_mass_1d(x[0], y[0], t);
        throw std::runtime_error("contraction_11: no closed form for this density/dimension; "
                                 "use the Monte Carlo backend");
    }

    /// h1 *_1^1 h2 (x) = 2 n^2 int b(y) h(x,y) f(y) dy.
    double contraction_h1h2(PointView x) const {
        require_analytic("contraction_h1h2");
        return 2.0 * n_ * n_ * J_A_scalar(x[0]);
    }

    // -- exact moments and norms ----------------------------------------------

    /// int b(z)^k f(z) dz, the scalar profile behind all h1-norms.
    double b_moment(int k) const {
        require_analytic("b_moment");
        return z_integral(
            [&](double z) { return std::pow(b_scalar(z), k) * f_scalar(z); });
    }

    /// mean = n^2 int int h dmu^2, Var = ||h1||^2 + 2||h2||^2 by the isometry.
    MeanVariance exact_mean_variance() const {
        require_analytic("exact_mean_variance");
        MeanVariance mv;
        mv.mean = n_ * n_ * b_moment(1);
        // 2||h2||^2 = mean for the indicator kernel (h^2 = h/2)
        mv.variance = 4.0 * std::pow(n_, 3) * b_moment(2) + mv.mean;
        return mv;
    }

    /// ||h1||^3_{L3(nu)} = 8 n^4 int b^3 f (h nonneg).
    double l3_h1() const { return 8.0 * std::pow(n_, 4) * b_moment(3); }

    /// ||h1||^4_{L4(nu)} = 16 n^5 int b^4 f.
    double l4_h1() const { return 16.0 * std::pow(n_, 5) * b_moment(4); }

    /// <h1, h1 *_1^1 h2>_{L2(nu)} = 4 n^4 int b J_A f.
    double inner_h1_A() const {
        require_analytic("inner_h1_A");
        return 4.0 * std::pow(n_, 4) *
               z_integral([&](double z) { return b_scalar(z) * J_A_scalar(z) * f_scalar(z); });
    }

    /// ||h1 *_1^1 h2||^2_{L2(nu)} = 4 n^5 int J_A^2 f.
    double norm2_A() const {
        require_analytic("norm2_A");
        return 4.0 * std::pow(n_, 5) *
               z_integral([&](double z) { return square(J_A_scalar(z)) * f_scalar(z); });
    }

    Phi1Norms phi1_norms() const {
        if (!analytic_phi1())
            throw std::runtime_error("phi1_norms: closed form requires the indicator kernel "
                                     "with the uniform density; use the Monte Carlo backend");
        const double t = kernel_.radius;
        const double kappa = ball_volume(t, domain_.dim);
        Phi1Norms norms;
        norms.norm2_A = std::pow(n_, 5) * std::pow(kappa, 4) / 4.0;
        norms.inner_AB = std::pow(n_, 4) * std::pow(kappa, 3) / 8.0;
        norms.norm2_B = std::pow(n_, 3) * kappa * kappa / 16.0;
        norms.norm2_C = std::pow(n_, 4) / 16.0 * lens_square_integral(t, domain_.dim);
        return norms;
    }

    /// phi_1 from the chaos decomposition of <DF~, -DL^{-1}F~> - 1.
    double phi1_exact() const {
        const Phi1Norms k = phi1_norms();
        const double v = exact_mean_variance().variance;
        return std::sqrt(9.0 * k.norm2_A + 12.0 * k.inner_AB + 4.0 * k.norm2_B +
                         8.0 * k.norm2_C) /
               v;
    }

    /// phi_2 = n int E[(D_z F)^2 (-D_z L^{-1} F)] f dz / Var^{3/2}; the
    /// integrand expands to h1^3 + 8 h1 B + 4 T3 with T3 = n int h^3 f da.
    double phi2_exact() const {
        require_analytic("phi2_exact");
        const double v = exact_mean_variance().variance;
        const double raw = n_ * z_integral([&](double z) {
            const double b = b_scalar(z);
            return (8.0 * std::pow(n_, 3) * b * b * b + 8.0 * n_ * n_ * b * b + n_ * b) *
                   f_scalar(z);
        });
        return raw / std::pow(v, 1.5);
    }

    /// int over the torus of (torus lens volume)^2, the geometric factor of
    /// ||C||^2 for the indicator kernel under the uniform density.
    static double lens_square_integral(double t, int d) {
        if (d == 1) {
            if (t <= 0.25) return 16.0 * t * t * t / 3.0;
            const double q = 4.0 * t - 1.0;
            return 2.0 * ((std::pow(2.0 * t, 3) - q * q * q) / 3.0 + q * q * (2.0 * t - 0.5));
        }
        if (2.0 * t <= 0.5) {
            // radially symmetric, no wrap
            auto g = [&](double s) {
                const double ln = lens_volume(s, t, d);
                const double surf = (d == 2) ? 2.0 * std::numbers::pi * s
                                             : 4.0 * std::numbers::pi * s * s;
                return ln * ln * surf;
            };
            return integrate_panels(g, 0.0, 2.0 * t, 64);
        }
        return lens_square_integral_wrapped(t, d);
    }

    // -- Monte Carlo backend ---------------------------------------------------
    // Seeded, unbiased estimators with standard errors. Nested conditional
    // means use disjoint inner batches so powers stay unbiased.

    McEstimate mean_mc(long samples, std::uint64_t seed) const {
        return outer_mc(samples, seed, [&](RngStream& rng) {
            double x[3], y[3];
            draw(rng, x);
            draw(rng, y);
            return n_ * n_ * kernel_.eval(view_d(x), view_d(y));
        });
    }

    McEstimate variance_mc(long samples, int inner, std::uint64_t seed) const {
        return outer_mc(samples, seed, [&](RngStream& rng) {
            double z[3], x[3], y[3];
            draw(rng, z);
            const double b1 = b_hat(view_d(z), rng, inner);
            const double b2 = b_hat(view_d(z), rng, inner);
            draw(rng, x);
            draw(rng, y);
            const double h = kernel_.eval(view_d(x), view_d(y));
            return 4.0 * std::pow(n_, 3) * b1 * b2 + 2.0 * n_ * n_ * h * h;
        });
    }

    /// int b^k f dz, unbiased via k disjoint inner batches (k <= 4).
    McEstimate b_moment_mc(int k, long samples, int inner, std::uint64_t seed) const {
        return outer_mc(samples, seed, [&](RngStream& rng) {
            double z[3];
            draw(rng, z);
            double prod = 1.0;
            for (int q = 0; q < k; ++q) prod *= b_hat(view_d(z), rng, inner);
            return prod;
        });
    }

    McEstimate contraction_21_mc(PointView x, long samples, std::uint64_t seed) const {
        return outer_mc(samples, seed, [&](RngStream& rng) {
            double a[3];
            draw(rng, a);
            return n_ * square(kernel_.eval(x, view_d(a)));
        });
    }

    McEstimate contraction_11_mc(PointView x, PointView y, long samples,
                                 std::uint64_t seed) const {
        return outer_mc(samples, seed, [&](RngStream& rng) {
            double a[3];
            draw(rng, a);
            return n_ * kernel_.eval(x, view_d(a)) * kernel_.eval(y, view_d(a));
        });
    }

    McEstimate contraction_h1h2_mc(PointView x, long samples, int inner,
                                   std::uint64_t seed) const {
        return outer_mc(samples, seed, [&](RngStream& rng) {
            double y[3];
            draw(rng, y);
            return 2.0 * n_ * n_ * b_hat(view_d(y), rng, inner) * kernel_.eval(x, view_d(y));
        });
    }

    McEstimate l3_h1_mc(long samples, int inner, std::uint64_t seed) const {
        McEstimate est = b_moment_mc(3, samples, inner, seed);
        est.value *= 8.0 * std::pow(n_, 4);
        est.stderr_ *= 8.0 * std::pow(n_, 4);
        return est;
    }

    McEstimate inner_h1_A_mc(long samples, int inner, std::uint64_t seed) const {
        return outer_mc(samples, seed, [&](RngStream& rng) {
            double z[3];
            draw(rng, z);
            const double b = b_hat(view_d(z), rng, inner);
            const double ja = J_A_hat(view_d(z), rng, inner);
            return 4.0 * std::pow(n_, 4) * b * ja;
        });
    }

    McEstimate norm2_A_mc(long samples, int inner, std::uint64_t seed) const {
        return outer_mc(samples, seed, [&](RngStream& rng) {
            double z[3];
            draw(rng, z);
            const double j1 = J_A_hat(view_d(z), rng, inner);
            const double j2 = J_A_hat(view_d(z), rng, inner);
            return 4.0 * std::pow(n_, 5) * j1 * j2;
        });
    }

    McEstimate norm2_C_mc(long samples, int inner, std::uint64_t seed) const {
        return outer_mc(samples, seed, [&](RngStream& rng) {
            double x[3], y[3];
            draw(rng, x);
            draw(rng, y);
            const double c1 = c_hat(view_d(x), view_d(y), rng, inner);
            const double c2 = c_hat(view_d(x), view_d(y), rng, inner);
            return std::pow(n_, 4) * c1 * c2;
        });
    }

private:
    static double square(double v) { return v * v; }

    PointView view_d(const double* p) const {
        return PointView(p, static_cast<std::size_t>(domain_.dim));
    }

    void draw(RngStream& rng, double* out) const {
        sample_density_point(density_, domain_.dim, rng, out);
    }

    void require_analytic(const char* what) const {
        if (!analytic())
            throw std::runtime_error(std::string(what) +
                                     ": no closed form for this kernel/density; "
                                     "use the Monte Carlo backend");
    }

    double f_scalar(double z1) const {
        const double p[3] = {z1, 0.0, 0.0};
        return density_.eval(view_d(p));
    }

    double b_scalar(double z1) const {
        const double p[3] = {z1, 0.0, 0.0};
        return conditional_mean(view_d(p));
    }

    /// J_A(z) = int b(y) h(y,z) f(y) dy, so that h1 *_1^1 h2 = 2 n^2 J_A.
    double J_A_scalar(double z1) const {
        const double t = kernel_.radius;
        switch (density_.kind()) {
            case Density::Kind::Uniform: {
                const double kappa = ball_volume(t, domain_.dim);
                return 0.25 * kappa * kappa;
            }
            case Density::Kind::Sine: {
                // (1/2) int_{B(z,t)} b f, with b f a trig polynomial in y_1
                const double a = density_.sine_amplitude();
                const double kappa = ball_volume(t, domain_.dim);
                const double c1 = cosine_ball_integral(t, 1);
                const double c2 = cosine_ball_integral(t, 2);
                const double s = std::sin(2.0 * std::numbers::pi * z1);
                const double cos2 = std::cos(4.0 * std::numbers::pi * z1);
                // b f = (1/2)[kappa + a(c1 + kappa) sin + a^2 c1 sin^2]
                return 0.25 * (kappa * kappa + a * (c1 + kappa) * s * c1 +
                               a * a * c1 * (0.5 * kappa - 0.5 * cos2 * c2));
            }
            case Density::Kind::Tabulated: {
                auto g = [&](double y) { return b_scalar(y) * f_scalar(y); };
                return 0.5 * integrate_panels(g, z1 - t, z1 + t, 32);
            }
        }
        return 0.0;
    }

    // int_{B(0,t)} cos(2 pi m u_1) du for the sine-density profile algebra
    double cosine_ball_integral(double t, int m) const {
        const double b = 2.0 * std::numbers::pi * m;
        switch (domain_.dim) {
            case 1: return 2.0 * std::sin(b * t) / b;
            case 2: return t <= 0.0 ? 0.0 : 2.0 * std::numbers::pi * t *
                                                boost::math::cyl_bessel_j(1, b * t) / b;
            case 3: return (4.0 * std::numbers::pi / (b * b * b)) *
                           (std::sin(b * t) - b * t * std::cos(b * t));
        }
        return 0.0;
    }

    // f-mass of the intersection of the two arcs B(x,t), B(y,t) on the circle
    double lens_density_mass_1d(double x, double y, double t) const {
        double total = 0.0;
        for (int shift = -1; shift <= 1; ++shift) {
            const double lo = std::max(x - t, y + shift - t);
            const double hi = std::min(x + t, y + shift + t);
            if (hi > lo) total += line_mass(lo, hi);
        }
        return total;
    }

    // int_a^b f for d = 1 (periodic)
    double line_mass(double a, double b) const {
        switch (density_.kind()) {
            case Density::Kind::Uniform: return b - a;
            case Density::Kind::Sine: {
                const double amp = density_.sine_amplitude();
                const double w = 2.0 * std::numbers::pi;
                return (b - a) - amp / w * (std::cos(w * b) - std::cos(w * a));
            }
            case Density::Kind::Tabulated:
                return integrate_panels([&](double z) { return f_scalar(z); }, a, b, 16);
        }
        return 0.0;
    }

    template <class G>
    double z_integral(G&& g) const {
        const int panels = density_.kind() == Density::Kind::Tabulated ? 256 : 64;
        return integrate_panels(g, 0.0, 1.0, panels);
    }

    static double lens_square_integral_wrapped(double t, int d) {
        // tensor composite Gauss-Legendre of the wrapped lens over [-1/2,1/2)^d
        constexpr int panels = 24;
        using G8 = boost::math::quadrature::gauss<double, 8>;
        const auto& xs = G8::abscissa(); // nonnegative half
        const auto& ws = G8::weights();
        std::vector<double> nodes, weights;
        const double h = 1.0 / panels;
        for (int p = 0; p < panels; ++p) {
            const double mid = -0.5 + (p + 0.5) * h;
            for (std::size_t q = 0; q < xs.size(); ++q) {
                for (int sgn : {-1, 1}) {
                    if (xs[q] == 0.0 && sgn == 1) continue;
                    nodes.push_back(mid + sgn * xs[q] * h / 2.0);
                    weights.push_back(ws[q] * h / 2.0);
                }
            }
        }
        const std::size_t m = nodes.size();
        double total = 0.0;
        double u[3] = {0, 0, 0};
        const std::size_t m2 = (d >= 2) ? m : 1, m3 = (d >= 3) ? m : 1;
        for (std::size_t i = 0; i < m; ++i) {
            u[0] = nodes[i];
            for (std::size_t j = 0; j < m2; ++j) {
                if (d >= 2) u[1] = nodes[j];
                for (std::size_t k = 0; k < m3; ++k) {
                    if (d >= 3) u[2] = nodes[k];
                    const double ln = detail::torus_lens_from_gaps(u, d, t);
                    double w = weights[i];
                    if (d >= 2) w *= weights[j];
                    if (d >= 3) w *= weights[k];
                    total += w * ln * ln;
                }
            }
        }
        return total;
    }

    double b_hat(PointView y, RngStream& rng, int inner) const {
        double s = 0.0, a[3];
        for (int i = 0; i < inner; ++i) {
            draw(rng, a);
            s += kernel_.eval(view_d(a), y);
        }
        return s / inner;
    }

    double J_A_hat(PointView z, RngStream& rng, int inner) const {
        double s = 0.0, y[3];
        for (int i = 0; i < inner; ++i) {
            draw(rng, y);
            s += b_hat(view_d(y), rng, inner) * kernel_.eval(view_d(y), z);
        }
        return s / inner;
    }

    double c_hat(PointView x, PointView y, RngStream& rng, int inner) const {
        double s = 0.0, a[3];
        for (int i = 0; i < inner; ++i) {
            draw(rng, a);
            s += kernel_.eval(x, view_d(a)) * kernel_.eval(y, view_d(a));
        }
        return s / inner;
    }

    template <class PerSample>
    McEstimate outer_mc(long samples, std::uint64_t seed, PerSample&& per) const {
        if (samples < 2) throw std::invalid_argument("Monte Carlo backend: need >= 2 samples");
        double sum = 0.0, sumsq = 0.0;
        for (long i = 0; i < samples; ++i) {
            RngStream rng(seed, static_cast<std::uint64_t>(i), Stream::Quadrature);
            const double v = per(rng);
            sum += v;
            sumsq += v * v;
        }
        McEstimate est;
        est.value = sum / samples;
        const double var = std::max(0.0, (sumsq - sum * sum / samples) / (samples - 1));
        est.stderr_ = std::sqrt(var / samples);
        return est;
    }

    KernelSpec kernel_;
    Density density_;
    TorusDomain domain_;
    double n_;
};

/// Theorem 4.3 constants in the n-free convention h1(z) = int h(x,z) mu(dx).
struct UStatConstants {
    double alpha2 = 0.0;
    double alpha = 0.0;
    double rho = 0.0;
    double phi_tilde_coefficient = 0.0; // ||h1||_3^3 / ||h1||_2^3, the n^{-1/2} prefactor
    double alpha_rho = 0.0;
    bool optimality_predicate = false; // alpha * rho != -1/2
};

namespace detail {

inline UStatConstants ustat_constants_from_norms(double l2, double l3, double a2u, double ip) {
    if (!(l2 > 1e-300))
        throw std::invalid_argument("ustat_constants: degenerate kernel, ||h1||_{L2} = 0; "
                                    "the geometric U-statistic asymptotics do not apply");
    UStatConstants c;
    c.alpha2 = 9.0 * l2 * a2u / (l3 * l3);
    c.alpha = std::sqrt(c.alpha2);
    c.rho = -3.0 * ip / l3;
    c.phi_tilde_coefficient = l3 / std::pow(l2, 1.5);
    c.alpha_rho = c.alpha * c.rho;
    c.optimality_predicate = std::fabs(c.alpha_rho + 0.5) > 1e-12;
    return c;
}

} // namespace detail

/// Closed-form path: indicator kernel with an analytically tractable density.
/// In the n-free convention the Theorem 4.3 ingredients are the nu-norms at
/// n = 1 with the folded time factors stripped.
inline UStatConstants ustat_constants(const KernelSpec& kernel, const Density& density,
                                      const TorusDomain& domain) {
    ChaosKernels ck(kernel, density, domain, 1.0);
    if (!ck.analytic())
        throw std::runtime_error("ustat_constants: use the Monte Carlo overload for "
                                 "general kernels");
    const double l2 = ck.b_moment(2);       // ||h1||^2_{L2(mu)}
    const double l3 = ck.b_moment(3);       // ||h1||^3_{L3(mu)}, h nonneg
    const double a2u = ck.norm2_A() / 4.0;  // ||h1 *_1^1 h2||^2_{L2(mu)}
    const double ip = ck.inner_h1_A() / 4.0;
    return detail::ustat_constants_from_norms(l2, l3, a2u, ip);
}

/// Monte Carlo path for general kernels; means of constants are exact, so
/// h == const reproduces the algebraic values to machine precision.
inline UStatConstants ustat_constants_mc(const KernelSpec& kernel, const Density& density,
                                         const TorusDomain& domain, long samples, int inner,
                                         std::uint64_t seed) {
    ChaosKernels ck(kernel, density, domain, 1.0);
    const double l2 = ck.b_moment_mc(2, samples, inner, seed).value;
    const double l3 = ck.b_moment_mc(3, samples, inner, seed).value;
    const double a2u = ck.norm2_A_mc(samples, inner, seed).value / 4.0;
    const double ip = ck.inner_h1_A_mc(samples, inner, seed).value / 4.0;
    return detail::ustat_constants_from_norms(l2, l3, a2u, ip);
}

} // namespace steinpoisson
