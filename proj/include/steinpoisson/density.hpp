#pragma once

// Probability densities on the unit torus.
//
// Three kinds are supported, selectable by name in experiment configs:
//   uniform    f = 1
//   sine       f(x) = 1 + a*sin(2*pi*x_1), |a| < 1
//   tabulated  periodic piecewise-linear from a CSV grid (d = 1)
//
// Each kind provides exact moments m_k = int f^k and exact ball averages
// int_{|y-z|<=t} f(y) dy, which the kernel algebra relies on.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "steinpoisson/domain.hpp"

namespace steinpoisson {

inline double unit_ball_volume(int d) {
    switch (d) {
        case 1: return 2.0;
        case 2: return std::numbers::pi;
        case 3: return 4.0 * std::numbers::pi / 3.0;
        default: throw std::invalid_argument("unit_ball_volume: dimension must be 1, 2 or 3");
    }
}

/// kappa_d * t^d, the volume of a radius-t ball.
inline double ball_volume(double t, int d) {
    if (t < 0.0) throw std::invalid_argument("ball_volume: radius must be >= 0");
    return unit_ball_volume(d) * std::pow(t, d);
}

class Density {
public:
    enum class Kind { Uniform, Sine, Tabulated };

    static Density uniform(int dim) {
        Density f;
        f.kind_ = Kind::Uniform;
        f.dim_ = check_dim(dim);
        f.sup_ = 1.0;
        return f;
    }

    static Density sine(int dim, double amplitude) {
        if (!(std::fabs(amplitude) < 1.0))
            throw std::invalid_argument("sine density: |amplitude| must be < 1");
        Density f;
        f.kind_ = Kind::Sine;
        f.dim_ = check_dim(dim);
        f.amp_ = amplitude;
        f.sup_ = 1.0 + std::fabs(amplitude);
        return f;
    }

    /// Periodic piecewise-linear density from grid nodes on [0,1). Nodes must
    /// be strictly increasing; the last node connects back to the first.
    static Density tabulated(std::vector<double> x, std::vector<double> v) {
        if (x.size() != v.size() || x.size() < 2)
            throw std::invalid_argument("tabulated density: need >= 2 (coordinate, value) rows");
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] < 0.0 || x[i] >= 1.0)
                throw std::invalid_argument("tabulated density: grid coordinates must lie in [0,1)");
            if (i > 0 && x[i] <= x[i - 1])
                throw std::invalid_argument("tabulated density: grid coordinates must be strictly increasing");
            if (v[i] < 0.0)
                throw std::invalid_argument("tabulated density: values must be >= 0");
        }
        Density f;
        f.kind_ = Kind::Tabulated;
        f.dim_ = 1;
        f.grid_x_ = std::move(x);
        f.grid_v_ = std::move(v);
        f.sup_ = *std::max_element(f.grid_v_.begin(), f.grid_v_.end());
        const double total = f.integrate_interval(0.0, 1.0);
        if (std::fabs(total - 1.0) > 1e-8)
            throw std::invalid_argument("tabulated density: integral is " + std::to_string(total) +
                                        ", must be 1 within 1e-8 (normalize the CSV values)");
        return f;
    }

    /// CSV rows "coordinate,value"; a non-numeric first line is treated as a header.
    static Density tabulated_from_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("tabulated density: cannot open " + path);
        std::vector<double> xs, vs;
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream row(line);
            double x, v;
            if (!(row >> x >> v)) {
                if (first) { first = false; continue; }
                throw std::runtime_error("tabulated density: bad row in " + path + ": " + line);
            }
            first = false;
            xs.push_back(x);
            vs.push_back(v);
        }
        return tabulated(std::move(xs), std::move(vs));
    }

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    double sup_bound() const { return sup_; }
    bool is_uniform() const { return kind_ == Kind::Uniform; }
    double sine_amplitude() const { return amp_; }

    double eval(PointView x) const {
        switch (kind_) {
            case Kind::Uniform: return 1.0;
            case Kind::Sine: return 1.0 + amp_ * std::sin(two_pi * x[0]);
            case Kind::Tabulated: return eval_pl(wrap01(x[0]));
        }
        return 1.0;
    }

    /// m_k = int f(x)^k dx, exact for every kind (k <= 5 for tabulated).
    double moment(int k) const {
        if (k < 1) throw std::invalid_argument("Density::moment: k must be >= 1");
        switch (kind_) {
            case Kind::Uniform: return 1.0;
            case Kind::Sine: {
                // binomial expansion; int_0^1 sin^j = C(j, j/2) / 2^j for even j
                double m = 0.0;
                for (int j = 0; j <= k; j += 2)
                    m += binom(k, j) * std::pow(amp_, j) * binom(j, j / 2) / std::pow(2.0, j);
                return m;
            }
            case Kind::Tabulated: {
                if (k > 5) throw std::invalid_argument("Density::moment: tabulated supports k <= 5");
                return moment_pl(k);
            }
        }
        return 1.0;
    }

    /// int_{torus ball B(z,t)} f(y) dy, exact for t < 1/2.
    double ball_average(PointView z, double t) const {
        if (!(t >= 0.0 && t < 0.5))
            throw std::invalid_argument("Density::ball_average: need 0 <= t < 1/2");
        switch (kind_) {
            case Kind::Uniform: return ball_volume(t, dim_);
            case Kind::Sine:
                return ball_volume(t, dim_) + amp_ * std::sin(two_pi * z[0]) * cosine_ball_integral(t);
            case Kind::Tabulated: return integrate_interval(z[0] - t, z[0] + t);
        }
        return 0.0;
    }

    std::string name() const {
        switch (kind_) {
            case Kind::Uniform: return "uniform";
            case Kind::Sine: return "sine";
            case Kind::Tabulated: return "tabulated";
        }
        return "?";
    }

private:
    static constexpr double two_pi = 2.0 * std::numbers::pi;

    static int check_dim(int d) {
        if (d < 1 || d > 3) throw std::invalid_argument("Density: dimension must be 1, 2 or 3");
        return d;
    }

    static double binom(int n, int k) {
        double r = 1.0;
        for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / i;
        return r;
    }

    static double wrap01(double x) {
        double w = x - std::floor(x);
        return w == 1.0 ? 0.0 : w;
    }

    // int_{B(0,t)} cos(2*pi*u_1) du, the sine kind's ball-profile factor
    double cosine_ball_integral(double t) const {
        const double b = two_pi;
        switch (dim_) {
            case 1: return std::sin(b * t) / std::numbers::pi;
            case 2: return t <= 0.0 ? 0.0 : t * boost::math::cyl_bessel_j(1, b * t);
            case 3: return (4.0 * std::numbers::pi / (b * b * b)) *
                           (std::sin(b * t) - b * t * std::cos(b * t));
        }
        return 0.0;
    }

    double eval_pl(double x) const {
        const auto& gx = grid_x_;
        auto it = std::upper_bound(gx.begin(), gx.end(), x);
        std::size_t i = (it == gx.begin() || it == gx.end()) ? gx.size() - 1 : (it - gx.begin() - 1);
        const double x0 = gx[i];
        double x1 = (i + 1 < gx.size()) ? gx[i + 1] : gx[0] + 1.0;
        double xx = x;
        if (xx < x0) xx += 1.0;
        const double v0 = grid_v_[i];
        const double v1 = grid_v_[(i + 1) % gx.size()];
        return v0 + (v1 - v0) * (xx - x0) / (x1 - x0);
    }

    // exact integral of the piecewise-linear density over [a,b], b - a <= 1
    double integrate_interval(double a, double b) const {
        if (b <= a) return 0.0;
        if (b - a > 1.0) throw std::invalid_argument("Density: interval longer than the torus");
        // segment endpoints: grid nodes plus the interval bounds, unwrapped
        double total = 0.0;
        const std::size_t m = grid_x_.size();
        // walk segments [s0, s1) of the periodic grid covering [a, b]
        const double base = std::floor(a);
        for (int period = 0; period < 3; ++period) {
            for (std::size_t i = 0; i < m; ++i) {
                const double s0 = grid_x_[i] + base + period;
                const double s1 = (i + 1 < m ? grid_x_[i + 1] : grid_x_[0] + 1.0) + base + period;
                const double lo = std::max(a, s0), hi = std::min(b, s1);
                if (hi <= lo) continue;
                const double v0 = grid_v_[i];
                const double v1 = grid_v_[(i + 1) % m];
                auto value_at = [&](double x) { return v0 + (v1 - v0) * (x - s0) / (s1 - s0); };
                total += 0.5 * (value_at(lo) + value_at(hi)) * (hi - lo);
            }
        }
        return total;
    }

    double moment_pl(int k) const {
        // 3-point Gauss-Legendre per linear segment: exact up to degree 5
        static constexpr double gx[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
        static constexpr double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        double total = 0.0;
        const std::size_t m = grid_x_.size();
        for (std::size_t i = 0; i < m; ++i) {
            const double s0 = grid_x_[i];
            const double s1 = (i + 1 < m) ? grid_x_[i + 1] : grid_x_[0] + 1.0;
            const double v0 = grid_v_[i];
            const double v1 = grid_v_[(i + 1) % m];
            const double h = 0.5 * (s1 - s0);
            for (int q = 0; q < 3; ++q) {
                const double u = 0.5 * (gx[q] + 1.0);
                total += h * gw[q] * std::pow(v0 + (v1 - v0) * u, k);
            }
        }
        return total;
    }

    Kind kind_ = Kind::Uniform;
    int dim_ = 1;
    double amp_ = 0.0;
    double sup_ = 1.0;
    std::vector<double> grid_x_, grid_v_;
};

} // namespace steinpoisson
