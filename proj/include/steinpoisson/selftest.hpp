#pragma once

// Fast invariant suite behind the `selftest` subcommand: one line per check,
// exit status 0 iff everything holds.

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "steinpoisson/asymptotics.hpp"
#include "steinpoisson/malliavin.hpp"
#include "steinpoisson/point_process.hpp"
#include "steinpoisson/rgg.hpp"
#include "steinpoisson/stein.hpp"

namespace steinpoisson {

namespace selftest_detail {

inline std::int64_t brute_force_edges(const PointConfiguration& c, double t) {
    std::int64_t edges = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 1; j < c.size(); ++j) {
            const double d2 = torus_distance_sq(c.point(i), c.point(j));
            if (d2 > 0.0 && d2 <= t * t) ++edges;
        }
    return edges;
}

} // namespace selftest_detail

inline int run_selftest() {
    using selftest_detail::brute_force_edges;
    struct Check {
        std::string name;
        std::function<bool()> fn;
    };
    std::vector<Check> checks;

    checks.push_back({"philox known-answer vectors", [] {
        const auto z = philox4x32({0, 0, 0, 0}, {0, 0});
        const auto f = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                  {0xffffffffu, 0xffffffffu});
        const auto p = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                  {0xa4093822u, 0x299f31d0u});
        return z == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u} &&
               f == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu} &&
               p == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u};
    }});

    checks.push_back({"torus distance bound and wrap", [] {
        const TorusDomain dom(1);
        const double a = 0.02, b = 0.97;
        const bool wrap = std::fabs(torus_distance(PointView(&a, 1), PointView(&b, 1), dom) -
                                    0.05) < 1e-15;
        RngStream rng(7, 0, Stream::Points);
        bool ok = wrap;
        for (int i = 0; i < 2000; ++i) {
            double x[3], y[3];
            for (int k = 0; k < 3; ++k) { x[k] = rng.next_unit(); y[k] = rng.next_unit(); }
            const double d = std::sqrt(torus_distance_sq(PointView(x, 3), PointView(y, 3)));
            ok = ok && d <= std::sqrt(3.0) / 2.0 + 1e-12;
        }
        return ok;
    }});

    checks.push_back({"density moments (sine closed form vs quadrature)", [] {
        const Density f = Density::sine(1, 0.5);
        bool ok = true;
        for (int k = 2; k <= 5; ++k) {
            const double quad = integrate_panels(
                [&](double x) { return std::pow(1.0 + 0.5 * std::sin(2 * std::numbers::pi * x), k); },
                0.0, 1.0, 64);
            ok = ok && std::fabs(f.moment(k) - quad) < 1e-12 && f.moment(k) >= 1.0;
        }
        return ok;
    }});

    checks.push_back({"thinning correctness (KS on 1e5 sine points)", [] {
        const Density f = Density::sine(1, 0.5);
        const TorusDomain dom(1);
        const auto config = sample_poisson_process(1e5, f, dom, 20240601);
        std::vector<double> xs(config.coords);
        std::sort(xs.begin(), xs.end());
        auto cdf = [](double x) {
            return x + 0.5 * (1.0 - std::cos(2 * std::numbers::pi * x)) / (2 * std::numbers::pi);
        };
        double dmax = 0.0;
        const double m = static_cast<double>(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double F = cdf(xs[i]);
            dmax = std::max(dmax, std::fabs(F - (i + 1) / m));
            dmax = std::max(dmax, std::fabs(F - i / m));
        }
        return dmax < 1.628 / std::sqrt(m); // 99% Kolmogorov-Smirnov band
    }});

    checks.push_back({"grid edge count equals brute force (mixed dims)", [] {
        for (int trial = 0; trial < 150; ++trial) {
            const int d = 1 + trial % 3;
            const double t = 0.02 + 0.45 * RngStream(99, trial, Stream::Quadrature).next_unit();
            const auto config = sample_poisson_process(5 + trial % 60, Density::uniform(d),
                                                       TorusDomain(d), 31337, trial);
            if (count_edges(config, t) != brute_force_edges(config, t)) return false;
        }
        return true;
    }});

    checks.push_back({"add-one cost equals degree (edge counts)", [] {
        for (int trial = 0; trial < 150; ++trial) {
            const int d = 1 + trial % 2;
            const double t = 0.05 + 0.2 * RngStream(5, trial, Stream::Quadrature).next_unit();
            auto config = sample_poisson_process(30, Density::uniform(d), TorusDomain(d),
                                                 777, trial);
            RngStream rng(6, trial, Stream::Quadrature);
            double z[3];
            for (int k = 0; k < d; ++k) z[k] = rng.next_unit();
            const PointView zv(z, static_cast<std::size_t>(d));
            const auto before = count_edges(config, t);
            const int deg = degree(config, zv, t);
            config.push_back(zv);
            if (count_edges(config, t) - before != deg) return false;
        }
        return true;
    }});

    checks.push_back({"exact mean/variance (n=100, t=0.01: 100, 500)", [] {
        ChaosKernels ck(KernelSpec::indicator(0.01), Density::uniform(1), TorusDomain(1), 100.0);
        const auto mv = ck.exact_mean_variance();
        return std::fabs(mv.mean - 100.0) < 1e-9 && std::fabs(mv.variance - 500.0) < 1e-9;
    }});

    checks.push_back({"pathwise half-sum identity", [] {
        NormalizedUStat us(KernelSpec::indicator(0.05), Density::uniform(1), TorusDomain(1), 200.0);
        const auto rep = us.make_replication(404, 0);
        RngStream rng(405, 0, Stream::Quadrature);
        for (int i = 0; i < 200; ++i) {
            const double z = rng.next_unit();
            const PointView zv(&z, 1);
            const double lhs = rep.DL1F(zv);
            const double h1 = us.ck().h1(zv);
            const double rhs = 0.5 * (h1 / us.sd() + rep.DF(zv));
            if (std::fabs(lhs - rhs) > 1e-12) return false;
        }
        return true;
    }});

    checks.push_back({"E<DF,-DL1F> = 1 within 3 stderr (n=256)", [] {
        NormalizedUStat us(KernelSpec::indicator(std::pow(256.0, -0.25)), Density::uniform(1),
                           TorusDomain(1), 256.0);
        ReplicationRequest req;
        req.want_inner = true;
        const auto data = run_replications(us, 2000, 11, 0, req);
        const McEstimate m = mean_and_stderr(data.inner);
        return std::fabs(m.value - 1.0) <= 3.0 * m.stderr_;
    }});

    checks.push_back({"Stein solution: evenness, residual, derivative", [] {
        const SteinSolutionSin sol;
        if (std::fabs(sol.f(0.0) + 0.7247784590070763) > 1e-9) return false;
        for (double x = -8.0; x <= 8.0; x += 0.25) {
            if (std::fabs(sol.f(x) - sol.f(-x)) > 1e-12) return false;
            if (std::fabs(sol.fprime(x) - x * sol.f(x) - std::sin(x)) > 1e-8) return false;
            const double h = 1e-5;
            const double fp_num = (sol.f(x + h) - sol.f(x - h)) / (2 * h);
            if (std::fabs(fp_num - sol.fprime(x)) > 1e-6) return false;
            if (std::fabs(sol.fprime(x)) > 1.0 + 1e-9) return false;
            if (std::fabs(sol.fsecond(x)) > 2.0 + 1e-9) return false;
        }
        return true;
    }});

    checks.push_back({"hermite identity: -E[sin(N)H3(N)] = e^{-1/2}", [] {
        return std::fabs(hermite_check() - std::exp(-0.5)) < 1e-9 &&
               std::fabs(3.0 * stein_sin_fsecond_normal_mean() - hermite_check()) < 1e-9;
    }});

    checks.push_back({"W1 of the zero sample = sqrt(2/pi)", [] {
        return std::fabs(empirical_w1(std::vector<double>(37, 0.0)) -
                         std::sqrt(2.0 / std::numbers::pi)) < 1e-12;
    }});

    checks.push_back({"normal quantile roundtrip", [] {
        return std::fabs(normal_inv_cdf(0.5)) < 1e-12 &&
               std::fabs(normal_inv_cdf(normal_cdf(1.0)) - 1.0) < 1e-9 &&
               std::fabs(normal_inv_cdf(0.975) - 1.959964) < 1e-6;
    }});

    checks.push_back({"rate fit recovers exact slope -1/2", [] {
        const RateFit fit = rate_fit({{100, 0.1}, {400, 0.05}, {1600, 0.025}});
        return std::fabs(fit.slope + 0.5) < 1e-12 && fit.r_squared > 1.0 - 1e-12;
    }});

    int failures = 0;
    for (const auto& check : checks) {
        bool ok = false;
        try {
            ok = check.fn();
        } catch (const std::exception& e) {
            std::printf("FAIL %s (exception: %s)\n", check.name.c_str(), e.what());
            ++failures;
            continue;
        }
        std::printf("%s %s\n", ok ? "ok  " : "FAIL", check.name.c_str());
        if (!ok) ++failures;
    }
    std::printf("%zu checks, %d failures\n", checks.size(), failures);
    return failures == 0 ? 0 : 1;
}

} // namespace steinpoisson
