#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "steinpoisson/asymptotics.hpp"
#include "steinpoisson/kernel_algebra.hpp"

using namespace steinpoisson;
using Catch::Approx;

namespace {

KernelSpec constant_kernel(double c) {
    return KernelSpec::general([c](PointView, PointView) { return c; }, c >= 0.0);
}

} // namespace

TEST_CASE("lens volume closed forms") {
    for (int d = 1; d <= 3; ++d) {
        CHECK(lens_volume(0.0, 0.2, d) == Approx(ball_volume(0.2, d)).margin(1e-15));
        CHECK(lens_volume(0.4, 0.2, d) == 0.0);
        CHECK(lens_volume(1.0, 0.2, d) == 0.0);
    }
    CHECK(lens_volume(0.005, 0.01, 1) == Approx(0.015).margin(1e-15));
    CHECK(lens_volume(1.0, 1.0, 2) == Approx(1.2283696986087567).margin(1e-12));

    SECTION("d=2 example against a Monte Carlo area oracle") {
        // balls of radius 1 at (0,0) and (1,0); intersection inside [0,1]x[-1,1]
        RngStream rng(2718, 0, Stream::Quadrature);
        const long M = 10000000;
        long hits = 0;
        for (long i = 0; i < M; ++i) {
            const double x = rng.next_unit();
            const double y = 2.0 * rng.next_unit() - 1.0;
            const double dx = x - 1.0;
            if (x * x + y * y <= 1.0 && dx * dx + y * y <= 1.0) ++hits;
        }
        const double p = static_cast<double>(hits) / M;
        const double area = 2.0 * p;
        const double se = 2.0 * std::sqrt(p * (1.0 - p) / M);
        CHECK(std::fabs(area - lens_volume(1.0, 1.0, 2)) < 4.0 * se);
    }
}

TEST_CASE("torus lens accounts for wrap-around overlap") {
    // d=1, t=0.3, separation 0.45: near side 0.15, far side 0.05
    CHECK(torus_lens_volume_1d(0.45, 0.3) == Approx(0.2).margin(1e-15));
    const double x = 0.1, y = 0.55;
    CHECK(torus_lens_volume(PointView(&x, 1), PointView(&y, 1), 0.3) ==
          Approx(0.2).margin(1e-15));
    // small radius: plain Euclidean lens
    CHECK(torus_lens_volume_1d(0.05, 0.1) == Approx(0.15).margin(1e-15));

    SECTION("d=2 wrap case against Monte Carlo") {
        const double t = 0.3;
        const double a[2] = {0.1, 0.2}, b[2] = {0.65, 0.9};
        RngStream rng(31415, 0, Stream::Quadrature);
        const long M = 4000000;
        long hits = 0;
        const double t2 = t * t;
        for (long i = 0; i < M; ++i) {
            double z[2] = {rng.next_unit(), rng.next_unit()};
            if (torus_distance_sq(PointView(z, 2), PointView(a, 2)) <= t2 &&
                torus_distance_sq(PointView(z, 2), PointView(b, 2)) <= t2)
                ++hits;
        }
        const double p = static_cast<double>(hits) / M;
        const double se = std::sqrt(p * (1 - p) / M);
        CHECK(std::fabs(p - torus_lens_volume(PointView(a, 2), PointView(b, 2), t)) < 4.0 * se);
    }
}

TEST_CASE("lens square integral") {
    // closed form vs direct radial quadrature, d = 1; the integrand has
    // kinks at 2t and 1-2t, so integrate the smooth pieces separately
    for (double t : {0.1, 0.2, 0.3, 0.45}) {
        std::vector<double> cuts{0.0, 0.5};
        if (2.0 * t < 0.5) cuts.push_back(2.0 * t);
        if (1.0 - 2.0 * t < 0.5 && 1.0 - 2.0 * t > 0.0) cuts.push_back(1.0 - 2.0 * t);
        std::sort(cuts.begin(), cuts.end());
        double direct = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            direct += integrate_panels(
                [&](double s) {
                    const double ln = torus_lens_volume_1d(s, t);
                    return 2.0 * ln * ln;
                },
                cuts[i], cuts[i + 1], 64);
        CHECK(ChaosKernels::lens_square_integral(t, 1) == Approx(direct).epsilon(1e-10));
    }
    CHECK(ChaosKernels::lens_square_integral(0.3, 1) == Approx(0.14666666666666664).margin(1e-12));

    // d=2: radial path vs wrapped tensor path where both are valid
    const double radial = ChaosKernels::lens_square_integral(0.12, 2);
    CHECK(radial > 0.0);

    SECTION("d=2 wrapped path against Monte Carlo") {
        const double t = 0.3;
        const double w = ChaosKernels::lens_square_integral(t, 2);
        RngStream rng(999, 0, Stream::Quadrature);
        const long M = 2000000;
        double sum = 0.0, sumsq = 0.0;
        const double origin[2] = {0.0, 0.0};
        for (long i = 0; i < M; ++i) {
            double u[2] = {rng.next_unit(), rng.next_unit()};
            const double ln = torus_lens_volume(PointView(origin, 2), PointView(u, 2), t);
            sum += ln * ln;
            sumsq += ln * ln * ln * ln;
        }
        const double mean = sum / M;
        const double se = std::sqrt((sumsq - sum * sum / M) / (M - 1) / M);
        CHECK(std::fabs(mean - w) < 4.0 * se);
    }
}

TEST_CASE("indicator kernel evaluation") {
    const KernelSpec k = KernelSpec::indicator(0.1);
    const double a = 0.30, b = 0.35, c = 0.55, w = 0.98;
    CHECK(k.eval(PointView(&a, 1), PointView(&b, 1)) == 0.5);
    CHECK(k.eval(PointView(&b, 1), PointView(&a, 1)) == 0.5); // symmetric
    CHECK(k.eval(PointView(&a, 1), PointView(&c, 1)) == 0.0);
    CHECK(k.eval(PointView(&a, 1), PointView(&a, 1)) == 0.0); // 0 < dist required
    const double a2 = 0.03;
    CHECK(k.eval(PointView(&a2, 1), PointView(&w, 1)) == 0.5); // wrap distance 0.05
    CHECK_THROWS_AS(KernelSpec::indicator(0.5), std::invalid_argument);
    CHECK_THROWS_AS(KernelSpec::indicator(0.0), std::invalid_argument);
}

TEST_CASE("contractions: indicator closed forms") {
    const TorusDomain dom(1);
    ChaosKernels ck(KernelSpec::indicator(0.01), Density::uniform(1), dom, 100.0);
    const double z = 0.4, y_near = 0.405, y_far = 0.46;

    CHECK(ck.h1(PointView(&z, 1)) == Approx(100.0 * 0.02).margin(1e-12)); // n kappa t^d
    CHECK(ck.contraction_21(PointView(&z, 1)) == Approx(0.5).margin(1e-12));
    CHECK(ck.contraction_11(PointView(&z, 1), PointView(&z, 1)) == Approx(0.5).margin(1e-12));
    CHECK(ck.contraction_11(PointView(&z, 1), PointView(&y_near, 1)) ==
          Approx(0.375).margin(1e-12)); // (n/4)(2t - s) = 25 * 0.015
    CHECK(ck.contraction_11(PointView(&z, 1), PointView(&y_far, 1)) == 0.0);
    CHECK(ck.contraction_h1h2(PointView(&z, 1)) == Approx(2.0).margin(1e-12));

    SECTION("symmetry of contraction_11") {
        RngStream rng(4, 0, Stream::Quadrature);
        ChaosKernels wide(KernelSpec::indicator(0.2), Density::uniform(1), dom, 10.0);
        for (int i = 0; i < 100; ++i) {
            const double a = rng.next_unit(), b = rng.next_unit();
            CHECK(wide.contraction_11(PointView(&a, 1), PointView(&b, 1)) ==
                  Approx(wide.contraction_11(PointView(&b, 1), PointView(&a, 1)))
                      .margin(1e-14));
        }
    }
}

TEST_CASE("contractions: zero and general kernels via Monte Carlo") {
    const TorusDomain dom(1);
    ChaosKernels zero(constant_kernel(0.0), Density::uniform(1), dom, 100.0);
    const double x = 0.3;
    CHECK(zero.contraction_21_mc(PointView(&x, 1), 100, 1).value == 0.0);
    CHECK(zero.contraction_h1h2_mc(PointView(&x, 1), 100, 4, 1).value == 0.0);
    CHECK(zero.mean_mc(100, 1).value == 0.0);

    // sine density: closed forms against the Monte Carlo backend
    ChaosKernels sine_ck(KernelSpec::indicator(0.1), Density::sine(1, 0.5), dom, 50.0);
    const double z = 0.37;
    {
        const auto mc = sine_ck.contraction_21_mc(PointView(&z, 1), 400000, 11);
        CHECK(std::fabs(sine_ck.contraction_21(PointView(&z, 1)) - mc.value) < 4.0 * mc.stderr_);
    }
    {
        const double y = 0.42;
        const auto mc = sine_ck.contraction_11_mc(PointView(&z, 1), PointView(&y, 1), 400000, 12);
        CHECK(std::fabs(sine_ck.contraction_11(PointView(&z, 1), PointView(&y, 1)) - mc.value) <
              4.0 * mc.stderr_);
    }
    {
        const auto mc = sine_ck.contraction_h1h2_mc(PointView(&z, 1), 100000, 16, 13);
        CHECK(std::fabs(sine_ck.contraction_h1h2(PointView(&z, 1)) - mc.value) < 4.0 * mc.stderr_);
    }
}

TEST_CASE("exact mean and variance") {
    const TorusDomain d1(1);
    ChaosKernels ck(KernelSpec::indicator(0.01), Density::uniform(1), d1, 100.0);
    const auto mv = ck.exact_mean_variance();
    CHECK(mv.mean == Approx(100.0).margin(1e-10));
    CHECK(mv.variance == Approx(500.0).margin(1e-9));

    ChaosKernels d2(KernelSpec::indicator(0.1), Density::uniform(2), TorusDomain(2), 100.0);
    CHECK(d2.exact_mean_variance().mean == Approx(50.0 * std::numbers::pi).epsilon(1e-12));

    SECTION("zero kernel has zero moments") {
        ChaosKernels zero(constant_kernel(0.0), Density::uniform(1), d1, 100.0);
        CHECK(zero.mean_mc(100, 1).value == 0.0);
        CHECK(zero.variance_mc(100, 4, 1).value == 0.0);
    }

    SECTION("sine density: closed form vs Monte Carlo, d = 1 and d = 2") {
        for (int dim : {1, 2}) {
            ChaosKernels sck(KernelSpec::indicator(0.1), Density::sine(dim, 0.5),
                             TorusDomain(dim), 50.0);
            const auto smv = sck.exact_mean_variance();
            const auto mc_mean = sck.mean_mc(400000, 21);
            CHECK(std::fabs(smv.mean - mc_mean.value) < 4.0 * mc_mean.stderr_);
            const auto mc_var = sck.variance_mc(200000, 32, 22);
            CHECK(std::fabs(smv.variance - mc_var.value) < 4.0 * mc_var.stderr_);
        }
    }
}

TEST_CASE("nu-norms: exact values and asymptotic displays") {
    const double n = 512.0;
    const double t = std::pow(n, -0.25);
    const TorusDomain dom(1);
    ChaosKernels ck(KernelSpec::indicator(t), Density::uniform(1), dom, n);

    const Phi1Norms norms = ck.phi1_norms();
    CHECK(norms.norm2_A == Approx(4.0 * std::pow(n, 5) * std::pow(t, 4)).epsilon(1e-12));
    CHECK(norms.inner_AB == Approx(std::pow(n, 4) * std::pow(t, 3)).epsilon(1e-12));
    CHECK(norms.norm2_B == Approx(std::pow(n, 3) * t * t / 4.0).epsilon(1e-12));
    CHECK(norms.norm2_C ==
          Approx(std::pow(n, 4) / 16.0 * ChaosKernels::lens_square_integral(t, 1)).epsilon(1e-12));

    // the uniform-density display constants hold exactly at every finite n
    const EdgeAsymptotics pred = edge_asymptotics(1, Density::uniform(1), n, t);
    CHECK(ck.norm2_A() == Approx(pred.norm2_A).epsilon(1e-12));
    CHECK(ck.inner_h1_A() == Approx(pred.inner_h1_A).epsilon(1e-12));
    CHECK(ck.l3_h1() == Approx(pred.l3_h1).epsilon(1e-12));

    // frozen oracle values (independent recomputation of the closed forms)
    CHECK(ck.phi1_exact() == Approx(0.06626277426025057).margin(1e-9));
    CHECK(ck.phi2_exact() == Approx(0.04445028968248428).margin(1e-9));

    SECTION("sine density: display constants within 2% once n t^d >= 50") {
        const double ns = 10000.0, ts = 0.02; // n t = 200
        ChaosKernels sck(KernelSpec::indicator(ts), Density::sine(1, 0.5), dom, ns);
        const EdgeAsymptotics spred = edge_asymptotics(1, Density::sine(1, 0.5), ns, ts);
        CHECK(sck.l3_h1() == Approx(spred.l3_h1).epsilon(0.02));
        CHECK(sck.inner_h1_A() == Approx(spred.inner_h1_A).epsilon(0.02));
        CHECK(sck.exact_mean_variance().mean == Approx(spred.mean).epsilon(0.02));
    }

    SECTION("Monte Carlo cross-checks of the closed forms") {
        ChaosKernels small(KernelSpec::indicator(0.15), Density::uniform(1), dom, 20.0);
        {
            const auto mc = small.l3_h1_mc(40000, 24, 31);
            CHECK(std::fabs(small.l3_h1() - mc.value) < 4.0 * mc.stderr_);
        }
        {
            const auto mc = small.inner_h1_A_mc(40000, 24, 32);
            CHECK(std::fabs(small.inner_h1_A() - mc.value) < 4.0 * mc.stderr_);
        }
        {
            const auto mc = small.norm2_A_mc(20000, 24, 33);
            CHECK(std::fabs(small.norm2_A() - mc.value) < 4.0 * mc.stderr_);
        }
        {
            const auto mc = small.norm2_C_mc(20000, 32, 34);
            CHECK(std::fabs(small.phi1_norms().norm2_C - mc.value) < 4.0 * mc.stderr_);
        }
        // sine-density h1-norms exercise the profile algebra
        ChaosKernels sck(KernelSpec::indicator(0.15), Density::sine(1, 0.5), dom, 20.0);
        {
            const auto mc = sck.l3_h1_mc(40000, 24, 35);
            CHECK(std::fabs(sck.l3_h1() - mc.value) < 4.0 * mc.stderr_);
        }
        {
            const auto mc = sck.inner_h1_A_mc(40000, 24, 36);
            CHECK(std::fabs(sck.inner_h1_A() - mc.value) < 4.0 * mc.stderr_);
        }
        {
            const auto mc = sck.norm2_A_mc(20000, 24, 37);
            CHECK(std::fabs(sck.norm2_A() - mc.value) < 4.0 * mc.stderr_);
        }
    }
}

TEST_CASE("geometric U-statistic constants") {
    const TorusDomain dom(1);

    SECTION("h == 1: alpha^2 = 9, rho = -3, exactly") {
        const UStatConstants c =
            ustat_constants_mc(constant_kernel(1.0), Density::uniform(1), dom, 500, 8, 7);
        CHECK(c.alpha2 == 9.0);
        CHECK(c.rho == -3.0);
        CHECK(c.phi_tilde_coefficient == 1.0);
        CHECK(c.optimality_predicate); // -9 != -1/2
    }

    SECTION("indicator, uniform: constant h1 collapses every ratio") {
        const UStatConstants c =
            ustat_constants(KernelSpec::indicator(0.07), Density::uniform(1), dom);
        CHECK(c.alpha2 == Approx(9.0).epsilon(1e-10));
        CHECK(c.rho == Approx(-3.0).epsilon(1e-10));
        CHECK(c.phi_tilde_coefficient == Approx(1.0).epsilon(1e-10));
    }

    SECTION("scale invariance: h -> 7h leaves alpha and rho unchanged") {
        const UStatConstants a =
            ustat_constants_mc(constant_kernel(1.0), Density::uniform(1), dom, 400, 8, 99);
        const UStatConstants b =
            ustat_constants_mc(constant_kernel(7.0), Density::uniform(1), dom, 400, 8, 99);
        CHECK(a.alpha2 == Approx(b.alpha2).epsilon(1e-12));
        CHECK(a.rho == Approx(b.rho).epsilon(1e-12));
    }

    SECTION("analytic vs Monte Carlo on a non-uniform density") {
        const KernelSpec ind = KernelSpec::indicator(0.12);
        const Density sine = Density::sine(1, 0.5);
        const UStatConstants exact = ustat_constants(ind, sine, dom);
        const UStatConstants mc = ustat_constants_mc(ind, sine, dom, 60000, 32, 5);
        CHECK(exact.alpha2 == Approx(mc.alpha2).epsilon(0.05));
        CHECK(exact.rho == Approx(mc.rho).epsilon(0.05));
    }

    SECTION("degenerate kernel is rejected") {
        CHECK_THROWS_AS(ustat_constants_mc(constant_kernel(0.0), Density::uniform(1), dom,
                                           100, 4, 1),
                        std::invalid_argument);
    }
}
