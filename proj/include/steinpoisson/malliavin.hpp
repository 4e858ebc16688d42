#pragma once

// Pathwise Malliavin operators for order-2 U-statistics of a Poisson
// process, and the Monte Carlo / exact machinery behind the bound terms
//   phi_1 = sqrt(E(1 - <DF~, -DL^{-1}F~>)^2),
//   phi_2 = E int (D_z F~)^2 |D_z L^{-1} F~| nu(dz).
//
// Pathwise identities used throughout (S(z) := sum_{x in eta} h(z,x)):
//   D_z F      = 2 S(z)                      (add-one cost)
//   -D_z L^{-1}(F - EF) = h1(z)/2 + S(z)     (L^{-1} = -1/q on chaos q)
// both normalized by sqrt(Var F).

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "steinpoisson/density.hpp"
#include "steinpoisson/domain.hpp"
#include "steinpoisson/kernel_algebra.hpp"
#include "steinpoisson/parallel.hpp"
#include "steinpoisson/point_process.hpp"
#include "steinpoisson/rgg.hpp"
#include "steinpoisson/rng.hpp"
#include "steinpoisson/stein.hpp"

namespace steinpoisson {

struct BoundReport {
    double phi1 = 0.0;
    double phi2 = 0.0;
    double phi = 0.0;
    double phi1_stderr = 0.0;
    double phi2_stderr = 0.0;
    std::string method; // "exact" or "monte_carlo"
};

class NormalizedUStat;

/// One sampled configuration with the structures needed to evaluate the
/// pathwise operators; immutable after construction, safe to query from
/// one thread.
class UStatReplication {
public:
    UStatReplication(const NormalizedUStat& us, std::uint64_t seed, std::uint64_t rep);

    /// Evaluate the operators on a caller-supplied configuration.
    UStatReplication(const NormalizedUStat& us, PointConfiguration config);

    double value() const { return value_; }
    double raw_value() const { return raw_; }
    const PointConfiguration& config() const { return config_; }

    /// D_z F~ : the normalized add-one cost at z.
    double DF(PointView z) const { return 2.0 * sum_h(z) / sd_; }

    /// -D_z L^{-1} F~ = (h1(z)/2 + S(z)) / sd.
    double DL1F(PointView z) const { return (half_h1(z) + sum_h(z)) / sd_; }

    bool has_exact_inner() const { return grid_lens_.has_value() || all_pairs_lens_; }

    /// <DF~, -DL^{-1}F~>_{L2(nu)} in closed form (indicator kernel, uniform
    /// density): N (n^2 k^2 + n k)/2 + n sum_{pairs} lens, over Var.
    double inner_exact() const;

    /// Importance-sampled inner product with z ~ f: (n/M) sum DF * DL1F.
    /// Returns the estimate and its within-configuration variance.
    std::pair<double, double> inner_mc(int z_samples) const;

    /// Inner z-average of n (D_z F~)^2 |D_z L^{-1} F~| over z ~ f.
    double phi2_term(int z_samples) const;

private:
    double sum_h(PointView z) const;
    double half_h1(PointView z) const;

    const NormalizedUStat* us_;
    PointConfiguration config_;
    std::optional<NeighborGrid> grid_t_;    // indicator kernels
    std::optional<NeighborGrid> grid_lens_; // pairs within 2t for the exact inner product
    bool all_pairs_lens_ = false;           // 2t >= 1/2: scan all pairs instead
    double raw_ = 0.0;
    double value_ = 0.0;
    double sd_ = 1.0;
};

/// F~ = (F - EF)/sqrt(Var F) for F = sum_{(x1,x2) in eta^2_neq} h(x1,x2);
/// mean and variance are the exact isometry values.
class NormalizedUStat {
public:
    NormalizedUStat(KernelSpec kernel, Density density, TorusDomain domain, double n)
        : ck_(std::move(kernel), std::move(density), domain, n) {
        const MeanVariance mv = ck_.exact_mean_variance();
        init_moments(mv);
    }

    /// For kernels without a closed-form isometry: supply mean/variance
    /// (for example from the Monte Carlo backend).
    NormalizedUStat(KernelSpec kernel, Density density, TorusDomain domain, double n,
                    MeanVariance mv)
        : ck_(std::move(kernel), std::move(density), domain, n) {
        init_moments(mv);
    }

    const ChaosKernels& ck() const { return ck_; }
    const KernelSpec& kernel() const { return ck_.kernel(); }
    const Density& density() const { return ck_.density(); }
    const TorusDomain& domain() const { return ck_.domain(); }
    double intensity() const { return ck_.intensity(); }
    double mean() const { return mean_; }
    double variance() const { return variance_; }
    double sd() const { return sd_; }

    double raw_value(const PointConfiguration& config) const {
        // indicator: each unordered pair within t contributes 2h = 1, so F
        // is the edge count itself
        if (kernel().is_indicator())
            return static_cast<double>(steinpoisson::count_edges(config, kernel().radius));
        const std::size_t m = config.size();
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                total += 2.0 * kernel().eval(config.point(i), config.point(j));
        return total;
    }

    double value(const PointConfiguration& config) const {
        return (raw_value(config) - mean_) / sd_;
    }

    UStatReplication make_replication(std::uint64_t seed, std::uint64_t rep) const {
        return UStatReplication(*this, seed, rep);
    }

private:
    void init_moments(const MeanVariance& mv) {
        if (!(mv.variance > 0.0))
            throw std::invalid_argument("NormalizedUStat: zero variance, "
                                        "normalization impossible");
        mean_ = mv.mean;
        variance_ = mv.variance;
        sd_ = std::sqrt(mv.variance);
    }

    ChaosKernels ck_;
    double mean_ = 0.0, variance_ = 1.0, sd_ = 1.0;
};

inline UStatReplication::UStatReplication(const NormalizedUStat& us, std::uint64_t seed,
                                          std::uint64_t rep)
    : UStatReplication(us, sample_poisson_process(us.intensity(), us.density(), us.domain(),
                                                  seed, rep)) {}

inline UStatReplication::UStatReplication(const NormalizedUStat& us, PointConfiguration config)
    : us_(&us), config_(std::move(config)), sd_(us.sd()) {
    const KernelSpec& k = us.kernel();
    if (k.is_indicator() && config_.size() > 0) {
        grid_t_.emplace(config_, k.radius);
        raw_ = static_cast<double>(grid_t_->count_edges());
    } else {
        raw_ = us.raw_value(config_);
    }
    if (k.is_indicator() && us.density().is_uniform()) {
        if (2.0 * k.radius < 0.5 && config_.size() > 0)
            grid_lens_.emplace(config_, 2.0 * k.radius);
        else
            all_pairs_lens_ = true;
    }
    value_ = (raw_ - us.mean()) / sd_;
}

inline double UStatReplication::sum_h(PointView z) const {
    if (grid_t_) return 0.5 * grid_t_->degree(z);
    double s = 0.0;
    for (std::size_t i = 0; i < config_.size(); ++i)
        s += us_->kernel().eval(z, config_.point(i));
    return s;
}

inline double UStatReplication::half_h1(PointView z) const {
    return us_->intensity() * us_->ck().conditional_mean(z);
}

inline double UStatReplication::inner_exact() const {
    if (!has_exact_inner())
        throw std::runtime_error("inner_exact: available for the indicator kernel with "
                                 "the uniform density only");
    const double n = us_->intensity();
    const double t = us_->kernel().radius;
    const double kappa = ball_volume(t, config_.dim);
    double lens_sum = 0.0;
    if (grid_lens_) {
        grid_lens_->for_each_edge([&](int i, int j, double) {
            lens_sum += torus_lens_volume(config_.point(i), config_.point(j), t);
        });
    } else {
        const std::size_t m = config_.size();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                lens_sum += torus_lens_volume(config_.point(i), config_.point(j), t);
    }
    const double count = static_cast<double>(config_.size());
    const double raw_inner = count * (n * n * kappa * kappa + n * kappa) / 2.0 + n * lens_sum;
    return raw_inner / us_->variance();
}

inline std::pair<double, double> UStatReplication::inner_mc(int z_samples) const {
    if (z_samples < 1) throw std::invalid_argument("inner_mc: need z_samples >= 1");
    RngStream rng(config_.seed, config_.replication, Stream::InnerZ);
    const double n = us_->intensity();
    double z[3];
    double sum = 0.0, sumsq = 0.0;
    for (int j = 0; j < z_samples; ++j) {
        sample_density_point(us_->density(), config_.dim, rng, z);
        const PointView zv(z, static_cast<std::size_t>(config_.dim));
        const double w = n * DF(zv) * DL1F(zv);
        sum += w;
        sumsq += w * w;
    }
    const double mean = sum / z_samples;
    double var_of_mean = 0.0;
    if (z_samples > 1) {
        const double var = std::max(0.0, (sumsq - sum * sum / z_samples) / (z_samples - 1));
        var_of_mean = var / z_samples;
    }
    return {mean, var_of_mean};
}

inline double UStatReplication::phi2_term(int z_samples) const {
    if (z_samples < 1) throw std::invalid_argument("phi2_term: need z_samples >= 1");
    RngStream rng(config_.seed, config_.replication, Stream::Phi2Z);
    const double n = us_->intensity();
    const bool nonneg = us_->kernel().nonneg;
    double z[3];
    double sum = 0.0;
    for (int j = 0; j < z_samples; ++j) {
        sample_density_point(us_->density(), config_.dim, rng, z);
        const PointView zv(z, static_cast<std::size_t>(config_.dim));
        const double df = DF(zv);
        const double dl = DL1F(zv);
        sum += n * df * df * (nonneg ? dl : std::fabs(dl));
    }
    return sum / z_samples;
}

enum class InnerBackend { Auto, Exact, MonteCarlo };

/// Per-replication raw material for the bound terms; reduced in index order.
struct ReplicationData {
    std::vector<double> values;       // F~
    std::vector<double> inner;        // <DF~, -DL^{-1}F~> per replication
    std::vector<double> inner_noise;  // within-configuration variance of the estimate
    std::vector<double> phi2_terms;   // inner z-average of n DF^2 |DL1F|
};

struct ReplicationRequest {
    bool want_inner = false;
    bool want_phi2 = false;
    InnerBackend backend = InnerBackend::Auto;
    int z_samples = 256;
};

template <class Model>
ReplicationData run_replications(const Model& us, std::size_t replications,
                                 std::uint64_t seed, int threads,
                                 const ReplicationRequest& req = {}) {
    ReplicationData data;
    data.values.resize(replications);
    if (req.want_inner) {
        data.inner.resize(replications);
        data.inner_noise.resize(replications);
    }
    if (req.want_phi2) data.phi2_terms.resize(replications);

    parallel_replications(replications, threads, [&](std::size_t r) {
        auto rep = us.make_replication(seed, r);
        data.values[r] = rep.value();
        if (req.want_inner) {
            const bool use_exact = req.backend == InnerBackend::Exact ||
                                   (req.backend == InnerBackend::Auto && rep.has_exact_inner());
            if (use_exact) {
                data.inner[r] = rep.inner_exact();
                data.inner_noise[r] = 0.0;
            } else {
                const auto [ip, noise] = rep.inner_mc(req.z_samples);
                data.inner[r] = ip;
                data.inner_noise[r] = noise;
            }
        }
        if (req.want_phi2) data.phi2_terms[r] = rep.phi2_term(req.z_samples);
    });
    return data;
}

inline McEstimate mean_and_stderr(const std::vector<double>& xs) {
    const std::size_t m = xs.size();
    double sum = 0.0;
    for (double v : xs) sum += v;
    const double mean = sum / static_cast<double>(m);
    double ss = 0.0;
    for (double v : xs) ss += (v - mean) * (v - mean);
    McEstimate est;
    est.value = mean;
    est.stderr_ = m > 1 ? std::sqrt(ss / (static_cast<double>(m - 1) * static_cast<double>(m)))
                        : 0.0;
    return est;
}

/// phi_1 = sqrt(E(1 - <DF~,-DL^{-1}F~>)^2). With the Monte Carlo inner
/// product, the within-configuration sampling variance is subtracted so the
/// squared deviation stays unbiased.
inline McEstimate phi1_from_data(const ReplicationData& data) {
    const std::size_t m = data.inner.size();
    if (m < 2) throw std::invalid_argument("phi1: need >= 2 replications");
    std::vector<double> sq(m);
    for (std::size_t r = 0; r < m; ++r) {
        const double dev = 1.0 - data.inner[r];
        sq[r] = dev * dev - data.inner_noise[r];
    }
    const McEstimate msq = mean_and_stderr(sq);
    McEstimate est;
    est.value = std::sqrt(std::max(0.0, msq.value));
    est.stderr_ = est.value > 0.0 ? msq.stderr_ / (2.0 * est.value) : std::sqrt(msq.stderr_);
    return est;
}

inline McEstimate phi2_from_data(const ReplicationData& data) {
    if (data.phi2_terms.size() < 2) throw std::invalid_argument("phi2: need >= 2 replications");
    return mean_and_stderr(data.phi2_terms);
}

template <class Model>
McEstimate phi1(const Model& us, std::size_t replications, int z_samples, std::uint64_t seed,
                int threads = 0, InnerBackend backend = InnerBackend::Auto) {
    ReplicationRequest req;
    req.want_inner = true;
    req.backend = backend;
    req.z_samples = z_samples;
    return phi1_from_data(run_replications(us, replications, seed, threads, req));
}

template <class Model>
McEstimate phi2(const Model& us, std::size_t replications, int z_samples, std::uint64_t seed,
                int threads = 0) {
    ReplicationRequest req;
    req.want_phi2 = true;
    req.z_samples = z_samples;
    return phi2_from_data(run_replications(us, replications, seed, threads, req));
}

template <class Model>
BoundReport wasserstein_upper_bound(const Model& us, std::size_t replications, int z_samples,
                                    std::uint64_t seed, int threads = 0,
                                    InnerBackend backend = InnerBackend::Auto) {
    ReplicationRequest req;
    req.want_inner = true;
    req.want_phi2 = true;
    req.backend = backend;
    req.z_samples = z_samples;
    const ReplicationData data = run_replications(us, replications, seed, threads, req);
    const McEstimate p1 = phi1_from_data(data);
    const McEstimate p2 = phi2_from_data(data);
    BoundReport report;
    report.phi1 = p1.value;
    report.phi1_stderr = p1.stderr_;
    report.phi2 = p2.value;
    report.phi2_stderr = p2.stderr_;
    report.phi = p1.value + p2.value;
    report.method = "monte_carlo";
    return report;
}

/// The two bound terms from the closed forms alone (indicator + uniform).
inline BoundReport wasserstein_upper_bound_exact(const ChaosKernels& ck) {
    BoundReport report;
    report.phi1 = ck.phi1_exact();
    report.phi2 = ck.phi2_exact();
    report.phi = report.phi1 + report.phi2;
    report.method = "exact";
    return report;
}

/// R^f(z) for one configuration: the Taylor remainder of the Stein pairing
/// evaluated at F~ with the add-one cost at z.
inline double remainder_diagnostic(const SteinSolutionSin& sol, const UStatReplication& rep,
                                   PointView z) {
    return stein_remainder(sol, rep.value(), rep.DF(z));
}

struct OptimalityEstimate {
    double value = 0.0;         // T_n = E[f'(F~) - F~ f(F~)], plain average
    double stderr_ = 0.0;
    double value_cv = 0.0;      // variance-reduced by the control F~ (EF~ = 0)
    double stderr_cv = 0.0;
    double scaled = 0.0;        // sqrt(n) * value_cv
    double scaled_stderr = 0.0;
};

/// Stein optimality functional T_n with f the sine Stein solution. The
/// control variate coefficient E[N sin N] = e^{-1/2} removes the dominant
/// linear fluctuation; both estimators are unbiased since EF~ = 0 exactly.
inline OptimalityEstimate optimality_from_values(const std::vector<double>& values,
                                                 double intensity) {
    if (values.size() < 2)
        throw std::invalid_argument("optimality functional: need >= 2 replications");
    const SteinSolutionSin sol;
    const double cv_coeff = std::exp(-0.5);
    std::vector<double> plain(values.size()), cv(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double g = sol.stein_statistic(values[i]);
        plain[i] = g;
        cv[i] = g - cv_coeff * values[i];
    }
    const McEstimate p = mean_and_stderr(plain);
    const McEstimate c = mean_and_stderr(cv);
    OptimalityEstimate est;
    est.value = p.value;
    est.stderr_ = p.stderr_;
    est.value_cv = c.value;
    est.stderr_cv = c.stderr_;
    est.scaled = std::sqrt(intensity) * c.value;
    est.scaled_stderr = std::sqrt(intensity) * c.stderr_;
    return est;
}

template <class Model>
OptimalityEstimate optimality_functional(const Model& us, std::size_t replications,
                                         std::uint64_t seed, int threads = 0) {
    const ReplicationData data = run_replications(us, replications, seed, threads);
    return optimality_from_values(data.values, us.intensity());
}

} // namespace steinpoisson
