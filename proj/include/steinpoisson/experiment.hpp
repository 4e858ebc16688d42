#pragma once

// Experiment configuration and the end-to-end pipeline:
// simulate -> bound -> distance -> constants -> rate fit, with reproducible
// seeds, per-batch CSV rows and a JSON summary.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "steinpoisson/asymptotics.hpp"
#include "steinpoisson/malliavin.hpp"

namespace steinpoisson {

struct RadiusRule {
    enum class Kind { Fixed, Power };
    Kind kind = Kind::Power;
    double t = 0.0;     // fixed radius
    double gamma = 0.0; // power rule t = n^{-gamma}

    double radius(double n) const {
        return kind == Kind::Fixed ? t : std::pow(n, -gamma);
    }
};

struct ExperimentConfig {
    int dimension = 1;
    std::string density_name = "uniform";
    double sine_amplitude = 0.5;
    std::string density_csv;
    std::vector<double> intensities;
    RadiusRule radius;
    long replications = 0;
    int z_samples = 256;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    int batch_size = 100;
    int threads = 0;
    bool emit_plot_data = false;

    Density make_density() const {
        if (density_name == "uniform") return Density::uniform(dimension);
        if (density_name == "sine") return Density::sine(dimension, sine_amplitude);
        if (density_name == "tabulated") {
            if (dimension != 1)
                throw std::invalid_argument("config: tabulated densities are supported for "
                                            "dimension 1 only");
            if (density_csv.empty())
                throw std::invalid_argument("config: tabulated density needs \"csv\": <path>");
            return Density::tabulated_from_csv(density_csv);
        }
        throw std::invalid_argument("config: unknown density \"" + density_name +
                                    "\" (expected uniform, sine or tabulated)");
    }

    struct Regime {
        bool nt_d_grows = false;   // n t_n^d -> infinity (Theorem 4.2 hypothesis)
        bool nt_d3_grows = false;  // n (t_n^d)^3 -> infinity (lower-bound hypothesis)
        std::string description;
    };

    Regime regime() const {
        Regime r;
        if (radius.kind == RadiusRule::Kind::Fixed) {
            r.nt_d_grows = r.nt_d3_grows = true;
            r.description = "fixed radius: n t^d and n (t^d)^3 both grow linearly";
        } else {
            r.nt_d_grows = radius.gamma < 1.0 / dimension;
            r.nt_d3_grows = radius.gamma < 1.0 / (3.0 * dimension);
            std::ostringstream os;
            os << "power rule t = n^{-" << radius.gamma << "}: n t^d "
               << (r.nt_d_grows ? "grows" : "does NOT grow") << ", n (t^d)^3 "
               << (r.nt_d3_grows ? "grows" : "does NOT grow");
            r.description = os.str();
        }
        return r;
    }

    void validate() const {
        if (dimension < 1 || dimension > 3)
            throw std::invalid_argument("config: dimension must be 1, 2 or 3");
        if (intensities.empty())
            throw std::invalid_argument("config: intensities must be a non-empty list");
        for (double n : intensities)
            if (!(n > 0.0))
                throw std::invalid_argument("config: every intensity must be > 0");
        if (replications < 1)
            throw std::invalid_argument("config: replications must be >= 1");
        if (z_samples < 1) throw std::invalid_argument("config: z_samples must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
        if (radius.kind == RadiusRule::Kind::Fixed && !(radius.t > 0.0 && radius.t < 0.5))
            throw std::invalid_argument("config: fixed radius must satisfy 0 < t < 1/2");
        if (radius.kind == RadiusRule::Kind::Power && !(radius.gamma > 0.0))
            throw std::invalid_argument("config: power rule needs gamma > 0");
        for (double n : intensities) {
            const double t = radius.radius(n);
            if (!(t > 0.0 && t < 0.5)) {
                std::ostringstream os;
                os << "config: radius rule gives t = " << t << " at n = " << n
                   << "; need 0 < t < 1/2 (raise gamma or drop small intensities)";
                throw std::invalid_argument(os.str());
            }
        }
        make_density();
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig cfg;
        if (j.contains("dimension")) cfg.dimension = j.at("dimension").get<int>();
        if (j.contains("density")) {
            const auto& d = j.at("density");
            cfg.density_name = d.value("name", "uniform");
            cfg.sine_amplitude = d.value("amplitude", 0.5);
            cfg.density_csv = d.value("csv", "");
        }
        if (!j.contains("intensities"))
            throw std::invalid_argument("config: missing \"intensities\" (list of n values)");
        cfg.intensities = j.at("intensities").get<std::vector<double>>();
        if (!j.contains("radius"))
            throw std::invalid_argument("config: missing \"radius\" "
                                        "({\"rule\":\"fixed\",\"t\":..} or "
                                        "{\"rule\":\"power\",\"gamma\":..})");
        const auto& r = j.at("radius");
        const std::string rule = r.value("rule", "power");
        if (rule == "fixed") {
            cfg.radius.kind = RadiusRule::Kind::Fixed;
            if (!r.contains("t"))
                throw std::invalid_argument("config: fixed radius rule needs \"t\"");
            cfg.radius.t = r.at("t").get<double>();
        } else if (rule == "power") {
            cfg.radius.kind = RadiusRule::Kind::Power;
            if (!r.contains("gamma"))
                throw std::invalid_argument("config: power radius rule needs \"gamma\"");
            cfg.radius.gamma = r.at("gamma").get<double>();
        } else {
            throw std::invalid_argument("config: radius rule must be \"fixed\" or \"power\"");
        }
        if (!j.contains("replications"))
            throw std::invalid_argument("config: missing \"replications\"");
        cfg.replications = j.at("replications").get<long>();
        cfg.z_samples = j.value("z_samples", 256);
        cfg.seed = j.value("seed", static_cast<std::uint64_t>(1));
        cfg.output_dir = j.value("output_dir", "out");
        cfg.batch_size = j.value("batch_size", 100);
        cfg.threads = j.value("threads", 0);
        cfg.emit_plot_data = j.value("emit_plot_data", false);
        cfg.validate();
        return cfg;
    }

    static ExperimentConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("config: cannot open " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw std::runtime_error("config: " + path + " is not valid JSON: " + e.what());
        }
        return from_json(j);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["dimension"] = dimension;
        j["density"] = {{"name", density_name}};
        if (density_name == "sine") j["density"]["amplitude"] = sine_amplitude;
        if (density_name == "tabulated") j["density"]["csv"] = density_csv;
        j["intensities"] = intensities;
        if (radius.kind == RadiusRule::Kind::Fixed)
            j["radius"] = {{"rule", "fixed"}, {"t", radius.t}};
        else
            j["radius"] = {{"rule", "power"}, {"gamma", radius.gamma}};
        j["replications"] = replications;
        j["z_samples"] = z_samples;
        j["seed"] = seed;
        j["output_dir"] = output_dir;
        j["batch_size"] = batch_size;
        j["emit_plot_data"] = emit_plot_data;
        return j;
    }
};

// -- CSV helpers ---------------------------------------------------------

/// RFC 4180: quote fields containing comma, quote or newline.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// -- results -----------------------------------------------------------------

struct BatchRow {
    long batch = 0;
    long replications = 0;
    double mean_F = 0.0;
    double var_F = 0.0;
    double phi1 = 0.0, phi1_stderr = 0.0;
    double phi2 = 0.0, phi2_stderr = 0.0;
    double w1 = 0.0;
    double t_stat = 0.0, t_stat_stderr = 0.0;
};

struct IntensityResult {
    double n = 0.0, t = 0.0;
    long replications = 0;
    double mean_emp = 0.0, var_emp = 0.0;
    double mean_exact = 0.0, var_exact = 0.0;
    McEstimate phi1, phi2;
    double phi = 0.0;
    double w1 = 0.0;
    OptimalityEstimate optimality;
    GridPointQuantities quantities;
    double wall_seconds = 0.0;
    std::vector<BatchRow> batches;
};

struct ExperimentSummary {
    ExperimentConfig config;
    std::vector<IntensityResult> results;
    RateFit phi_fit;   // valid when >= 3 intensities
    RateFit w1_fit;
    bool has_fits = false;
    OptimalityConstants constants; // valid when >= 2 intensities
    bool has_constants = false;
    double wall_seconds = 0.0;
};

namespace detail {

inline std::pair<double, double> mean_and_sample_var(const double* xs, long m) {
    double sum = 0.0;
    for (long i = 0; i < m; ++i) sum += xs[i];
    const double mean = sum / m;
    double ss = 0.0;
    for (long i = 0; i < m; ++i) ss += (xs[i] - mean) * (xs[i] - mean);
    return {mean, m > 1 ? ss / (m - 1) : 0.0};
}

} // namespace detail

inline IntensityResult evaluate_intensity(const ExperimentConfig& cfg, const Density& density,
                                          double n) {
    const auto t0 = std::chrono::steady_clock::now();
    const double t = cfg.radius.radius(n);
    const TorusDomain domain(cfg.dimension);
    NormalizedUStat us(KernelSpec::indicator(t), density, domain, n);

    ReplicationRequest req;
    req.want_inner = true;
    req.want_phi2 = true;
    req.z_samples = cfg.z_samples;
    const ReplicationData data =
        run_replications(us, static_cast<std::size_t>(cfg.replications), cfg.seed, cfg.threads,
                         req);

    IntensityResult res;
    res.n = n;
    res.t = t;
    res.replications = cfg.replications;
    res.mean_exact = us.mean();
    res.var_exact = us.variance();

    std::vector<double> raw(data.values.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = us.mean() + us.sd() * data.values[i];
    std::tie(res.mean_emp, res.var_emp) =
        detail::mean_and_sample_var(raw.data(), static_cast<long>(raw.size()));

    res.phi1 = phi1_from_data(data);
    res.phi2 = phi2_from_data(data);
    res.phi = res.phi1.value + res.phi2.value;
    res.w1 = empirical_w1(data.values);
    res.optimality = optimality_from_values(data.values, n);
    res.quantities = grid_point_quantities(us.ck(), res.phi);

    const long R = cfg.replications;
    for (long start = 0; start < R; start += cfg.batch_size) {
        const long len = std::min<long>(cfg.batch_size, R - start);
        BatchRow row;
        row.batch = start / cfg.batch_size;
        row.replications = len;
        std::tie(row.mean_F, row.var_F) = detail::mean_and_sample_var(raw.data() + start, len);
        if (len > 1) {
            ReplicationData slice;
            slice.values.assign(data.values.begin() + start, data.values.begin() + start + len);
            slice.inner.assign(data.inner.begin() + start, data.inner.begin() + start + len);
            slice.inner_noise.assign(data.inner_noise.begin() + start,
                                     data.inner_noise.begin() + start + len);
            slice.phi2_terms.assign(data.phi2_terms.begin() + start,
                                    data.phi2_terms.begin() + start + len);
            const McEstimate p1 = phi1_from_data(slice);
            const McEstimate p2 = phi2_from_data(slice);
            row.phi1 = p1.value;
            row.phi1_stderr = p1.stderr_;
            row.phi2 = p2.value;
            row.phi2_stderr = p2.stderr_;
            row.w1 = empirical_w1(slice.values);
            const OptimalityEstimate opt = optimality_from_values(slice.values, n);
            row.t_stat = opt.value_cv;
            row.t_stat_stderr = opt.stderr_cv;
        }
        res.batches.push_back(row);
    }

    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

inline ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Density density = cfg.make_density();

    ExperimentSummary summary;
    summary.config = cfg;
    for (double n : cfg.intensities)
        summary.results.push_back(evaluate_intensity(cfg, density, n));

    if (summary.results.size() >= 3) {
        std::vector<std::pair<double, double>> phi_pairs, w1_pairs;
        for (const auto& r : summary.results) {
            phi_pairs.emplace_back(r.n, r.phi);
            w1_pairs.emplace_back(r.n, r.w1);
        }
        summary.phi_fit = rate_fit(phi_pairs);
        summary.w1_fit = rate_fit(w1_pairs);
        summary.has_fits = true;
    }
    if (summary.results.size() >= 2) {
        std::vector<GridPointQuantities> grid;
        for (const auto& r : summary.results) grid.push_back(r.quantities);
        summary.constants = optimality_constants(grid, density);
        summary.has_constants = true;
    }
    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return summary;
}

// -- output writers -----------------------------------------------------------

inline const char* results_csv_header() {
    return "n,t,replications,batch,mean_F_emp,var_F_emp,mean_F_exact,var_F_exact,"
           "phi1,phi1_stderr,phi2,phi2_stderr,phi,w1_emp,t_stat,t_stat_stderr,seed";
}

inline void write_results_csv(const ExperimentSummary& summary, std::ostream& out) {
    out << results_csv_header() << "\n";
    for (const auto& r : summary.results) {
        for (const auto& b : r.batches) {
            out << csv_number(r.n) << ',' << csv_number(r.t) << ',' << b.replications << ','
                << b.batch << ',' << csv_number(b.mean_F) << ',' << csv_number(b.var_F) << ','
                << csv_number(r.mean_exact) << ',' << csv_number(r.var_exact) << ','
                << csv_number(b.phi1) << ',' << csv_number(b.phi1_stderr) << ','
                << csv_number(b.phi2) << ',' << csv_number(b.phi2_stderr) << ','
                << csv_number(b.phi1 + b.phi2) << ',' << csv_number(b.w1) << ','
                << csv_number(b.t_stat) << ',' << csv_number(b.t_stat_stderr) << ','
                << summary.config.seed << "\n";
        }
    }
}

inline nlohmann::json rate_fit_to_json(const RateFit& fit) {
    return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
}

inline nlohmann::json constants_to_json(const OptimalityConstants& oc) {
    nlohmann::json j;
    j["C"] = oc.C;
    j["exact_ratio"] = {{"alpha", oc.alpha},
                        {"rho_prime", oc.rho_prime},
                        {"rho", oc.rho},
                        {"beta", oc.beta},
                        {"efpp", oc.efpp},
                        {"limit_constant", oc.limit_constant},
                        {"predicted_t_sqrt_n", oc.predicted_t_sqrt_n},
                        {"alpha_stabilization", oc.alpha_stabilization},
                        {"rho_stabilization", oc.rho_stabilization},
                        {"beta_stabilization", oc.beta_stabilization}};
    j["closed_form"] = {{"alpha", oc.alpha_closed},
                        {"rho_prime", oc.rho_prime_closed},
                        {"beta", oc.beta_closed},
                        {"efpp_displayed", oc.efpp_displayed},
                        {"limit_constant", oc.limit_constant_closed},
                        {"predicted_t_sqrt_n", oc.predicted_t_sqrt_n_closed}};
    j["backend_gaps"] = {{"alpha", oc.gap_alpha}, {"rho", oc.gap_rho}, {"beta", oc.gap_beta}};
    j["optimality_predicate_rho_alpha_neq_beta_half"] = oc.optimality_predicate;
    j["un_integrability_scaled"] = oc.un_integrability;
    return j;
}

inline nlohmann::json summary_to_json(const ExperimentSummary& summary) {
    nlohmann::json j;
    j["config"] = summary.config.to_json();
    const auto regime = summary.config.regime();
    j["regime"] = {{"nt_d_grows", regime.nt_d_grows},
                   {"nt_d3_grows", regime.nt_d3_grows},
                   {"description", regime.description}};
    j["results"] = nlohmann::json::array();
    for (const auto& r : summary.results) {
        j["results"].push_back({{"n", r.n},
                                {"t", r.t},
                                {"replications", r.replications},
                                {"mean_emp", r.mean_emp},
                                {"var_emp", r.var_emp},
                                {"mean_exact", r.mean_exact},
                                {"var_exact", r.var_exact},
                                {"phi1", r.phi1.value},
                                {"phi1_stderr", r.phi1.stderr_},
                                {"phi2", r.phi2.value},
                                {"phi2_stderr", r.phi2.stderr_},
                                {"phi", r.phi},
                                {"w1", r.w1},
                                {"t_stat", r.optimality.value},
                                {"t_stat_stderr", r.optimality.stderr_},
                                {"t_stat_cv", r.optimality.value_cv},
                                {"t_stat_cv_stderr", r.optimality.stderr_cv},
                                {"t_stat_sqrt_n", r.optimality.scaled},
                                {"wall_seconds", r.wall_seconds}});
    }
    if (summary.has_fits) {
        j["rate_fit_phi"] = rate_fit_to_json(summary.phi_fit);
        j["rate_fit_w1"] = rate_fit_to_json(summary.w1_fit);
    }
    if (summary.has_constants) j["optimality_constants"] = constants_to_json(summary.constants);
    j["wall_seconds"] = summary.wall_seconds;
    return j;
}

inline void write_plot_data(const ExperimentSummary& summary, std::ostream& out) {
    out << "log_n,log_phi,log_w1\n";
    for (const auto& r : summary.results)
        out << csv_number(std::log(r.n)) << ',' << csv_number(std::log(r.phi)) << ','
            << csv_number(std::log(r.w1)) << "\n";
}

inline void write_experiment_outputs(const ExperimentSummary& summary,
                                     const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream csv(fs::path(out_dir) / "results.csv");
        write_results_csv(summary, csv);
    }
    {
        std::ofstream js(fs::path(out_dir) / "summary.json");
        js << summary_to_json(summary).dump(2) << "\n";
    }
    if (summary.config.emit_plot_data) {
        std::ofstream plot(fs::path(out_dir) / "plot_data.csv");
        write_plot_data(summary, plot);
    }
}

} // namespace steinpoisson
