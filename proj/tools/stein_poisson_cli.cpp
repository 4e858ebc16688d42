// stein-poisson: experiment runner for Berry-Esseen Wasserstein bounds of
// Poisson edge-count U-statistics.
//
// Subcommands: simulate, bound, wasserstein, constants, rate-fit, selftest.
// `constants` runs the full pipeline (simulate -> bound -> distance ->
// constants -> rate fit) and writes results.csv + summary.json.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "steinpoisson/experiment.hpp"
#include "steinpoisson/selftest.hpp"

namespace sp = steinpoisson;
namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = -1;
    bool emit_plot_data = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_config = true) {
    auto* c = cmd->add_option("--config", opts.config_path, "experiment config (JSON)");
    if (needs_config) c->required();
    cmd->add_option("--seed", opts.seed, "override the config seed")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
    cmd->add_option("--threads", opts.threads,
                    "worker threads (0 = hardware; affects wall time only, never results)");
    cmd->add_flag("--emit-plot-data", opts.emit_plot_data,
                  "write (log n, log phi, log W1) triples for external plotting");
}

sp::ExperimentConfig load_config(const CommonOpts& opts) {
    sp::ExperimentConfig cfg = sp::ExperimentConfig::from_file(opts.config_path);
    if (opts.seed_set) cfg.seed = opts.seed;
    if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
    if (opts.threads >= 0) cfg.threads = opts.threads;
    if (opts.emit_plot_data) cfg.emit_plot_data = true;
    return cfg;
}

int cmd_simulate(const CommonOpts& opts, bool dump_points) {
    const sp::ExperimentConfig cfg = load_config(opts);
    const sp::Density density = cfg.make_density();
    const sp::TorusDomain domain(cfg.dimension);
    fs::create_directories(cfg.output_dir);
    std::ofstream csv(fs::path(cfg.output_dir) / "edge_counts.csv");
    csv << "n,t,replication,points,edges,seed\n";
    std::ofstream points_csv;
    if (dump_points) {
        points_csv.open(fs::path(cfg.output_dir) / "points.csv");
        points_csv << "n,replication,point,x1,x2,x3\n";
    }
    for (double n : cfg.intensities) {
        const double t = cfg.radius.radius(n);
        const std::size_t R = static_cast<std::size_t>(cfg.replications);
        std::vector<std::int64_t> edges(R);
        std::vector<std::size_t> counts(R);
        sp::parallel_replications(R, cfg.threads, [&](std::size_t r) {
            const auto config = sp::sample_poisson_process(n, density, domain, cfg.seed, r);
            counts[r] = config.size();
            edges[r] = sp::count_edges(config, t);
        });
        for (std::size_t r = 0; r < R; ++r)
            csv << sp::csv_number(n) << ',' << sp::csv_number(t) << ',' << r << ',' << counts[r]
                << ',' << edges[r] << ',' << cfg.seed << "\n";
        if (dump_points) {
            for (std::size_t r = 0; r < R; ++r) {
                const auto config = sp::sample_poisson_process(n, density, domain, cfg.seed, r);
                for (std::size_t i = 0; i < config.size(); ++i) {
                    points_csv << sp::csv_number(n) << ',' << r << ',' << i;
                    for (int k = 0; k < 3; ++k)
                        points_csv << ','
                                   << (k < cfg.dimension ? sp::csv_number(config.point(i)[k])
                                                         : std::string());
                    points_csv << "\n";
                }
            }
        }
    }
    std::cout << "wrote " << (fs::path(cfg.output_dir) / "edge_counts.csv").string() << "\n";
    return 0;
}

int cmd_bound(const CommonOpts& opts) {
    const sp::ExperimentConfig cfg = load_config(opts);
    const sp::Density density = cfg.make_density();
    fs::create_directories(cfg.output_dir);
    std::ofstream csv(fs::path(cfg.output_dir) / "bounds.csv");
    csv << "n,t,replications,phi1,phi1_stderr,phi2,phi2_stderr,phi,seed\n";
    nlohmann::json rows = nlohmann::json::array();
    for (double n : cfg.intensities) {
        const double t = cfg.radius.radius(n);
        sp::NormalizedUStat us(sp::KernelSpec::indicator(t), density,
                               sp::TorusDomain(cfg.dimension), n);
        const sp::BoundReport report = sp::wasserstein_upper_bound(
            us, static_cast<std::size_t>(cfg.replications), cfg.z_samples, cfg.seed, cfg.threads);
        csv << sp::csv_number(n) << ',' << sp::csv_number(t) << ',' << cfg.replications << ','
            << sp::csv_number(report.phi1) << ',' << sp::csv_number(report.phi1_stderr) << ','
            << sp::csv_number(report.phi2) << ',' << sp::csv_number(report.phi2_stderr) << ','
            << sp::csv_number(report.phi) << ',' << cfg.seed << "\n";
        rows.push_back({{"n", n},
                        {"t", t},
                        {"phi1", report.phi1},
                        {"phi2", report.phi2},
                        {"phi", report.phi},
                        {"method", report.method}});
        std::cout << "n=" << n << " phi1=" << report.phi1 << " phi2=" << report.phi2
                  << " phi=" << report.phi << "\n";
    }
    std::ofstream js(fs::path(cfg.output_dir) / "bounds.json");
    js << rows.dump(2) << "\n";
    return 0;
}

int cmd_wasserstein(const CommonOpts& opts) {
    const sp::ExperimentConfig cfg = load_config(opts);
    const sp::Density density = cfg.make_density();
    fs::create_directories(cfg.output_dir);
    std::ofstream csv(fs::path(cfg.output_dir) / "wasserstein.csv");
    csv << "n,t,replications,w1,t_stat,t_stat_stderr,t_stat_cv,t_stat_cv_stderr,"
           "t_stat_sqrt_n,seed\n";
    for (double n : cfg.intensities) {
        const double t = cfg.radius.radius(n);
        sp::NormalizedUStat us(sp::KernelSpec::indicator(t), density,
                               sp::TorusDomain(cfg.dimension), n);
        const sp::ReplicationData data = sp::run_replications(
            us, static_cast<std::size_t>(cfg.replications), cfg.seed, cfg.threads);
        const double w1 = sp::empirical_w1(data.values);
        const sp::OptimalityEstimate opt = sp::optimality_from_values(data.values, n);
        csv << sp::csv_number(n) << ',' << sp::csv_number(t) << ',' << cfg.replications << ','
            << sp::csv_number(w1) << ',' << sp::csv_number(opt.value) << ','
            << sp::csv_number(opt.stderr_) << ',' << sp::csv_number(opt.value_cv) << ','
            << sp::csv_number(opt.stderr_cv) << ',' << sp::csv_number(opt.scaled) << ','
            << cfg.seed << "\n";
        std::cout << "n=" << n << " W1=" << w1 << " T=" << opt.value
                  << " T*sqrt(n)=" << opt.scaled << "\n";
    }
    return 0;
}

int cmd_constants(const CommonOpts& opts) {
    const sp::ExperimentConfig cfg = load_config(opts);
    const sp::ExperimentSummary summary = sp::run_experiment(cfg);
    sp::write_experiment_outputs(summary, cfg.output_dir);
    if (summary.has_constants) {
        std::ofstream js(fs::path(cfg.output_dir) / "constants.json");
        js << sp::constants_to_json(summary.constants).dump(2) << "\n";
        std::cout << "C=" << summary.constants.C
                  << " predicted T*sqrt(n)=" << summary.constants.predicted_t_sqrt_n
                  << " (closed-form backend: " << summary.constants.predicted_t_sqrt_n_closed
                  << ")\n";
    }
    if (summary.has_fits)
        std::cout << "phi rate: slope=" << summary.phi_fit.slope
                  << " r2=" << summary.phi_fit.r_squared << "\n";
    std::cout << "wrote " << (fs::path(cfg.output_dir) / "summary.json").string() << "\n";
    return 0;
}

int cmd_rate_fit(const std::string& input, const std::string& column,
                 const std::string& out_path) {
    std::ifstream in(input);
    if (!in) throw std::runtime_error("rate-fit: cannot open " + input);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("rate-fit: empty CSV " + input);
    std::vector<std::string> names;
    {
        std::istringstream hs(header);
        std::string field;
        while (std::getline(hs, field, ',')) names.push_back(field);
    }
    auto find_col = [&](const std::string& name) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<long>(i);
        throw std::runtime_error("rate-fit: CSV " + input + " has no column \"" + name + "\"");
    };
    const long n_col = find_col("n");
    const long v_col = find_col(column);

    std::map<double, std::pair<double, long>> by_n; // n -> (sum, count)
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        long idx = 0;
        double nval = 0.0, vval = 0.0;
        while (std::getline(ls, field, ',')) {
            if (idx == n_col) nval = std::stod(field);
            if (idx == v_col) vval = std::stod(field);
            ++idx;
        }
        auto& slot = by_n[nval];
        slot.first += vval;
        slot.second += 1;
    }
    std::vector<std::pair<double, double>> pairs;
    for (const auto& [n, sum_count] : by_n)
        pairs.emplace_back(n, sum_count.first / sum_count.second);
    const sp::RateFit fit = sp::rate_fit(pairs);
    const nlohmann::json j = sp::rate_fit_to_json(fit);
    std::cout << j.dump(2) << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << j.dump(2) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wasserstein Berry-Esseen bounds for Poisson edge-count U-statistics"};
    app.require_subcommand(1);

    CommonOpts sim_opts, bound_opts, w1_opts, const_opts;
    bool dump_points = false;

    auto* sim = app.add_subcommand("simulate", "sample point sets and count edges");
    add_common(sim, sim_opts);
    sim->add_flag("--dump-points", dump_points, "also write the sampled points");

    auto* bound = app.add_subcommand("bound", "compute the bound terms phi1, phi2");
    add_common(bound, bound_opts);

    auto* wass = app.add_subcommand("wasserstein",
                                    "empirical W1 distance and the Stein statistic per n");
    add_common(wass, w1_opts);

    auto* consts = app.add_subcommand(
        "constants", "full pipeline: bounds, W1, optimality constants, rate fit");
    add_common(consts, const_opts);

    std::string fit_input, fit_column = "phi", fit_out;
    auto* fit = app.add_subcommand("rate-fit", "log-log regression over an existing results CSV");
    fit->add_option("--input", fit_input, "results CSV (needs an n column)")->required();
    fit->add_option("--column", fit_column, "value column to regress (default phi)");
    fit->add_option("--out", fit_out, "also write the fit JSON here");

    auto* self = app.add_subcommand("selftest", "run the module invariant suites");
    (void)self;

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_opts, dump_points);
        if (bound->parsed()) return cmd_bound(bound_opts);
        if (wass->parsed()) return cmd_wasserstein(w1_opts);
        if (consts->parsed()) return cmd_constants(const_opts);
        if (fit->parsed()) return cmd_rate_fit(fit_input, fit_column, fit_out);
        if (self->parsed()) return sp::run_selftest();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
