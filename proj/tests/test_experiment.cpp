#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "steinpoisson/experiment.hpp"

using namespace steinpoisson;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
using nlohmann::json;

namespace {

json base_config() {
    return json{{"dimension", 1},
                {"density", {{"name", "uniform"}}},
                {"intensities", {32, 64}},
                {"radius", {{"rule", "power"}, {"gamma", 0.25}}},
                {"replications", 60},
                {"z_samples", 32},
                {"seed", 7},
                {"batch_size", 25}};
}

} // namespace

TEST_CASE("config validation") {
    CHECK_NOTHROW(ExperimentConfig::from_json(base_config()));

    SECTION("replications must be positive") {
        auto j = base_config();
        j["replications"] = 0;
        CHECK_THROWS_WITH(ExperimentConfig::from_json(j), ContainsSubstring("replications"));
    }

    SECTION("missing required fields") {
        auto j = base_config();
        j.erase("intensities");
        CHECK_THROWS_WITH(ExperimentConfig::from_json(j), ContainsSubstring("intensities"));
        j = base_config();
        j.erase("radius");
        CHECK_THROWS_WITH(ExperimentConfig::from_json(j), ContainsSubstring("radius"));
    }

    SECTION("radius rule must keep t below 1/2") {
        auto j = base_config();
        j["intensities"] = {4};
        CHECK_THROWS_WITH(ExperimentConfig::from_json(j), ContainsSubstring("n = 4"));
        j = base_config();
        j["radius"] = {{"rule", "fixed"}, {"t", 0.5}};
        CHECK_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
    }

    SECTION("unknown density and unsupported tabulated dimension") {
        auto j = base_config();
        j["density"] = {{"name", "cauchy"}};
        CHECK_THROWS_WITH(ExperimentConfig::from_json(j), ContainsSubstring("cauchy"));
        j = base_config();
        j["dimension"] = 2;
        j["density"] = {{"name", "tabulated"}, {"csv", "x.csv"}};
        CHECK_THROWS_WITH(ExperimentConfig::from_json(j), ContainsSubstring("dimension 1"));
    }

    SECTION("regime classification") {
        auto j = base_config();
        ExperimentConfig cfg = ExperimentConfig::from_json(j);
        auto r = cfg.regime(); // gamma = 1/4 < 1/3 at d = 1
        CHECK(r.nt_d_grows);
        CHECK(r.nt_d3_grows);

        j["radius"] = {{"rule", "power"}, {"gamma", 0.4}}; // 1/3 < 0.4 < 1
        cfg = ExperimentConfig::from_json(j);
        r = cfg.regime();
        CHECK(r.nt_d_grows);
        CHECK_FALSE(r.nt_d3_grows);

        j["radius"] = {{"rule", "fixed"}, {"t", 0.2}};
        cfg = ExperimentConfig::from_json(j);
        r = cfg.regime();
        CHECK(r.nt_d_grows);
        CHECK(r.nt_d3_grows);
    }
}

TEST_CASE("experiment run: schema, batches, determinism") {
    const ExperimentConfig cfg = ExperimentConfig::from_json(base_config());
    const ExperimentSummary summary = run_experiment(cfg);

    REQUIRE(summary.results.size() == 2);
    for (const auto& r : summary.results) {
        CHECK(r.batches.size() == 3); // ceil(60 / 25)
        CHECK(std::isfinite(r.phi));
        CHECK(r.phi > 0.0);
        CHECK(std::isfinite(r.w1));
        CHECK(r.var_exact > 0.0);
        CHECK(std::fabs(r.mean_emp - r.mean_exact) <
              6.0 * std::sqrt(r.var_exact / static_cast<double>(r.replications)));
    }
    CHECK(summary.has_constants);
    CHECK_FALSE(summary.has_fits); // needs >= 3 intensities

    SECTION("CSV header is the fixed schema") {
        std::ostringstream os;
        write_results_csv(summary, os);
        std::istringstream is(os.str());
        std::string header;
        std::getline(is, header);
        CHECK(header ==
              "n,t,replications,batch,mean_F_emp,var_F_emp,mean_F_exact,var_F_exact,"
              "phi1,phi1_stderr,phi2,phi2_stderr,phi,w1_emp,t_stat,t_stat_stderr,seed");
        int rows = 0;
        std::string line;
        while (std::getline(is, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 6); // 2 intensities x 3 batches
    }

    SECTION("thread count changes nothing") {
        ExperimentConfig one = cfg, four = cfg;
        one.threads = 1;
        four.threads = 4;
        std::ostringstream csv1, csv4;
        write_results_csv(run_experiment(one), csv1);
        write_results_csv(run_experiment(four), csv4);
        REQUIRE(csv1.str() == csv4.str());
    }

    SECTION("summary JSON carries the pipeline outputs") {
        const json j = summary_to_json(summary);
        CHECK(j.contains("regime"));
        CHECK(j.contains("optimality_constants"));
        CHECK(j["results"].size() == 2);
        CHECK(j["results"][0].contains("phi"));
        CHECK(j["results"][0].contains("w1"));
    }
}

TEST_CASE("rate fit over three intensities appears in the summary") {
    auto j = base_config();
    j["intensities"] = {32, 64, 128};
    j["replications"] = 40;
    const ExperimentSummary summary = run_experiment(ExperimentConfig::from_json(j));
    REQUIRE(summary.has_fits);
    CHECK(std::isfinite(summary.phi_fit.slope));
    CHECK(summary.phi_fit.r_squared >= 0.0);
    CHECK(summary.phi_fit.r_squared <= 1.0);
}

TEST_CASE("csv quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("with,comma") == "\"with,comma\"");
    CHECK(csv_field("with\"quote") == "\"with\"\"quote\"");
}

TEST_CASE("cli binary round trips", "[cli]") {
    // ctest runs in the build directory next to the binary; skip quietly
    // when invoked from elsewhere
    std::ifstream probe("./stein-poisson");
    if (!probe.good()) {
        SUCCEED("stein-poisson binary not in cwd; skipping subprocess checks");
        return;
    }

    SECTION("selftest exits zero") {
        REQUIRE(std::system("./stein-poisson selftest > cli_selftest.log 2>&1") == 0);
    }

    SECTION("rate-fit recovers the exact slope from a CSV") {
        {
            std::ofstream csv("rate_fit_input.csv");
            csv << "n,phi\n100,0.1\n400,0.05\n1600,0.025\n";
        }
        REQUIRE(std::system("./stein-poisson rate-fit --input rate_fit_input.csv "
                            "--out rate_fit_out.json > /dev/null") == 0);
        std::ifstream in("rate_fit_out.json");
        REQUIRE(in.good());
        const json fit = json::parse(in);
        CHECK(fit["slope"].get<double>() == Approx(-0.5).margin(1e-12));
        std::remove("rate_fit_input.csv");
        std::remove("rate_fit_out.json");
    }

    SECTION("bit-identical CSV across --threads") {
        {
            std::ofstream cfg("cli_cfg.json");
            cfg << base_config().dump();
        }
        REQUIRE(std::system("./stein-poisson constants --config cli_cfg.json --out cli_out1 "
                            "--threads 1 > /dev/null") == 0);
        REQUIRE(std::system("./stein-poisson constants --config cli_cfg.json --out cli_out2 "
                            "--threads 4 > /dev/null") == 0);
        auto slurp = [](const char* p) {
            std::ifstream in(p);
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        };
        const std::string a = slurp("cli_out1/results.csv");
        const std::string b = slurp("cli_out2/results.csv");
        REQUIRE_FALSE(a.empty());
        REQUIRE(a == b);
        std::remove("cli_cfg.json");
    }
}
