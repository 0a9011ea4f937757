#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gsl/gsl_sf_bessel.h>
#include <json.hpp>

#include "fkpath/cli.hpp"
#include "fkpath/config.hpp"
#include "fkpath/errors.hpp"

using namespace fkpath;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string configs = FKPATH_CONFIG_DIR;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("fkpath_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args, const fs::path& err) {
    const std::string cmd = std::string(FKPATH_CLI) + " " + args + " > /dev/null 2> " + err.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("empty config lists the missing fields") {
    const ExperimentConfig empty = parse_config(json::object());
    try {
        require_fields(empty, "matrix-element");
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        std::string all;
        for (const auto& p : e.problems()) all += p + "\n";
        CHECK(all.find("run.seed") != std::string::npos);
        CHECK(all.find("run.samples") != std::string::npos);
        CHECK(e.problems().size() >= 3);
    }
    std::ostringstream err;
    RunOptions o;
    o.err = &err;
    CHECK(run_subcommand("matrix-element", empty, o) == exit_config);
    const json diag = json::parse(err.str());
    CHECK(diag["exit_code"] == exit_config);
    CHECK(diag["problems"].is_array());
}

TEST_CASE("binary exit codes") {
    const fs::path dir = scratch("exit");
    std::ofstream(dir / "empty.json") << "{}";
    CHECK(run_cli("matrix-element --config " + (dir / "empty.json").string(), dir / "err1") == exit_config);
    CHECK(slurp(dir / "err1").find("run.seed") != std::string::npos);
    CHECK(run_cli("no-such-command --config " + (dir / "empty.json").string(), dir / "err2") == exit_usage);
    CHECK(run_cli("matrix-element", dir / "err3") == exit_usage);
    std::ofstream(dir / "bad.json") << R"({"run": {"seed": 1, "smaples": 3}})";
    CHECK(run_cli("free-particle --config " + (dir / "bad.json").string(), dir / "err4") == exit_config);
    CHECK(slurp(dir / "err4").find("smaples") != std::string::npos);
    std::ofstream(dir / "neg.json") << R"({
      "model": {"particle": {"dim": 1, "mass": 1.0},
                "field": {"type": "single_mode", "omega0": 1.0}},
      "interaction": {"coefficients": [0, 0, 0, 1], "kappa": -0.1},
      "states": {"left": {"particle": {"type": "normalized_bump", "center": [0.0], "width": 1.0}},
                 "right": {"particle": {"type": "normalized_bump", "center": [0.0], "width": 1.0}}},
      "run": {"t": 1.0, "steps": 10, "samples": 100, "seed": 1},
      "output": {"dir": ")" + (dir / "neg").string() + R"("}})";
    CHECK(run_cli("matrix-element --config " + (dir / "neg.json").string(), dir / "err5") == exit_integrability);
}

TEST_CASE("configs round-trip through serialization") {
    for (const auto& entry : fs::directory_iterator(configs)) {
        CAPTURE(entry.path().string());
        const ExperimentConfig c = load_config(entry.path().string());
        const json once = serialize_config(c);
        const json twice = serialize_config(parse_config(once));
        CHECK(once.dump() == twice.dump());
        CHECK(config_hash(c) == config_hash(parse_config(once)));
    }
    // The same experiment in TOML and JSON has the same canonical form.
    const fs::path dir = scratch("toml");
    std::ofstream(dir / "a.toml") << "[run]\nseed = 4\nsamples = 10\n[output]\ndir = \"x\"\n";
    std::ofstream(dir / "a.json") << R"({"run": {"seed": 4, "samples": 10}, "output": {"dir": "x"}})";
    CHECK(serialize_config(load_config((dir / "a.toml").string())).dump() ==
          serialize_config(load_config((dir / "a.json").string())).dump());
}

TEST_CASE("identical config and seed give byte-identical result files") {
    const fs::path dir = scratch("repro");
    ExperimentConfig c = load_config(configs + "/single_mode.json");
    c.run.samples = 2000;
    c.run.batches = 20;
    for (const char* run : {"a", "b"}) {
        c.output.dir = (dir / run).string();
        std::ostringstream sink;
        RunOptions o;
        o.out = &sink;
        o.err = &sink;
        REQUIRE(run_subcommand("matrix-element", c, o) == exit_ok);
    }
    for (const char* file : {"results.jsonl", "summary.csv"}) {
        CAPTURE(file);
        const std::string a = slurp(dir / "a" / file), b = slurp(dir / "b" / file);
        CHECK_FALSE(a.empty());
        CHECK(a == b);
    }
    const json rec = json::parse(slurp(dir / "a" / "results.jsonl").substr(0, slurp(dir / "a" / "results.jsonl").find('\n')));
    for (const char* key : {"config_hash", "seed", "version", "n_samples", "schema_version", "subcommand"})
        CHECK(rec.contains(key));
    CHECK(rec["version"] == version_string());
    CHECK(fs::exists(dir / "a" / "timing.jsonl"));
}

TEST_CASE("compare on the free-particle config agrees with the grid") {
    ExperimentConfig c = load_config(configs + "/free_particle.toml");
    c.run.samples = 100000;
    const SubcommandResult r = execute_subcommand("compare", c, true);
    REQUIRE(r.records.size() == 1);
    const json& rec = r.records[0];
    CHECK(rec["target"] == "particle");
    CHECK(std::abs(rec["z"].get<double>()) <= 3.0);
    CHECK(rec["within_threshold"] == true);
    CHECK_FALSE(r.breach);
}

TEST_CASE("covariance table spot value") {
    const ExperimentConfig c = load_config(configs + "/covariance.toml");
    const SubcommandResult r = execute_subcommand("covariance-table", c);
    // ||rho||^2 = int e^{-k^2} / sqrt(k^2 + 1) dk = e^{1/2} K_0(1/2) for the unit Gaussian cutoff.
    const double w00 = 0.5 * std::exp(0.5) * gsl_sf_bessel_K0(0.5);
    bool found = false;
    for (const json& rec : r.records)
        if (rec["kind"] == "W" && rec["r"] == 0.0 && rec["tau"] == 0.0) {
            CHECK(rec["value"].get<double>() == doctest::Approx(w00).epsilon(1e-9));
            found = true;
        } else if (rec["kind"] == "W") {
            CHECK(rec["value"].get<double>() <= w00 * (1.0 + 1e-12));
        }
    CHECK(found);
}

TEST_CASE("summary csv is the sorted union of scalar keys") {
    const std::vector<json> recs{json{{"b", 1}, {"a", "x"}}, json{{"c", 2.5}, {"nested", json::object()}}};
    CHECK(summary_csv(recs) == "a,b,c\nx,1,\n,,2.5\n");
}
