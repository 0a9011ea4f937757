// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fkpath/cli.hpp"
#include "fkpath/config.hpp"
#include "fkpath/field.hpp"
#include "fkpath/interaction.hpp"
#include "fkpath/subordinator.hpp"
#include "support.hpp"

using namespace fkpath;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string configs = FKPATH_CONFIG_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Shared between criteria 6 and 8.
json single_mode_compare;

Outcome subordinator_law() {
    const auto t0 = std::chrono::steady_clock::now();
    const SubcommandResult r = execute_subcommand("subordinator-check", load_config(configs + "/subordinator.toml"));
    const double secs = seconds_since(t0);
    int ok = 0;
    double worst = 0.0;
    for (const json& rec : r.records) {
        const double z = std::abs(rec["z"].get<double>());
        worst = std::max(worst, z);
        ok += z <= 3.0 && rec["n_samples"] == 100000;
    }
    return {ok == 27 && r.records.size() == 27 && secs < 10.0,
            fmt("%d/27 points within 3 sigma, max |z| %.2f, %.2f s", ok, worst, secs)};
}

Outcome hitting_time() {
    const SubordinatorSpec spec(1.0);
    RandomStream ra(2, 0), rb(2, 1);
    const std::size_t n = 10000;
    std::vector<double> exact(n), hit(n);
    for (std::size_t i = 0; i < n; ++i) {
        exact[i] = sample_increment(1.0, spec, ra).value;
        hit[i] = hitting_time_reference(1.0, spec, 1e-4, rb);
    }
    const double d = testing::ks_statistic(exact, hit), crit = testing::ks_critical(n, n);
    return {d <= crit, fmt("KS D = %.4f, 1%% critical %.4f", d, crit)};
}

Outcome particle_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    const SubcommandResult r = execute_subcommand("compare", load_config(configs + "/free_particle.toml"));
    const double secs = seconds_since(t0);
    const json& rec = r.records.at(0);
    const double mean = rec["mean"], se = rec["stderr"], oracle = rec["oracle_value"], z = rec["z"];
    const bool pass = std::abs(z) <= 3.0 && se <= 0.005 * oracle && rec["n_samples"] == 1000000 && secs < 120.0;
    return {pass, fmt("MC %.6f +- %.6f (%.3f%%), grid %.9f, z %.2f, %.1f s", mean, se, 100.0 * se / oracle, oracle, z,
                      secs)};
}

double brute_path_variance(const ParticlePath& p, const FieldModel& model) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.steps(); ++j)
        for (std::size_t l = 0; l < p.steps(); ++l)
            s += pair_covariance(model, p.position(j), p.position(l), p.grid()[j] - p.grid()[l]) * p.grid().step(j) *
                 p.grid().step(l);
    return s;
}

Outcome covariance_identities() {
    const FieldModel cont = FieldModel::continuum(1, Dispersion{1.0}, FormFactor{});
    const FieldModel single =
        FieldModel::single_mode(SingleModeModel{1.0, GaussianBump{{0.0}, std::sqrt(0.5), 0.5}});
    const FieldVector f{1.0, {0.0}, std::nullopt}, g{0.7, {0.8}, std::nullopt};

    bool bit_exact = true;
    for (const FieldModel* m : {&cont, &single})
        for (double s : {0.0, 0.3, 2.0}) {
            bit_exact = bit_exact && euclid_slice_inner(s, g, s, f, *m) == bos_inner(g, f, *m);
            bit_exact = bit_exact && euclid_slice_inner(s, f, s, f, *m) == bos_inner(f, f, *m);
        }

    double worst_freq = 0.0;
    for (double tau : {0.0, 0.1, 0.5, 1.0, 3.0}) {
        const double a = euclid_slice_inner(0.0, g, tau, f, cont);
        const double b = euclid_slice_inner_frequency(0.0, g, tau, f, cont);
        worst_freq = std::max(worst_freq, std::abs(a - b) / std::abs(a));
    }

    double worst_path = 0.0;
    RandomStream rng(4, 0);
    const SubordinatorSpec kin(1.0);
    const double zero[] = {0.0};
    for (int i = 0; i < 100; ++i) {
        const FieldModel& m = i % 2 ? single : cont;
        const ParticlePath p = sample_path(zero, TimeGrid::uniform(1.0, 64), kin, rng);
        const double slow = brute_path_variance(p, m);
        worst_path = std::max(worst_path, std::abs(path_variance(p, m) - slow) / slow);
    }
    return {bit_exact && worst_freq <= 1e-6 && worst_path <= 1e-8,
            fmt("equal-time %s, k0 rel err %.2e, path variance rel err %.2e over 100 paths", bit_exact ? "bit-exact" : "DIFFERS",
                worst_freq, worst_path)};
}

Outcome conditional_weight() {
    double worst = 0.0;
    for (double kappa : {0.01, 0.1, 1.0})
        for (double s2 : {0.1, 1.0, 10.0}) {
            const double w = conditional_weight_vacuum(s2, PolynomialInteraction{{0, 1}, kappa}).value;
            worst = std::max(worst, std::abs(w - 1.0 / std::sqrt(1.0 + 2.0 * kappa * s2)));
        }
    const PolynomialInteraction quartic{{0, 0, 0, 1}, 0.1};
    bool mc_ok = true;
    std::string zs;
    std::uint64_t stream = 0;
    for (double s2 : {0.1, 1.0, 10.0}) {
        const ConditionalWeight w = conditional_weight_vacuum(s2, quartic);
        RandomStream rng(5, stream++);
        const double sd = std::sqrt(s2);
        double sum = 0.0, sum2 = 0.0;
        const int n = 10000000;
        for (int i = 0; i < n; ++i) {
            const double v = std::exp(-0.1 * std::pow(sd * rng.normal(), 4));
            sum += v;
            sum2 += v * v;
        }
        const double m = sum / n, se = std::sqrt((sum2 / n - m * m) / (n - 1));
        const double z = (w.value - m) / se;
        mc_ok = mc_ok && std::abs(z) <= 3.0 && w.converged;
        zs += fmt(" %.2f", z);
    }
    return {worst <= 1e-10 && mc_ok, fmt("closed-form max err %.1e, quartic z vs 1e7 MC:%s", worst, zs.c_str())};
}

Outcome single_mode_element() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig c = load_config(configs + "/single_mode.json");
    const SubcommandResult r = execute_subcommand("compare", c);
    const double secs = seconds_since(t0);
    single_mode_compare = r.records.at(0);
    const json& rec = single_mode_compare;

    // Oracle self-convergence: halve dtau and double N in both directions.
    ExperimentConfig fine = c;
    fine.oracle.x.points *= 2;
    fine.oracle.x.dtau /= 2;
    fine.oracle.q.points *= 2;
    fine.oracle.q.dtau /= 2;
    const double refined = execute_subcommand("oracle", fine).records.at(0)["value"];
    const double oracle = rec["oracle_value"], mean = rec["mean"], se = rec["stderr"], z = rec["z"];
    const double self = std::abs(refined - oracle);
    const bool pass = std::abs(z) <= 3.0 && se <= 0.01 * mean && self <= 1e-6 && rec["n_samples"] == 100000 &&
                      rec["seed"] == 1 && secs < 600.0;
    return {pass, fmt("MC %.6f +- %.6f (%.3f%%), grid %.9f (self-convergence %.1e), z %.2f, %.1f s", mean, se,
                      100.0 * se / mean, oracle, self, z, secs)};
}

Outcome field_only() {
    const SubcommandResult r = execute_subcommand("compare", load_config(configs + "/field_only.json"));
    const json& rec = r.records.at(0);
    const double mean = rec["mean"], se = rec["stderr"], oracle = rec["oracle_value"], z = rec["z"];
    return {std::abs(z) <= 3.0, fmt("MC %.6f +- %.6f, oscillator grid %.9f, z %.2f", mean, se, oracle, z)};
}

Outcome positivity() {
    const json& rec = single_mode_compare;
    if (rec.is_null()) return {false, "criterion 6 did not run"};
    const double min_w = rec["min_path_weight"], mean = rec["mean"], se = rec["stderr"];
    return {min_w > 0.0 && mean > 10.0 * se,
            fmt("min path weight %.6f, element / stderr = %.1f", min_w, mean / se)};
}

Outcome refinement() {
    const SubcommandResult r = execute_subcommand("matrix-element", load_config(configs + "/refinement.json"));
    std::string gaps;
    double prev = INFINITY;
    bool decreasing = true;
    for (const json& rec : r.records) {
        if (!rec.contains("gap_to_previous") || rec["gap_to_previous"].is_null()) continue;
        const double g = rec["gap_to_previous"];
        decreasing = decreasing && g < prev;
        prev = g;
        gaps += fmt(" %.2e", g);
    }
    return {decreasing && r.records.size() == 4, fmt("n = 50,100,200,400 gaps:%s", gaps.c_str())};
}

Outcome reproducibility() {
    const fs::path root = fs::temp_directory_path() / "fkpath_acceptance_repro";
    fs::remove_all(root);
    bool same = true;
    int files = 0;
    for (const char* cfg : {"subordinator.toml", "field_only.json"}) {
        ExperimentConfig c = load_config(configs + "/" + cfg);
        const std::string name = std::string(cfg).starts_with("subordinator") ? "subordinator-check" : "field-only";
        for (const char* run : {"a", "b"}) {
            c.output.dir = (root / cfg / run).string();
            std::ostringstream sink;
            RunOptions o;
            o.out = &sink;
            o.err = &sink;
            if (run_subcommand(name, c, o) != exit_ok) return {false, std::string("run failed: ") + cfg};
        }
        for (const char* file : {"results.jsonl", "summary.csv"}) {
            const std::string a = slurp(root / cfg / "a" / file), b = slurp(root / cfg / "b" / file);
            same = same && !a.empty() && a == b;
            ++files;
        }
    }
    fs::remove_all(root);
    return {same, fmt("%d result files compared byte for byte", files)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"subordinator Laplace law on the 27-point grid", subordinator_law},
        {"hitting-time reference agrees in law (KS, 1%)", hitting_time},
        {"particle Feynman-Kac estimate vs spectral grid", particle_oracle},
        {"covariance identities", covariance_identities},
        {"conditional weight quadrature", conditional_weight},
        {"single-mode matrix element vs coupled grid", single_mode_element},
        {"field-only estimate vs oscillator grid", field_only},
        {"positivity of path weights and matrix element", positivity},
        {"time-grid refinement is a Cauchy sequence", refinement},
        {"byte-identical reruns", reproducibility},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("criterion %zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
