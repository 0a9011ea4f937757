#include "fkpath/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "fkpath/errors.hpp"
#include "fkpath/subordinator.hpp"

#ifndef FKPATH_GIT_DESCRIBE
#define FKPATH_GIT_DESCRIBE "unknown"
#endif

namespace fkpath {

using nlohmann::json;

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names{"subordinator-check", "free-particle", "covariance-table",
                                                "matrix-element",     "n-point",       "field-only",
                                                "ground-energy",      "oracle",        "compare"};
    return names;
}

std::string version_string() { return FKPATH_GIT_DESCRIBE; }

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json estimate_json(const EstimateResult& r) {
    return json{{"mean", number(r.mean)},
                {"stderr", number(r.stderr)},
                {"n_samples", r.n_samples},
                {"n_batches", r.n_batches},
                {"min_path_weight", number(r.min_path_weight)},
                {"max_path_weight", number(r.max_path_weight)},
                {"quadrature_warnings", r.quadrature_warnings},
                {"formal", r.formal}};
}

json diagnostics_json(const GridDiagnostics& d) {
    return json{{"grid_steps", d.steps},
                {"grid_dtau", d.dtau},
                {"nyquist_mass", number(d.nyquist_mass)},
                {"boundary_mass", number(d.boundary_mass)}};
}

json fit_json(const GroundEnergyFit& f) {
    return json{{"kind", "fit"},
                {"valid", f.valid},
                {"diagnostic", f.diagnostic},
                {"energy", number(f.energy)},
                {"energy_stderr", number(f.energy_stderr)},
                {"intercept", number(f.intercept)},
                {"points_used", f.points_used}};
}

/// Objects shared by the path-space subcommands, all validated before any sampling.
struct Setup {
    SubordinatorSpec kinetic{1.0};
    Potential V;
    std::optional<FieldModel> model;
    PolynomialInteraction p;
    StateSpec left;
    StateSpec right;
    EstimatorOptions options;
};

std::size_t space_dim(const ExperimentConfig& c) { return c.particle ? c.particle->dim : 1; }

Setup make_setup(const ExperimentConfig& c) {
    Setup s;
    if (c.particle) {
        s.kinetic = SubordinatorSpec(c.particle->mass);
        s.V = c.particle->potential.build();
    }
    if (c.field) s.model = c.field->build(space_dim(c));
    s.p = c.interaction.build();
    if (c.has_states) {
        s.left.particle = c.left.particle.build();
        s.right.particle = c.right.particle.build();
        if (s.model) {
            s.left.field = c.left.field.build(*s.model);
            s.right.field = c.right.field.build(*s.model);
        } else if (!c.left.field.vectors.empty() || !c.right.field.vectors.empty()) {
            throw ConfigError({"field states need model.field"});
        }
    }
    s.options = estimator_options(c);
    return s;
}

std::vector<FieldInsertion> make_insertions(const ExperimentConfig& c) {
    std::vector<FieldInsertion> out;
    for (const auto& i : c.insertions) out.push_back(FieldInsertion{i.time, i.function.build()});
    return out;
}

std::string oracle_target(const ExperimentConfig& c) {
    if (c.oracle.target != "auto") return c.oracle.target;
    if (c.field_only) return "oscillator";
    if (c.field) return "coupled";
    return "particle";
}

void require_vacuum(const Setup& s) {
    if (!s.left.field.is_vacuum() || !s.right.field.is_vacuum())
        throw ConfigError({"the coupled grid oracle supports vacuum field states only"});
}

struct OracleOutcome {
    json record;
    double value = 0.0;
};

OracleOutcome run_oracle(const ExperimentConfig& c, const Setup& s, const std::string& target) {
    const double t = *c.run.t;
    OracleOutcome o;
    if (target == "particle") {
        const GridValue v = particle_matrix_element_grid(s.left.particle, s.right.particle, s.V, {}, t,
                                                         s.kinetic, c.oracle.x);
        o.value = v.value;
        o.record = diagnostics_json(v.diagnostics);
    } else if (target == "coupled") {
        require_vacuum(s);
        const CoupledOracleResult r =
            coupled_single_mode_grid(s.left.particle, s.right.particle, *s.model->single_mode_model(), s.V, s.p,
                                     t, s.kinetic, Grid2DSpec{c.oracle.x, c.oracle.q}, c.run.horizons);
        o.value = r.element.value;
        o.record = diagnostics_json(r.element.diagnostics);
        if (!r.horizons.empty()) {
            o.record["horizons"] = r.horizons;
            o.record["horizon_values"] = r.values;
        }
        if (r.ground_energy) {
            o.record["ground_energy"] = number(r.ground_energy->energy);
            o.record["ground_energy_valid"] = r.ground_energy->valid;
        }
    } else {
        const FieldOnlyConfig& fo = *c.field_only;
        const GridValue v = oscillator_1d_grid(fo.potential.build(), fo.vector.amplitude,
                                               s.model->single_mode_model()->omega0, t, c.oracle.q);
        o.value = v.value;
        o.record = diagnostics_json(v.diagnostics);
    }
    o.record["kind"] = "oracle";
    o.record["target"] = target;
    o.record["t"] = t;
    o.record["value"] = number(o.value);
    return o;
}

EstimateResult run_monte_carlo(const ExperimentConfig& c, const Setup& s, const std::string& target) {
    const double t = *c.run.t;
    if (target == "particle")
        return fk_particle_estimate(s.left.particle, s.right.particle, s.V, t, s.kinetic, s.options.sampling);
    if (target == "coupled")
        return matrix_element(s.left, s.right, *s.model, s.p, s.V, t, s.kinetic, s.options);
    return field_only_estimate(c.field_only->vector.build(), c.field_only->potential.build(), t, *s.model,
                               s.options.sampling);
}

std::vector<json> subordinator_check(const ExperimentConfig& c) {
    std::vector<json> out;
    const std::size_t n = *c.run.samples;
    std::uint64_t stream = 0;
    for (double m : c.subordinator_check.masses) {
        const SubordinatorSpec spec(m);
        for (double t : c.subordinator_check.times)
            for (double s : c.subordinator_check.s) {
                RandomStream rng(*c.run.seed, stream++);
                const LaplaceCheck chk = empirical_laplace_check(t, s, spec, n, rng);
                const double exact = std::exp(-t * spec.laplace_exponent(s));
                const double z = chk.stderr > 0.0 ? (chk.mean - exact) / chk.stderr : 0.0;
                out.push_back({{"kind", "laplace"},
                               {"mass", m},
                               {"t", t},
                               {"s", s},
                               {"mean", number(chk.mean)},
                               {"stderr", number(chk.stderr)},
                               {"exact", exact},
                               {"z", number(z)},
                               {"within_3sigma", std::abs(z) <= 3.0},
                               {"n_samples", n}});
            }
    }
    return out;
}

std::vector<json> covariance_table(const ExperimentConfig& c) {
    const FieldModel model = c.field->build(space_dim(c));
    const std::size_t dim = space_dim(c);
    std::vector<json> out;
    out.push_back({{"kind", "norm"}, {"w00", model.max_pair_covariance()}});
    const Point origin(dim, 0.0);
    for (double r : c.covariance_table->r)
        for (double tau : c.covariance_table->tau) {
            Point y(dim, 0.0);
            y[0] = r;
            out.push_back({{"kind", "W"}, {"r", r}, {"tau", tau}, {"value", pair_covariance(model, origin, y, tau)}});
        }
    return out;
}

}  // namespace

SubcommandResult execute_subcommand(const std::string& name, const ExperimentConfig& c, bool strict) {
    require_fields(c, name);
    SubcommandResult res;
    const Setup s = make_setup(c);
    std::vector<json>& rec = res.records;

    if (name == "subordinator-check") {
        rec = subordinator_check(c);
    } else if (name == "free-particle") {
        json r = estimate_json(fk_particle_estimate(s.left.particle, s.right.particle, s.V, *c.run.t, s.kinetic,
                                                    s.options.sampling));
        r["kind"] = "estimate";
        r["t"] = *c.run.t;
        rec.push_back(r);
    } else if (name == "covariance-table") {
        rec = covariance_table(c);
    } else if (name == "matrix-element") {
        const double t = *c.run.t;
        if (c.run.refinement_steps.empty()) {
            json r = estimate_json(matrix_element(s.left, s.right, *s.model, s.p, s.V, t, s.kinetic, s.options));
            r["kind"] = "estimate";
            r["t"] = t;
            r["steps"] = s.options.sampling.grid_steps(t);
            rec.push_back(r);
        } else {
            const auto results = matrix_element_refinement(s.left, s.right, *s.model, s.p, s.V, t, s.kinetic,
                                                           s.options, c.run.refinement_steps);
            for (std::size_t i = 0; i < results.size(); ++i) {
                json r = estimate_json(results[i]);
                r["kind"] = "refinement";
                r["t"] = t;
                r["steps"] = c.run.refinement_steps[i];
                r["gap_to_previous"] = i == 0 ? json(nullptr) : number(std::abs(results[i].mean - results[i - 1].mean));
                rec.push_back(r);
            }
        }
    } else if (name == "n-point") {
        const auto ins = make_insertions(c);
        json r = estimate_json(n_point_insertions(s.left, s.right, *s.model, s.V, ins, *c.run.t, s.kinetic, s.options));
        r["kind"] = "estimate";
        r["t"] = *c.run.t;
        r["insertions"] = ins.size();
        rec.push_back(r);
    } else if (name == "field-only") {
        json r = estimate_json(field_only_estimate(c.field_only->vector.build(), c.field_only->potential.build(),
                                                   *c.run.t, *s.model, s.options.sampling));
        r["kind"] = "estimate";
        r["t"] = *c.run.t;
        rec.push_back(r);
    } else if (name == "ground-energy") {
        const GroundEnergyResult g =
            ground_energy_estimate(s.left, s.right, *s.model, s.p, s.V, c.run.horizons, s.kinetic, s.options);
        for (std::size_t i = 0; i < g.estimates.size(); ++i) {
            json r = estimate_json(g.estimates[i]);
            r["kind"] = "horizon";
            r["t"] = c.run.horizons[i];
            rec.push_back(r);
        }
        json f = fit_json(g.fit);
        f["n_samples"] = *c.run.samples;
        rec.push_back(f);
    } else if (name == "oracle") {
        rec.push_back(run_oracle(c, s, oracle_target(c)).record);
    } else if (name == "compare") {
        const std::string target = oracle_target(c);
        const OracleOutcome o = run_oracle(c, s, target);
        const EstimateResult mc = run_monte_carlo(c, s, target);
        const double diff = mc.mean - o.value;
        const double z = mc.stderr > 0.0 ? diff / mc.stderr : (diff == 0.0 ? 0.0 : INFINITY);
        const bool within = std::abs(z) <= c.oracle.threshold_sigma;
        json r = estimate_json(mc);
        r["kind"] = "compare";
        r["target"] = target;
        r["t"] = *c.run.t;
        r["oracle_value"] = number(o.value);
        r["discrepancy"] = number(diff);
        r["z"] = number(z);
        r["threshold_sigma"] = c.oracle.threshold_sigma;
        r["within_threshold"] = within;
        r["boundary_mass"] = o.record["boundary_mass"];
        r["nyquist_mass"] = o.record["nyquist_mass"];
        rec.push_back(r);
        res.breach = strict && !within;
    } else {
        throw std::invalid_argument("unknown subcommand '" + name + "'");
    }

    const std::string hash = config_hash(c);
    for (json& r : rec) {
        r["schema_version"] = result_schema_version;
        r["subcommand"] = name;
        r["config_hash"] = hash;
        r["seed"] = *c.run.seed;
        r["version"] = version_string();
        if (!r.contains("n_samples")) r["n_samples"] = 0;
    }
    return res;
}

namespace {

std::string csv_cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return q + "\"";
    }
    return v.dump();
}

}  // namespace

std::string summary_csv(const std::vector<json>& records) {
    std::set<std::string> keys;
    for (const auto& r : records)
        for (const auto& [k, v] : r.items())
            if (v.is_primitive()) keys.insert(k);
    std::ostringstream os;
    bool first = true;
    for (const auto& k : keys) {
        os << (first ? "" : ",") << k;
        first = false;
    }
    os << '\n';
    for (const auto& r : records) {
        first = true;
        for (const auto& k : keys) {
            os << (first ? "" : ",");
            first = false;
            if (r.contains(k) && r.at(k).is_primitive()) os << csv_cell(r.at(k));
        }
        os << '\n';
    }
    return os.str();
}

void write_results(const ExperimentConfig& c, const std::string& name, const SubcommandResult& result,
                   double wall_seconds) {
    namespace fs = std::filesystem;
    const fs::path dir(c.output.dir);
    fs::create_directories(dir);
    auto open = [&](const char* file) {
        std::ofstream f(dir / file, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + (dir / file).string());
        return f;
    };
    const auto has = [&](const char* fmt) {
        return std::find(c.output.formats.begin(), c.output.formats.end(), fmt) != c.output.formats.end();
    };
    if (has("jsonl")) {
        auto f = open("results.jsonl");
        for (const auto& r : result.records) f << r.dump() << '\n';
    }
    if (has("csv")) {
        auto f = open("summary.csv");
        f << summary_csv(result.records);
    }
    {
        auto f = open("config.json");
        f << serialize_config(c).dump(2) << '\n';
    }
    {
        auto f = open("timing.jsonl");
        f << json{{"subcommand", name},
                  {"config_hash", config_hash(c)},
                  {"seed", c.run.seed.value_or(0)},
                  {"version", version_string()},
                  {"n_samples", c.run.samples.value_or(0)},
                  {"wall_clock_seconds", wall_seconds}}
                 .dump()
          << '\n';
    }
}

int report_current_exception(std::ostream& err) {
    json d;
    int code = exit_other;
    try {
        throw;
    } catch (const ConfigError& e) {
        code = exit_config;
        d = {{"error", "config"}, {"message", e.what()}, {"problems", e.problems()}};
    } catch (const ConfigurationError& e) {
        code = exit_config;
        d = {{"error", "config"}, {"message", e.what()}};
    } catch (const DomainError& e) {
        code = exit_config;
        d = {{"error", "domain"}, {"message", e.what()}};
    } catch (const ModelValidityError& e) {
        code = exit_model;
        d = {{"error", "model_validity"}, {"message", e.what()}};
    } catch (const ResolutionError& e) {
        code = exit_numerical;
        d = {{"error", "resolution"}, {"message", e.what()}};
    } catch (const NumericalConsistencyError& e) {
        code = exit_numerical;
        d = {{"error", "numerical_consistency"}, {"message", e.what()}};
    } catch (const IntegrabilityError& e) {
        code = exit_integrability;
        d = {{"error", "integrability"}, {"message", e.what()}};
    } catch (const std::exception& e) {
        d = {{"error", "internal"}, {"message", e.what()}};
    } catch (...) {
        d = {{"error", "internal"}, {"message", "unknown exception"}};
    }
    d["exit_code"] = code;
    err << d.dump() << std::endl;
    return code;
}

int run_subcommand(const std::string& name, const ExperimentConfig& config, const RunOptions& options) {
    std::ostream& out = options.out ? *options.out : std::cout;
    std::ostream& err = options.err ? *options.err : std::cerr;
    const auto& names = subcommand_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        json d{{"error", "usage"}, {"message", "unknown subcommand '" + name + "'"}, {"subcommands", names},
               {"exit_code", static_cast<int>(exit_usage)}};
        err << d.dump() << std::endl;
        return exit_usage;
    }
    try {
        const auto start = std::chrono::steady_clock::now();
        const SubcommandResult result = execute_subcommand(name, config, options.strict);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_results(config, name, result, wall);
        for (const auto& r : result.records) out << r.dump() << '\n';
        out.flush();
        if (result.breach) {
            json d{{"error", "strict_breach"},
                   {"message", "Monte Carlo and oracle differ by more than the threshold"},
                   {"exit_code", static_cast<int>(exit_strict_breach)}};
            err << d.dump() << std::endl;
            return exit_strict_breach;
        }
        return exit_ok;
    } catch (...) {
        return report_current_exception(err);
    }
}

}  // namespace fkpath
