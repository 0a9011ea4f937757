#include "fkpath/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "fkpath/errors.hpp"

namespace fkpath {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : "; ") + s;
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : ConfigurationError("invalid configuration: " + join(problems)), problems_(std::move(problems)) {}

namespace {

// ---------------------------------------------------------------------------
// Reading

bool convert(const json& j, double& out) {
    if (!j.is_number()) return false;
    out = j.get<double>();
    return std::isfinite(out);
}

bool convert(const json& j, std::uint64_t& out) {
    if (j.is_number_unsigned()) {
        out = j.get<std::uint64_t>();
        return true;
    }
    if (j.is_number_integer()) {
        if (j.get<std::int64_t>() < 0) return false;
        out = static_cast<std::uint64_t>(j.get<std::int64_t>());
        return true;
    }
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (!(v >= 0.0) || v != std::floor(v) || v > 1.8e19) return false;
        out = static_cast<std::uint64_t>(v);
        return true;
    }
    return false;
}

static_assert(std::is_same_v<std::size_t, std::uint64_t>);

bool convert(const json& j, int& out) {
    double v = 0.0;
    if (!convert(j, v) || v != std::floor(v) || std::abs(v) > 1e9) return false;
    out = static_cast<int>(v);
    return true;
}

bool convert(const json& j, bool& out) {
    if (!j.is_boolean()) return false;
    out = j.get<bool>();
    return true;
}

bool convert(const json& j, std::string& out) {
    if (!j.is_string()) return false;
    out = j.get<std::string>();
    return true;
}

template <class T>
bool convert(const json& j, std::vector<T>& out) {
    if (!j.is_array()) return false;
    std::vector<T> tmp;
    for (const auto& e : j) {
        T v{};
        if (!convert(e, v)) return false;
        tmp.push_back(std::move(v));
    }
    out = std::move(tmp);
    return true;
}

template <class T>
const char* type_name() {
    if constexpr (std::is_same_v<T, double>) return "a finite number";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_same_v<T, int>) return "an integer";
    else if constexpr (std::is_integral_v<T>) return "a non-negative integer";
    else return "an array of the right element type";
}

/// Walks one JSON object, collecting every problem instead of stopping at the first.
class Reader {
public:
    Reader(const json* j, std::string path, std::vector<std::string>& problems)
        : j_(j), path_(std::move(path)), problems_(&problems) {
        if (j_ != nullptr && !j_->is_object()) {
            problems_->push_back(where() + " must be a table/object");
            j_ = nullptr;
        }
    }

    [[nodiscard]] bool has(const char* key) const { return j_ != nullptr && j_->contains(key); }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!has(key)) return;
        if (!convert(j_->at(key), out)) problems_->push_back(field(key) + " must be " + type_name<T>());
    }

    template <class T>
    void require(const char* key, T& out) {
        if (!has(key)) {
            seen_.insert(key);
            problems_->push_back("missing field " + field(key));
            return;
        }
        get(key, out);
    }

    template <class T>
    void get(const char* key, std::optional<T>& out) {
        seen_.insert(key);
        if (!has(key)) return;
        T v{};
        if (convert(j_->at(key), v)) out = v;
        else problems_->push_back(field(key) + " must be " + type_name<T>());
    }

    Reader child(const char* key) {
        seen_.insert(key);
        return Reader(has(key) ? &j_->at(key) : nullptr, field(key), *problems_);
    }

    /// Elements of an array-of-objects field.
    std::vector<Reader> children(const char* key) {
        seen_.insert(key);
        std::vector<Reader> out;
        if (!has(key)) return out;
        const json& arr = j_->at(key);
        if (!arr.is_array()) {
            problems_->push_back(field(key) + " must be an array");
            return out;
        }
        for (std::size_t i = 0; i < arr.size(); ++i)
            out.emplace_back(&arr[i], field(key) + "[" + std::to_string(i) + "]", *problems_);
        return out;
    }

    void problem(const std::string& msg) { problems_->push_back(where() + ": " + msg); }
    void missing(const char* key) { problems_->push_back("missing field " + field(key)); }

    /// Reports keys that no reader asked for (typos, fields of another type).
    void finish() {
        if (j_ == nullptr) return;
        for (const auto& [k, v] : j_->items())
            if (!seen_.count(k)) problems_->push_back("unknown field " + field(k.c_str()));
    }

    [[nodiscard]] bool present() const { return j_ != nullptr; }
    [[nodiscard]] std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
    [[nodiscard]] std::string where() const { return path_.empty() ? "config" : path_; }

private:
    const json* j_;
    std::string path_;
    std::vector<std::string>* problems_;
    std::set<std::string> seen_;
};

void read(Reader r, FunctionConfig& f) {
    r.require("type", f.type);
    if (f.type == "zero") {
    } else if (f.type == "constant") {
        r.require("value", f.value);
    } else if (f.type == "gaussian_bump") {
        r.require("center", f.center);
        r.require("width", f.width);
        r.get("amplitude", f.amplitude);
    } else if (f.type == "normalized_bump") {
        r.require("center", f.center);
        r.require("width", f.width);
    } else if (f.type == "box") {
        r.require("lower", f.lower);
        r.require("upper", f.upper);
        r.get("value", f.value);
    } else {
        r.problem("unknown function type '" + f.type + "'");
    }
    r.finish();
}

json write(const FunctionConfig& f) {
    json j{{"type", f.type}};
    if (f.type == "constant") j["value"] = f.value;
    if (f.type == "gaussian_bump") j.update({{"center", f.center}, {"width", f.width}, {"amplitude", f.amplitude}});
    if (f.type == "normalized_bump") j.update({{"center", f.center}, {"width", f.width}});
    if (f.type == "box") j.update({{"lower", f.lower}, {"upper", f.upper}, {"value", f.value}});
    return j;
}

void read(Reader r, PotentialConfig& v) {
    r.require("type", v.type);
    if (v.type == "zero") {
    } else if (v.type == "constant") {
        r.require("value", v.value);
    } else if (v.type == "gaussian_well") {
        r.require("depth", v.depth);
        r.require("width", v.width);
        r.require("center", v.center);
    } else if (v.type == "square_well") {
        r.require("depth", v.depth);
        r.require("half_width", v.half_width);
        r.require("center", v.center);
    } else if (v.type == "tabulated") {
        r.require("x_min", v.x_min);
        r.require("spacing", v.spacing);
        r.require("values", v.values);
    } else {
        r.problem("unknown potential type '" + v.type + "'");
    }
    r.finish();
}

json write(const PotentialConfig& v) {
    json j{{"type", v.type}};
    if (v.type == "constant") j["value"] = v.value;
    if (v.type == "gaussian_well") j.update({{"depth", v.depth}, {"width", v.width}, {"center", v.center}});
    if (v.type == "square_well") j.update({{"depth", v.depth}, {"half_width", v.half_width}, {"center", v.center}});
    if (v.type == "tabulated") j.update({{"x_min", v.x_min}, {"spacing", v.spacing}, {"values", v.values}});
    return j;
}

void read(Reader r, ParticleConfig& p) {
    r.require("dim", p.dim);
    r.require("mass", p.mass);
    if (r.has("potential")) read(r.child("potential"), p.potential);
    else r.child("potential");
    r.finish();
}

json write(const ParticleConfig& p) {
    return json{{"dim", p.dim}, {"mass", p.mass}, {"potential", write(p.potential)}};
}

void read(Reader r, FieldConfig& f) {
    r.require("type", f.type);
    if (f.type == "single_mode") {
        r.require("omega0", f.omega0);
        if (r.has("coupling")) read(r.child("coupling"), f.coupling);
    } else if (f.type == "continuum") {
        r.require("mass", f.mass);
        Reader ff = r.child("form_factor");
        if (!ff.present()) r.missing("form_factor");
        ff.get("family", f.form_family);
        ff.require("cutoff", f.cutoff);
        if (f.form_family != "gaussian" && f.form_family != "sharp")
            ff.problem("family must be 'gaussian' or 'sharp'");
        ff.finish();
        Reader q = r.child("quadrature");
        q.get("nodes", f.nodes);
        q.get("radius_factor", f.radius_factor);
        q.finish();
    } else {
        r.problem("field type must be 'single_mode' or 'continuum'");
    }
    r.finish();
}

json write(const FieldConfig& f) {
    json j{{"type", f.type}};
    if (f.type == "single_mode") j.update({{"omega0", f.omega0}, {"coupling", write(f.coupling)}});
    if (f.type == "continuum")
        j.update({{"mass", f.mass},
                  {"form_factor", {{"family", f.form_family}, {"cutoff", f.cutoff}}},
                  {"quadrature", {{"nodes", f.nodes}, {"radius_factor", f.radius_factor}}}});
    return j;
}

void read(Reader r, InteractionConfig& c) {
    r.get("coefficients", c.coefficients);
    r.get("kappa", c.kappa);
    r.get("order", c.order);
    r.get("allow_formal", c.allow_formal);
    r.get("weight_form", c.weight_form);
    if (c.weight_form != "integrated" && c.weight_form != "pointwise")
        r.problem("weight_form must be 'integrated' or 'pointwise'");
    r.finish();
}

json write(const InteractionConfig& c) {
    return json{{"coefficients", c.coefficients}, {"kappa", c.kappa}, {"order", c.order},
                {"allow_formal", c.allow_formal}, {"weight_form", c.weight_form}};
}

void read(Reader r, FieldVectorConfig& v) {
    r.get("amplitude", v.amplitude);
    r.get("center", v.center);
    Reader p = r.child("profile");
    if (p.present()) {
        p.require("family", v.profile_family);
        p.require("cutoff", v.profile_cutoff);
        p.finish();
    }
    r.finish();
}

json write(const FieldVectorConfig& v) {
    json j{{"amplitude", v.amplitude}, {"center", v.center}};
    if (!v.profile_family.empty()) j["profile"] = {{"family", v.profile_family}, {"cutoff", v.profile_cutoff}};
    return j;
}

void read(Reader r, FieldStateConfig& s) {
    for (auto& c : r.children("vectors")) {
        FieldVectorConfig v;
        read(std::move(c), v);
        s.vectors.push_back(v);
    }
    for (auto& c : r.children("terms")) {
        CylinderTerm t;
        c.require("coefficient", t.coefficient);
        c.require("exponents", t.exponents);
        c.finish();
        s.terms.push_back(t);
    }
    r.get("wick_degrees", s.wick_degrees);
    r.finish();
}

json write(const FieldStateConfig& s) {
    json vectors = json::array(), terms = json::array();
    for (const auto& v : s.vectors) vectors.push_back(write(v));
    for (const auto& t : s.terms) terms.push_back({{"coefficient", t.coefficient}, {"exponents", t.exponents}});
    return json{{"vectors", vectors}, {"terms", terms}, {"wick_degrees", s.wick_degrees}};
}

void read(Reader r, StateConfig& s) {
    Reader p = r.child("particle");
    if (p.present()) read(std::move(p), s.particle);
    else r.missing("particle");
    if (r.has("field")) read(r.child("field"), s.field);
    r.finish();
}

json write(const StateConfig& s) { return json{{"particle", write(s.particle)}, {"field", write(s.field)}}; }

void read(Reader r, ScalarFunctionConfig& f) {
    r.require("type", f.type);
    if (f.type == "polynomial") {
        r.require("coefficients", f.coefficients);
    } else if (f.type == "indicator") {
        r.require("lower", f.lower);
        r.require("upper", f.upper);
        r.get("value", f.value);
    } else if (f.type == "gaussian_damping") {
        r.get("amplitude", f.amplitude);
        r.require("rate", f.rate);
    } else {
        r.problem("unknown scalar function type '" + f.type + "'");
    }
    r.finish();
}

json write(const ScalarFunctionConfig& f) {
    json j{{"type", f.type}};
    if (f.type == "polynomial") j["coefficients"] = f.coefficients;
    if (f.type == "indicator") j.update({{"lower", f.lower}, {"upper", f.upper}, {"value", f.value}});
    if (f.type == "gaussian_damping") j.update({{"amplitude", f.amplitude}, {"rate", f.rate}});
    return j;
}

void read(Reader r, GridSpec& g) {
    r.get("half_length", g.half_length);
    r.get("points", g.points);
    r.get("dtau", g.dtau);
    r.get("boundary_tolerance", g.boundary_tolerance);
    r.finish();
}

json write(const GridSpec& g) {
    return json{{"half_length", g.half_length}, {"points", g.points}, {"dtau", g.dtau},
                {"boundary_tolerance", g.boundary_tolerance}};
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig parse_config(const json& doc) {
    std::vector<std::string> problems;
    ExperimentConfig c;
    Reader root(&doc, "", problems);

    Reader model = root.child("model");
    if (model.has("particle")) {
        c.particle.emplace();
        read(model.child("particle"), *c.particle);
    }
    if (model.has("field")) {
        c.field.emplace();
        read(model.child("field"), *c.field);
    }
    model.finish();

    if (root.has("interaction")) read(root.child("interaction"), c.interaction);

    Reader states = root.child("states");
    if (states.present()) {
        c.has_states = true;
        Reader l = states.child("left");
        if (l.present()) read(std::move(l), c.left);
        else states.missing("left");
        Reader rr = states.child("right");
        if (rr.present()) read(std::move(rr), c.right);
        else states.missing("right");
        states.finish();
    }

    for (auto& ins : root.children("insertions")) {
        InsertionConfig i;
        ins.require("time", i.time);
        Reader fn = ins.child("function");
        if (fn.present()) read(std::move(fn), i.function);
        else ins.missing("function");
        ins.finish();
        c.insertions.push_back(i);
    }

    if (root.has("field_only")) {
        c.field_only.emplace();
        Reader fo = root.child("field_only");
        Reader v = fo.child("vector");
        if (v.present()) read(std::move(v), c.field_only->vector);
        else fo.missing("vector");
        Reader p = fo.child("potential");
        if (p.present()) read(std::move(p), c.field_only->potential);
        else fo.missing("potential");
        fo.finish();
    }

    Reader run = root.child("run");
    run.get("t", c.run.t);
    run.get("horizons", c.run.horizons);
    run.get("steps", c.run.steps);
    run.get("steps_per_unit", c.run.steps_per_unit);
    run.get("sample_refinement", c.run.sample_refinement);
    run.get("refinement_steps", c.run.refinement_steps);
    run.get("samples", c.run.samples);
    run.get("batches", c.run.batches);
    run.get("seed", c.run.seed);
    run.get("n_inner", c.run.n_inner);
    run.finish();

    Reader sc = root.child("subordinator_check");
    sc.get("masses", c.subordinator_check.masses);
    sc.get("times", c.subordinator_check.times);
    sc.get("s", c.subordinator_check.s);
    sc.finish();

    if (root.has("covariance_table")) {
        c.covariance_table.emplace();
        Reader ct = root.child("covariance_table");
        ct.require("r", c.covariance_table->r);
        ct.require("tau", c.covariance_table->tau);
        ct.finish();
    }

    Reader oracle = root.child("oracle");
    oracle.get("target", c.oracle.target);
    if (oracle.has("x")) read(oracle.child("x"), c.oracle.x);
    if (oracle.has("q")) read(oracle.child("q"), c.oracle.q);
    oracle.get("threshold_sigma", c.oracle.threshold_sigma);
    oracle.finish();

    Reader out = root.child("output");
    out.get("dir", c.output.dir);
    out.get("formats", c.output.formats);
    for (const auto& f : c.output.formats)
        if (f != "jsonl" && f != "csv") out.problem("unknown output format '" + f + "'");
    out.finish();

    root.finish();
    if (!problems.empty()) throw ConfigError(problems);
    return c;
}

json serialize_config(const ExperimentConfig& c) {
    json j;
    json model = json::object();
    if (c.particle) model["particle"] = write(*c.particle);
    if (c.field) model["field"] = write(*c.field);
    j["model"] = model;
    j["interaction"] = write(c.interaction);
    if (c.has_states) j["states"] = {{"left", write(c.left)}, {"right", write(c.right)}};
    json ins = json::array();
    for (const auto& i : c.insertions) ins.push_back({{"time", i.time}, {"function", write(i.function)}});
    j["insertions"] = ins;
    if (c.field_only)
        j["field_only"] = {{"vector", write(c.field_only->vector)}, {"potential", write(c.field_only->potential)}};
    json run{{"horizons", c.run.horizons},
             {"steps", c.run.steps},
             {"steps_per_unit", c.run.steps_per_unit},
             {"sample_refinement", c.run.sample_refinement},
             {"refinement_steps", c.run.refinement_steps},
             {"batches", c.run.batches},
             {"n_inner", c.run.n_inner}};
    if (c.run.t) run["t"] = *c.run.t;
    if (c.run.samples) run["samples"] = *c.run.samples;
    if (c.run.seed) run["seed"] = *c.run.seed;
    j["run"] = run;
    j["subordinator_check"] = {{"masses", c.subordinator_check.masses},
                               {"times", c.subordinator_check.times},
                               {"s", c.subordinator_check.s}};
    if (c.covariance_table) j["covariance_table"] = {{"r", c.covariance_table->r}, {"tau", c.covariance_table->tau}};
    j["oracle"] = {{"target", c.oracle.target},
                   {"x", write(c.oracle.x)},
                   {"q", write(c.oracle.q)},
                   {"threshold_sigma", c.oracle.threshold_sigma}};
    j["output"] = {{"dir", c.output.dir}, {"formats", c.output.formats}};
    return j;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const bool is_toml = path.size() >= 5 && path.substr(path.size() - 5) == ".toml";
    json doc;
    if (is_toml) {
        try {
            const toml::table tbl = toml::parse(text, path);
            std::stringstream js;
            js << toml::json_formatter{tbl};
            doc = json::parse(js.str());
        } catch (const toml::parse_error& e) {
            throw ConfigError({"TOML parse error in '" + path + "': " + std::string(e.description())});
        }
    } else {
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError({"JSON parse error in '" + path + "': " + std::string(e.what())});
        }
    }
    return parse_config(doc);
}

std::string config_hash(const ExperimentConfig& config) {
    // The output block only says where results go, so it does not enter the hash.
    nlohmann::json doc = serialize_config(config);
    doc.erase("output");
    const std::string text = doc.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

// ---------------------------------------------------------------------------
// Builders

SpatialFunction FunctionConfig::build() const {
    if (type == "zero") return SpatialFunction::zero();
    if (type == "constant") return SpatialFunction::constant(value);
    if (type == "gaussian_bump") return GaussianBump{center, width, amplitude};
    if (type == "normalized_bump") return SpatialFunction::normalized_bump(center, width);
    if (type == "box") return BoxIndicator{lower, upper, value};
    throw ConfigError({"unknown function type '" + type + "'"});
}

Potential PotentialConfig::build() const {
    if (type == "zero") return ZeroPotential{};
    if (type == "constant") return ConstantPotential{value};
    if (type == "gaussian_well") return GaussianWell{depth, width, center};
    if (type == "square_well") return SquareWell{depth, half_width, center};
    if (type == "tabulated") return TabulatedPotential{x_min, spacing, values};
    throw ConfigError({"unknown potential type '" + type + "'"});
}

FieldModel FieldConfig::build(std::size_t dim) const {
    if (type == "single_mode") return FieldModel::single_mode(SingleModeModel{omega0, coupling.build()});
    const FormFactor form{form_family == "sharp" ? FormFactorFamily::sharp_cutoff : FormFactorFamily::gaussian_cutoff,
                          cutoff};
    return FieldModel::continuum(dim, Dispersion{mass}, form, QuadratureOptions{nodes, radius_factor});
}

PolynomialInteraction InteractionConfig::build() const {
    PolynomialInteraction p{coefficients, kappa};
    p.validate();
    return p;
}

FieldVector FieldVectorConfig::build() const {
    FieldVector v{amplitude, center, std::nullopt};
    if (!profile_family.empty()) {
        if (profile_family != "gaussian" && profile_family != "sharp")
            throw ConfigError({"profile family must be 'gaussian' or 'sharp'"});
        v.profile = FormFactor{profile_family == "sharp" ? FormFactorFamily::sharp_cutoff
                                                         : FormFactorFamily::gaussian_cutoff,
                               profile_cutoff};
    }
    return v;
}

FieldState FieldStateConfig::build(const FieldModel& model) const {
    FieldState s;
    for (const auto& v : vectors) s.vectors.push_back(v.build());
    if (!wick_degrees.empty()) {
        if (wick_degrees.size() > s.vectors.size())
            throw ConfigError({"wick_degrees has more entries than field vectors"});
        const auto m = static_cast<Eigen::Index>(s.vectors.size());
        Eigen::MatrixXd cov(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b)
                cov(a, b) = 0.5 * bos_inner(s.vectors[static_cast<std::size_t>(a)],
                                            s.vectors[static_cast<std::size_t>(b)], model);
        s.polynomial = CylinderPolynomial::wick(cov, wick_degrees);
    } else if (!terms.empty()) {
        s.polynomial = CylinderPolynomial{terms};
    }
    return s;
}

ScalarFunction ScalarFunctionConfig::build() const {
    if (type == "polynomial") return PolynomialFunction{coefficients};
    if (type == "indicator") return IndicatorFunction{lower, upper, value};
    if (type == "gaussian_damping") return GaussianDamping{amplitude, rate};
    throw ConfigError({"unknown scalar function type '" + type + "'"});
}

EstimatorOptions estimator_options(const ExperimentConfig& c) {
    EstimatorOptions o;
    o.sampling.layout.n_samples = c.run.samples.value_or(100000);
    o.sampling.layout.n_batches = c.run.batches;
    o.sampling.layout.seed = c.run.seed.value_or(1);
    o.sampling.steps = c.run.steps;
    o.sampling.steps_per_unit = c.run.steps_per_unit;
    o.sampling.sample_refinement = c.run.sample_refinement;
    o.weight.order = c.interaction.order;
    o.weight.allow_formal = c.interaction.allow_formal;
    o.n_inner = c.run.n_inner;
    o.weight_form = c.interaction.weight_form == "pointwise" ? WeightForm::pointwise : WeightForm::integrated;
    return o;
}

void require_fields(const ExperimentConfig& c, const std::string& sub) {
    std::vector<std::string> missing;
    auto need = [&](bool ok, const char* what) {
        if (!ok) missing.push_back(std::string("missing field ") + what);
    };
    const bool sampling = sub != "covariance-table" && sub != "oracle";
    need(c.run.seed.has_value(), "run.seed");
    if (sampling) need(c.run.samples.has_value(), "run.samples");

    std::string target;
    if (sub == "oracle" || sub == "compare") {
        target = c.oracle.target;
        if (target == "auto") {
            if (c.field_only) target = "oscillator";
            else if (c.field) target = "coupled";
            else target = "particle";
        }
        if (target != "particle" && target != "coupled" && target != "oscillator")
            missing.push_back("oracle.target must be auto, particle, coupled or oscillator");
    }
    const bool wants_particle = sub == "free-particle" || sub == "matrix-element" || sub == "n-point" ||
                                sub == "ground-energy" || target == "particle" || target == "coupled";
    const bool wants_field = sub == "covariance-table" || sub == "matrix-element" || sub == "n-point" ||
                             sub == "field-only" || sub == "ground-energy" || target == "coupled" ||
                             target == "oscillator";
    if (wants_particle) need(c.particle.has_value(), "model.particle");
    if (wants_field) need(c.field.has_value(), "model.field");
    if (wants_particle) need(c.has_states, "states");
    if (sub == "free-particle" || sub == "matrix-element" || sub == "n-point" || sub == "field-only" ||
        sub == "oracle" || sub == "compare")
        need(c.run.t.has_value(), "run.t");
    if (sub == "ground-energy") need(c.run.horizons.size() >= 3, "run.horizons (at least three)");
    if (sub == "n-point") need(!c.insertions.empty(), "insertions");
    if (sub == "field-only" || target == "oscillator") need(c.field_only.has_value(), "field_only");
    if (sub == "covariance-table") need(c.covariance_table.has_value(), "covariance_table");
    if ((target == "coupled" || target == "oscillator") && c.field && c.field->type != "single_mode")
        missing.push_back("model.field must be single_mode for the grid oracle");
    if (!missing.empty()) throw ConfigError(missing);
}

}  // namespace fkpath
