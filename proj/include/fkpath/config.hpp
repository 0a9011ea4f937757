#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fkpath/errors.hpp"
#include "fkpath/estimator.hpp"
#include "fkpath/field.hpp"
#include "fkpath/interaction.hpp"
#include "fkpath/oracle.hpp"
#include "fkpath/particle.hpp"
#include "fkpath/spatial.hpp"

namespace fkpath {

/// Invalid or incomplete configuration; `problems` lists every offending field.
class ConfigError : public ConfigurationError {
public:
    explicit ConfigError(std::vector<std::string> problems);
    [[nodiscard]] const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// zero | constant(value) | gaussian_bump(center, width, amplitude) |
/// normalized_bump(center, width) | box(lower, upper, value)
struct FunctionConfig {
    std::string type = "zero";
    Point center;
    double width = 1.0;
    double amplitude = 1.0;
    double value = 0.0;
    Point lower;
    Point upper;

    [[nodiscard]] SpatialFunction build() const;
};

/// zero | constant(value) | gaussian_well(depth, width, center) |
/// square_well(depth, half_width, center) | tabulated(x_min, spacing, values)
struct PotentialConfig {
    std::string type = "zero";
    double value = 0.0;
    double depth = 1.0;
    double width = 1.0;
    double half_width = 1.0;
    Point center;
    double x_min = 0.0;
    double spacing = 1.0;
    std::vector<double> values;

    [[nodiscard]] Potential build() const;
};

struct ParticleConfig {
    std::size_t dim = 1;
    double mass = 1.0;
    PotentialConfig potential;
};

struct FieldConfig {
    /// single_mode | continuum
    std::string type = "single_mode";
    double omega0 = 1.0;
    FunctionConfig coupling{"constant", {}, 1.0, 1.0, 1.0, {}, {}};
    double mass = 1.0;
    /// gaussian | sharp
    std::string form_family = "gaussian";
    double cutoff = 1.0;
    std::size_t nodes = 512;
    double radius_factor = 8.0;

    [[nodiscard]] FieldModel build(std::size_t dim) const;
};

struct InteractionConfig {
    std::vector<double> coefficients{0.0, 0.0, 0.0, 1.0};
    double kappa = 0.0;
    int order = 64;
    bool allow_formal = false;
    /// integrated | pointwise
    std::string weight_form = "integrated";

    [[nodiscard]] PolynomialInteraction build() const;
};

struct FieldVectorConfig {
    double amplitude = 1.0;
    Point center;
    /// Empty means "use the model's form factor".
    std::string profile_family;
    double profile_cutoff = 1.0;

    [[nodiscard]] FieldVector build() const;
};

struct FieldStateConfig {
    std::vector<FieldVectorConfig> vectors;
    /// Explicit monomials; ignored when wick_degrees is set. Empty means the constant 1.
    std::vector<CylinderTerm> terms;
    /// :prod_i phi(h_i)^{d_i}: with the equal-time covariance of the vectors.
    std::vector<int> wick_degrees;

    [[nodiscard]] FieldState build(const FieldModel& model) const;
};

struct StateConfig {
    FunctionConfig particle;
    FieldStateConfig field;
};

/// polynomial(coefficients) | indicator(lower, upper, value) | gaussian_damping(amplitude, rate)
struct ScalarFunctionConfig {
    std::string type = "polynomial";
    std::vector<double> coefficients{1.0};
    double lower = -1.0;
    double upper = 1.0;
    double value = 1.0;
    double amplitude = 1.0;
    double rate = 1.0;

    [[nodiscard]] ScalarFunction build() const;
};

struct InsertionConfig {
    double time = 0.0;
    ScalarFunctionConfig function;
};

struct FieldOnlyConfig {
    FieldVectorConfig vector;
    ScalarFunctionConfig potential;
};

struct RunConfig {
    std::optional<double> t;
    std::vector<double> horizons;
    std::size_t steps = 0;
    double steps_per_unit = 200.0;
    std::size_t sample_refinement = 1;
    /// Extra grid sizes for the common-random-number refinement study.
    std::vector<std::size_t> refinement_steps;
    std::optional<std::size_t> samples;
    std::size_t batches = 100;
    std::optional<std::uint64_t> seed;
    std::size_t n_inner = 0;
};

struct SubordinatorCheckConfig {
    std::vector<double> masses{0.5, 1.0, 2.0};
    std::vector<double> times{0.5, 1.0, 2.0};
    std::vector<double> s{0.5, 1.0, 2.0};
};

struct CovarianceTableConfig {
    std::vector<double> r;
    std::vector<double> tau;
};

struct OracleConfig {
    /// auto | particle | coupled | oscillator
    std::string target = "auto";
    GridSpec x{20.0, 256, 1e-3, 1e-8};
    GridSpec q{8.0, 64, 1e-3, 1e-8};
    double threshold_sigma = 3.0;
};

struct OutputConfig {
    std::string dir = "out";
    /// Any of jsonl, csv.
    std::vector<std::string> formats{"jsonl", "csv"};
};

struct ExperimentConfig {
    std::optional<ParticleConfig> particle;
    std::optional<FieldConfig> field;
    InteractionConfig interaction;
    StateConfig left;
    StateConfig right;
    bool has_states = false;
    std::vector<InsertionConfig> insertions;
    std::optional<FieldOnlyConfig> field_only;
    RunConfig run;
    SubordinatorCheckConfig subordinator_check;
    std::optional<CovarianceTableConfig> covariance_table;
    OracleConfig oracle;
    OutputConfig output;
};

/// Parses a JSON document; throws ConfigError listing every malformed or unknown field.
ExperimentConfig parse_config(const nlohmann::json& doc);
/// Reads a .json or .toml file (TOML tables map onto the same schema).
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON form; parse_config(serialize_config(c)) reproduces c.
nlohmann::json serialize_config(const ExperimentConfig& config);
/// FNV-1a 64 of the canonical dump without the output block, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Throws ConfigError naming every field `subcommand` needs but the config lacks.
void require_fields(const ExperimentConfig& config, const std::string& subcommand);

/// Sampling options assembled from the run and interaction blocks.
EstimatorOptions estimator_options(const ExperimentConfig& config);

}  // namespace fkpath
