#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fkpath/config.hpp"

namespace fkpath {

/// Process exit codes; each error family has its own.
enum ExitCode : int {
    exit_ok = 0,
    exit_other = 1,
    exit_usage = 2,
    exit_config = 3,
    exit_model = 4,
    exit_numerical = 5,
    exit_integrability = 6,
    exit_strict_breach = 7,
};

/// Version of the results.jsonl / summary.csv record layout.
inline constexpr int result_schema_version = 1;

const std::vector<std::string>& subcommand_names();

/// Version string recorded in every result (git describe at build time).
std::string version_string();

struct RunOptions {
    /// compare: exit with exit_strict_breach when |z| exceeds oracle.threshold_sigma.
    bool strict = false;
    /// Destination of human-readable progress and the JSON result lines.
    std::ostream* out = nullptr;
    /// Destination of structured JSON diagnostics.
    std::ostream* err = nullptr;
};

/// Everything a subcommand produced, before it is written out.
struct SubcommandResult {
    std::vector<nlohmann::json> records;
    bool breach = false;
};

/// Validates the config for `name`, runs the pipeline and returns the records (each
/// stamped with schema version, subcommand, config hash, seed, version and sample count).
/// Throws the library's error types; see exit_code_for.
SubcommandResult execute_subcommand(const std::string& name, const ExperimentConfig& config,
                                    bool strict = false);

/// Writes results.jsonl / summary.csv (per output.formats), config.json and the
/// timing.jsonl sidecar into output.dir.
void write_results(const ExperimentConfig& config, const std::string& name,
                   const SubcommandResult& result, double wall_seconds);

/// CSV of the scalar fields of the records: union of keys (sorted), one row per record.
std::string summary_csv(const std::vector<nlohmann::json>& records);

/// Runs, writes, and maps errors to exit codes with a JSON diagnostic on options.err.
int run_subcommand(const std::string& name, const ExperimentConfig& config, const RunOptions& options);

/// Maps the in-flight exception to an exit code and structured diagnostic.
int report_current_exception(std::ostream& err);

}  // namespace fkpath
