#pragma once

// End-to-end runs behind the command-line tool: configuration loading,
// metric orchestration and the report bundle written to an output directory.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "biorhythm/data_model.hpp"
#include "biorhythm/kvconfig.hpp"
#include "biorhythm/signatures.hpp"

namespace biorhythm {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitDataError = 3,
  kExitMetricFailure = 4,
};

struct RunConfig {
  std::filesystem::path input;
  std::vector<EventSpec> events;
  AnalysisConfig analysis;
  std::optional<Activity> coverage_activity;
  double min_coverage = 0.0;

  void validate() const;
};

/// Parses a run configuration. Relative input paths resolve against
/// `base_dir`. Unknown keys and sections are ConfigErrors.
RunConfig parse_run_config(const KvDocument& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Command-line overrides; each set field replaces the config value.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> pair_budget;
  std::optional<int> alpha_days;  // also applied to every event
  std::optional<int> rhythm_window_days;
  std::optional<SpikeVariant> spike_variant;
};

void apply_overrides(RunConfig& cfg, const RunOverrides& o);

/// Canonical JSON text of the resolved configuration (hashed into manifests).
std::string canonical_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

struct RunOutcome {
  std::vector<std::string> artifacts;  // file names relative to the output directory
  std::vector<std::string> errors;
  int exit_code = kExitOk;
};

/// Loads and filters the input cohort. Throws on unreadable or invalid input.
IngestResult load_cohort(const RunConfig& cfg);

/// All metrics for all events plus null models, signature table and day
/// clusters. Writes the bundle and manifest.json into `out_dir`.
RunOutcome run_analyze(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Null-model summaries only.
RunOutcome run_nullmodel(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Generates a cohort from a simulation spec file and writes the canonical CSV.
/// Prints a one-line summary to `log`.
void run_simulate(const std::filesystem::path& spec_path, const std::filesystem::path& out_path,
                  std::optional<std::uint64_t> seed, std::ostream& log);

}  // namespace biorhythm
