// biorhythm: simulate cohorts, analyze activity data, summarize null models.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "biorhythm/errors.hpp"
#include "biorhythm/pipeline.hpp"

namespace fs = std::filesystem;
using namespace biorhythm;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> pair_budget;
  std::optional<int> alpha_days;
  std::optional<int> rhythm_window_days;
  std::optional<std::string> spike_variant;
};

void add_run_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "run configuration file")->required();
  cmd->add_option("--out", o.out, "output directory")->required();
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--pair-budget", o.pair_budget, "maximum number of user pairs per window");
  cmd->add_option("--alpha-days", o.alpha_days, "nights before and after each event");
  cmd->add_option("--rhythm-window-days", o.rhythm_window_days, "rhythm window length in days");
  cmd->add_option("--spike-variant", o.spike_variant, "SPIKE-distance variant")
      ->check(CLI::IsMember({"paper", "standard"}));
}

RunConfig resolve(const Options& o) {
  RunConfig cfg = load_run_config(o.config);
  RunOverrides ov;
  ov.seed = o.seed;
  ov.pair_budget = o.pair_budget;
  ov.alpha_days = o.alpha_days;
  ov.rhythm_window_days = o.rhythm_window_days;
  if (o.spike_variant) ov.spike_variant = parse_spike_variant(*o.spike_variant);
  apply_overrides(cfg, ov);
  return cfg;
}

int report(const RunOutcome& r, const std::string& out) {
  std::cout << "wrote " << r.artifacts.size() << " files to " << out << '\n';
  for (const auto& e : r.errors) std::cerr << "metric failure: " << e << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population biorhythm analytics"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Options sim;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic cohort CSV");
  simulate->add_option("--config", sim.config, "simulation spec file")->required();
  simulate->add_option("--out", sim.out, "output CSV path")->required();
  simulate->add_option("--seed", sim.seed, "override the spec seed");

  Options an;
  auto* analyze = app.add_subcommand("analyze", "compute all metrics and write a report bundle");
  add_run_options(analyze, an);

  Options nm;
  auto* nullmodel = app.add_subcommand("nullmodel", "summarize random-day null distributions");
  add_run_options(nullmodel, nm);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfigError;
  }

  try {
    if (*simulate) {
      run_simulate(sim.config, sim.out, sim.seed, std::cout);
      return kExitOk;
    }
    if (*analyze) return report(run_analyze(resolve(an), an.out), an.out);
    if (*nullmodel) return report(run_nullmodel(resolve(nm), nm.out), nm.out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const IngestionError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const InsufficientDataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const DomainError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitMetricFailure;
  }
  return kExitOk;
}
