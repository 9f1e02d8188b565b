#pragma once

// Seeded synthetic cohorts with per-user baselines, weekly structure and
// injectable event effects. Every user-day draws from its own RNG stream, so
// adding an effect never changes draws outside the effect's window.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "biorhythm/data_model.hpp"
#include "biorhythm/kvconfig.hpp"

namespace biorhythm {

struct CohortSpec {
  int n_users = 100;
  int days = 365;
  std::uint64_t seed = 1;
  Date start_date = Date::from_ymd(2016, 4, 1);

  double onset_mean_min = 1410.0;  // 23:30
  double onset_sd_min = 30.0;
  double onset_between_sd_min = 45.0;

  double sleep_mean_min = 432.0;  // 7.2 h
  double sleep_sd_min = 40.0;
  double sleep_between_sd_min = 30.0;
  double sleep_weekend_extra_min = 45.0;

  double steps_weekday = 7400.0;
  double steps_weekend = 6000.0;
  double steps_sd = 1500.0;
  double steps_between_sd = 1500.0;

  double hr_mean_bpm = 71.0;
  double hr_sd_bpm = 2.5;
  double hr_between_sd_bpm = 6.0;
  double hr_weekend_delta_bpm = -1.0;

  double missing_rate = 0.02;

  /// Throws ConfigError when an invariant fails.
  void validate() const;
};

struct EventEffect {
  Date event_date;
  int duration_days = 14;
  double onset_jitter_multiplier = 1.0;
  double sleep_delta_min = 0.0;
  double hr_delta_bpm = 0.0;
  double steps_delta = 0.0;
  /// Replaces the weekly weekday/weekend cycle with one of this period.
  std::optional<double> period_override_days;
  double affected_fraction = 1.0;

  void validate() const;
};

/// Throws ConfigError when a spec or effect is invalid or an effect window
/// leaves [0, days).
Cohort generate_cohort(const CohortSpec& spec, const std::vector<EventEffect>& effects = {});

/// Canonical CSV; parse_activity_csv of the file reproduces the cohort.
void export_cohort(const Cohort& cohort, const std::filesystem::path& path);

struct SimulationSpec {
  CohortSpec cohort;
  std::vector<EventEffect> effects;
};

/// Cohort keys at the top level (or in a `[cohort]` block), one `[effect]`
/// block per effect. Unknown keys and sections are rejected.
SimulationSpec parse_simulation_spec(const KvDocument& doc);
SimulationSpec load_simulation_spec(const std::filesystem::path& path);

}  // namespace biorhythm
