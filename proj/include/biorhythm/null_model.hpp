#pragma once

// Random-day baselines: every event metric recomputed at uniformly sampled
// days, summarised by mean and 95% confidence half-width.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biorhythm/data_model.hpp"
#include "biorhythm/rhythm.hpp"
#include "biorhythm/spike_sync.hpp"
#include "biorhythm/volume.hpp"

namespace biorhythm {

inline constexpr std::size_t kDefaultNullDays = 100;

struct NullSummary {
  std::string metric;
  std::vector<double> samples;
  std::vector<Date> days;  // day of each sample
  double mean = 0.0;
  /// 1.96 standard errors; empty (undefined) with fewer than two samples.
  std::optional<double> ci_halfwidth;
  std::uint64_t seed = 0;
  std::size_t skipped_days = 0;
  std::vector<std::string> skip_reasons;

  std::size_t n_days() const { return samples.size(); }
  double quantile(double q) const;
};

/// Fills mean and CI from `samples`; throws InsufficientDataError when empty.
void summarize(NullSummary& s);

/// `n` days drawn uniformly with replacement among days d whose neighbourhood
/// [d - margin, d + margin) fits in the interval and holds no excluded date.
std::vector<Date> sample_random_days(const DateInterval& interval, int margin_days, std::size_t n,
                                     std::uint64_t seed, std::span<const Date> exclusions = {});

struct NullSync {
  NullSummary oos;
  /// Present when a threshold source was given.
  std::optional<NullSummary> growth;
};

/// OOS (and optionally OOS growth) at `n` random days. Each day uses its own
/// pair sample derived from `seed`; failing days are skipped and counted.
NullSync null_sync(const Cohort& cohort, int alpha_days, std::size_t n, std::uint64_t seed,
                   const SyncConfig& cfg, std::span<const Date> exclusions = {},
                   const PairDistanceMatrix* threshold_source = nullptr);

NullSummary null_oos(const Cohort& cohort, int alpha_days, std::size_t n, std::uint64_t seed,
                     const SyncConfig& cfg, std::span<const Date> exclusions = {});

struct NullShifts {
  ShiftDistribution distribution;
  std::vector<double> shifts;  // pooled over users and days
  NullSummary summary;         // per-day mean shift
  std::size_t skipped_user_days = 0;
};

/// Pooled per-user rhythm shifts around `n` random days.
NullShifts null_shift_distribution(const RhythmTable& table, const DateInterval& interval, std::size_t n,
                                   std::uint64_t seed, const RhythmConfig& cfg,
                                   std::span<const Date> exclusions = {});
NullShifts null_shift_distribution(const Cohort& cohort, Activity activity, int window_days, std::size_t n,
                                   std::uint64_t seed, RhythmConfig cfg, std::span<const Date> exclusions = {});

/// Shift distribution of all users around interval day `day`; empty when no
/// user has both windows.
std::optional<ShiftDistribution> day_shift_distribution(const RhythmTable& table, int day,
                                                        const ShiftBinning& binning, double smoothing_mass);

/// Rhythm disruption against `null_dist` at `n` random days (seeded
/// independently of the null itself).
NullSummary null_disruption(const RhythmTable& table, const DateInterval& interval,
                            const ShiftDistribution& null_dist, std::size_t n, std::uint64_t seed,
                            const RhythmConfig& cfg, std::span<const Date> exclusions = {});

/// Event-window volume at `n` random days.
NullSummary null_volume(const PopulationSeries& series, const DateInterval& interval, int alpha_days,
                        std::size_t n, std::uint64_t seed, std::span<const Date> exclusions = {});

}  // namespace biorhythm
