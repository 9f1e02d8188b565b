#pragma once

// SPIKE-distance between bedtime spike trains and the event synchronicity
// metrics built on it: the out-of-sync score (OOS) and the out-of-sync
// population growth (OOS growth).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "biorhythm/data_model.hpp"

namespace biorhythm {

enum class SpikeVariant {
  /// S(t) = (|dt_P| <x_F> + |dt_F| <x_P>) / <ISI>, with dt_P/dt_F the differences
  /// between the two trains' preceding/following spikes and <ISI> the average of
  /// the trains' mean inter-spike intervals. Not bounded by 1.
  paper_verbatim,
  /// Kreuz et al. SPIKE-distance with nearest-neighbour spike distances and
  /// local-ISI weighting; always in [0, 1].
  standard_normalized,
};

enum class EdgeHandling {
  /// Auxiliary spikes at both window edges on both trains.
  auxiliary_spikes,
  /// Integrate only where both trains have a preceding and a following spike.
  clip,
};

std::string_view to_string(SpikeVariant v);
SpikeVariant parse_spike_variant(std::string_view name);  // "paper" | "standard" (or full names)
std::string_view to_string(EdgeHandling e);
EdgeHandling parse_edge_handling(std::string_view name);

struct SpikeDistanceConfig {
  SpikeVariant variant = SpikeVariant::standard_normalized;
  int grid_points_per_mean_isi = 200;
  EdgeHandling edge_handling = EdgeHandling::auxiliary_spikes;

  /// Throws ConfigError when grid_points_per_mean_isi < 10.
  void validate() const;
};

/// Instantaneous dissimilarity S(t). At a spike time the right-hand limit is
/// returned, except at the window end where the left-hand limit is used.
double spike_function_at(double t, const SpikeTrain& s1, const SpikeTrain& s2, TimeWindow window,
                         const SpikeDistanceConfig& cfg = {});

/// D_S: time average of S(t) over `window`. The trapezoidal grid has
/// cfg.grid_points_per_mean_isi points per mean ISI and is refined at every
/// spike time, where one-sided limits are taken.
double bivariate_spike_distance(const SpikeTrain& s1, const SpikeTrain& s2, TimeWindow window,
                                const SpikeDistanceConfig& cfg = {});

struct LabeledTrain {
  std::string user;
  SpikeTrain train;
};

struct PairDistance {
  std::string user_a;  // user_a < user_b
  std::string user_b;
  double d_s = 0.0;
};

struct PairDistanceMatrix {
  TimeWindow window;
  std::vector<PairDistance> pairs;  // sorted by (user_a, user_b)

  std::size_t size() const { return pairs.size(); }
  std::vector<double> values() const;
  double mean() const;
};

/// Index pairs (i < j) over n items: all of them, or `budget` distinct pairs
/// drawn uniformly under `seed` when the budget is smaller than n(n-1)/2.
/// Sorted lexicographically.
std::vector<std::pair<std::size_t, std::size_t>> select_pairs(std::size_t n,
                                                              std::optional<std::size_t> budget,
                                                              std::uint64_t seed);

/// D_S for the given index pairs of `trains` (which must be sorted by user).
PairDistanceMatrix pair_distances(std::span<const LabeledTrain> trains,
                                  std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                  TimeWindow window, const SpikeDistanceConfig& cfg);

struct MultivariateDistance {
  double mean = 0.0;
  PairDistanceMatrix matrix;
};

/// Mean pairwise D_S over all pairs (or a seeded sample of `pair_budget` pairs).
MultivariateDistance multivariate_spike_distance(std::vector<LabeledTrain> trains, TimeWindow window,
                                                 const SpikeDistanceConfig& cfg,
                                                 std::optional<std::size_t> pair_budget = std::nullopt,
                                                 std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Event metrics

struct SyncConfig {
  SpikeDistanceConfig spike;
  std::optional<std::size_t> pair_budget;
  std::uint64_t seed = 0;
};

/// Fraction of `values` strictly above median + 2 sd of `reference`
/// (population sd).
double outlier_fraction(std::span<const double> values, std::span<const double> reference);
double oos_outlier_fraction(const PairDistanceMatrix& pairs, const PairDistanceMatrix& threshold_source);

/// (after - before) / before; UndefinedGrowthError when before == 0.
double outlier_growth(double before_fraction, double after_fraction);

/// Pairwise D_S over the whole cohort interval for a seeded pair sample of all
/// users with at least two bedtimes. Source of the outlier threshold.
PairDistanceMatrix full_period_distances(const Cohort& cohort, const SyncConfig& cfg);

struct EventSync {
  std::string event;
  double oos = 0.0;
  double mean_before = 0.0;
  double mean_after = 0.0;
  std::size_t n_users = 0;
  std::size_t n_pairs = 0;
  PairDistanceMatrix before;
  PairDistanceMatrix after;
  // Filled when a threshold source was supplied.
  std::optional<double> outliers_before;
  std::optional<double> outliers_after;
  std::optional<double> oos_growth;
  std::string growth_error;
};

/// Pairwise D_S of complete users in the α nights before and after the event,
/// over one shared pair sample. With a threshold source the outlier fractions
/// and growth are filled too (a zero before-fraction leaves growth empty and
/// sets growth_error).
EventSync analyze_event_sync(const Cohort& cohort, const EventSpec& event, const SyncConfig& cfg,
                             const PairDistanceMatrix* threshold_source = nullptr);

/// Mean D_S after the event minus mean D_S before it.
double oos_score(const Cohort& cohort, const EventSpec& event, const SyncConfig& cfg);

double oos_population_growth(const Cohort& cohort, const EventSpec& event, const SyncConfig& cfg);
double oos_population_growth(const Cohort& cohort, const EventSpec& event, const SyncConfig& cfg,
                             const PairDistanceMatrix& threshold_source);

}  // namespace biorhythm
