#pragma once

// Per-event metric signatures and the day-level "volume x rhythm disruption"
// plane, clustered with DBSCAN and scored by silhouette.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biorhythm/data_model.hpp"
#include "biorhythm/null_model.hpp"
#include "biorhythm/rhythm.hpp"
#include "biorhythm/spike_sync.hpp"
#include "biorhythm/volume.hpp"

namespace biorhythm {

/// Every knob of an end-to-end analysis.
struct AnalysisConfig {
  SyncConfig sync;
  RhythmConfig rhythm;
  int alpha_days = 7;
  std::size_t null_days = kDefaultNullDays;
  std::uint64_t seed = 0;
  /// Keep random days away from the configured events.
  bool exclude_events_from_null = false;
  double dbscan_eps = 0.5;
  int dbscan_min_pts = 5;

  void validate() const;
};

/// Activities that carry volume and rhythm metrics.
inline constexpr std::array<Activity, 3> kSignatureActivities = {Activity::steps, Activity::sleep_minutes,
                                                                 Activity::heart_rate};

/// Lazily computed per-cohort intermediates shared by the signature table,
/// the day features and the report writer. Not thread-safe.
class AnalysisContext {
 public:
  AnalysisContext(const Cohort& cohort, AnalysisConfig cfg, std::vector<EventSpec> events = {});

  const Cohort& cohort() const { return cohort_; }
  const AnalysisConfig& config() const { return cfg_; }
  const std::vector<EventSpec>& events() const { return events_; }
  /// Event dates excluded from random-day sampling (empty unless configured).
  const std::vector<Date>& exclusions() const { return exclusions_; }

  const PopulationSeries& volume(Activity a);
  const RhythmTable& rhythm_table(Activity a);
  const PairDistanceMatrix& threshold_source();
  const NullSync& null_sync();
  const NullShifts& null_shifts(Activity a);
  const NullSummary& null_volume(Activity a);

  /// Pair-sampling seed for the i-th configured event.
  std::uint64_t event_seed(std::size_t event_index) const;
  EventSync event_sync(std::size_t event_index);
  /// Shift distribution of all users around `date`.
  ShiftDistribution event_shift_distribution(Activity a, Date date);
  double event_disruption(Activity a, Date date);

 private:
  const Cohort& cohort_;
  AnalysisConfig cfg_;
  std::vector<EventSpec> events_;
  std::vector<Date> exclusions_;
  std::map<Activity, PopulationSeries> volume_;
  std::map<Activity, RhythmTable> tables_;
  std::optional<PairDistanceMatrix> threshold_;
  std::optional<NullSync> null_sync_;
  std::map<Activity, NullShifts> null_shifts_;
  std::map<Activity, NullSummary> null_volume_;
};

struct EventSignature {
  std::string event_name;
  std::optional<double> steps_volume;
  std::optional<double> sleep_volume_hours;
  std::optional<double> hr_volume_bpm;
  std::optional<double> oos_sleep;
  std::optional<double> oos_growth_sleep;
  std::optional<double> rhythm_disruption_steps;
  std::optional<double> rhythm_disruption_sleep;
  std::optional<double> rhythm_disruption_hr;
  std::vector<std::string> errors;  // one entry per missing cell
};

inline constexpr std::string_view kRandomRowName = "Random";

/// One row per configured event followed by the random-day row. Metric
/// failures leave the cell empty and are listed in `errors`.
std::vector<EventSignature> build_signature_table(AnalysisContext& ctx);
std::vector<EventSignature> build_signature_table(const Cohort& cohort, const std::vector<EventSpec>& events,
                                                  const AnalysisConfig& cfg);

inline constexpr int kNoise = -1;

struct DayPoint {
  Date date;
  double volume = 0.0;
  double disruption = 0.0;
  double volume_z = 0.0;
  double disruption_z = 0.0;
  int cluster_label = kNoise;
};

struct DayFeatures {
  std::vector<DayPoint> points;
  std::size_t excluded_days = 0;
  std::vector<std::string> warnings;
};

/// Each day scored as a micro-event: window volume and rhythm disruption of
/// its shift distribution against the global null; both columns z-scored.
DayFeatures day_feature_points(AnalysisContext& ctx, Activity activity);
DayFeatures day_feature_points(const Cohort& cohort, Activity activity, const AnalysisConfig& cfg);

/// z-scores with population sd. A zero-sd column maps to zeros and returns false.
bool standardize(std::span<const double> values, std::span<double> out);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// DBSCAN on Euclidean 2-D points. A point is core when at least `min_pts`
/// points (itself included) lie within `eps`. Border points join the cluster of
/// their nearest core point, so partitions do not depend on input order.
/// Clusters are numbered by their first member's input position; noise is kNoise.
std::vector<int> dbscan(std::span<const Point2> points, double eps, int min_pts);
/// Labels the points' (volume_z, disruption_z) coordinates in place.
void dbscan(std::span<DayPoint> points, double eps, int min_pts);

/// Mean silhouette coefficient over non-noise points.
double silhouette(std::span<const Point2> points, std::span<const int> labels);
double silhouette(std::span<const DayPoint> points);

std::size_t cluster_count(std::span<const int> labels);

}  // namespace biorhythm
