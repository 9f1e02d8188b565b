#pragma once

// Core domain types: per-user daily activity records, the cohort that holds
// them, and the two derived views the metrics consume (spike trains of sleep
// onsets and regularly sampled daily series).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biorhythm/date.hpp"

namespace biorhythm {

enum class Activity { steps, sleep_minutes, sleep_onset, heart_rate };

std::string_view to_string(Activity a);
/// Accepts `steps`, `sleep`, `sleep_minutes`, `onset`, `sleep_onset`, `heart_rate`, `heart`.
Activity parse_activity(std::string_view name);

inline constexpr double kMinutesPerDay = 1440.0;
inline constexpr double kHeartRateMin = 20.0;
inline constexpr double kHeartRateMax = 250.0;

/// Bedtime as minutes after local midnight. With `next_day` set the clock time
/// belongs to the day after the record's date (post-midnight bedtimes).
struct SleepOnset {
  double minutes = 0.0;
  bool next_day = false;

  /// Minutes after midnight of the record's own date.
  double absolute_minutes() const { return minutes + (next_day ? kMinutesPerDay : 0.0); }
  bool operator==(const SleepOnset&) const = default;
};

/// Measurements of one user-day; every field may be missing.
struct Measurements {
  std::optional<std::int64_t> steps;
  std::optional<double> sleep_minutes;
  std::optional<SleepOnset> sleep_onset;
  std::optional<double> heart_rate;

  std::optional<double> value(Activity a) const;
  bool operator==(const Measurements&) const = default;
};

struct ActivityRecord {
  std::string user_id;
  Date date;
  Measurements values;

  bool operator==(const ActivityRecord&) const = default;
};

/// Reason the record breaks a field invariant, or empty when it is valid.
std::optional<std::string> invariant_violation(const Measurements& m);

/// Immutable set of users and their records over a closed date interval.
class Cohort {
 public:
  Cohort() = default;
  /// Throws IngestionError on duplicate (user, date) and DomainError on
  /// records outside the interval or with invalid fields.
  Cohort(DateInterval interval, std::vector<ActivityRecord> records);

  const DateInterval& interval() const { return interval_; }
  int n_days() const { return interval_.n_days(); }
  std::span<const std::string> users() const { return users_; }
  std::size_t n_users() const { return users_.size(); }
  bool empty() const { return users_.empty(); }
  std::size_t n_records() const;

  bool contains(std::string_view user) const;
  /// Throws LookupError for unknown users.
  std::size_t user_index(std::string_view user) const;

  /// Record for `user` on interval day `day`, or nullptr.
  const Measurements* find(std::size_t user, int day) const;

  /// All records sorted by (user_id, date).
  std::vector<ActivityRecord> records() const;

  /// Same interval, only the listed users (unknown ids are ignored).
  Cohort subset(std::span<const std::string> keep) const;

  bool operator==(const Cohort&) const = default;

 private:
  DateInterval interval_{};
  std::vector<std::string> users_;                         // sorted
  std::vector<std::vector<std::optional<Measurements>>> days_;  // [user][day]
};

// ---------------------------------------------------------------------------
// CSV ingestion

/// Header names for each canonical column.
struct CsvSchema {
  std::string user_id = "user_id";
  std::string date = "date";
  std::string steps = "steps";
  std::string sleep_minutes = "sleep_minutes";
  std::string sleep_onset_min = "sleep_onset_min";
  std::string onset_next_day = "onset_next_day";
  std::string heart_rate_bpm = "heart_rate_bpm";
};

inline constexpr std::string_view kCanonicalHeader =
    "user_id,date,steps,sleep_minutes,sleep_onset_min,onset_next_day,heart_rate_bpm";

struct RejectedRow {
  std::size_t line = 0;
  std::string user_id;
  std::string reason;
};

struct IngestResult {
  Cohort cohort;
  std::vector<RejectedRow> rejected;
};

/// Parses a daily-activity CSV. The cohort interval spans the earliest to the
/// latest accepted date. Rows that break a field invariant are reported in
/// `rejected`; structural problems throw ParseError, duplicates IngestionError.
IngestResult parse_activity_csv(std::istream& in, const CsvSchema& schema = {});
IngestResult parse_activity_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Canonical CSV, rows sorted by (user_id, date).
void write_activity_csv(const Cohort& cohort, std::ostream& out);

// ---------------------------------------------------------------------------
// Derived views

/// Users whose fraction of interval days carrying `activity` is at least
/// `min_fraction`.
Cohort filter_by_coverage(const Cohort& cohort, Activity activity, double min_fraction);

/// Sleep-onset times in fractional days from the interval start, strictly
/// increasing, inside [0, length].
class SpikeTrain {
 public:
  SpikeTrain() = default;
  /// Throws DomainError unless the invariants hold.
  SpikeTrain(std::vector<double> spikes, double length);

  std::span<const double> spikes() const { return spikes_; }
  std::size_t size() const { return spikes_.size(); }
  double length() const { return length_; }

 private:
  std::vector<double> spikes_;
  double length_ = 0.0;
};

/// Half-open time span in fractional days.
struct TimeWindow {
  double begin = 0.0;
  double end = 0.0;
  double length() const { return end - begin; }
};

/// Time span holding the bedtimes of nights [first_night, first_night + n_nights).
/// A night spans noon of its date to noon of the next day.
TimeWindow night_window(int first_night, int n_nights);

/// Spike train length for a cohort: one extra day so that post-midnight
/// bedtimes of the last night fit.
double spike_train_length(const Cohort& cohort);

/// One spike per night with a recorded onset at day + absolute_minutes / 1440.
/// Non-increasing onsets from inconsistent next-day flags are dropped.
SpikeTrain to_spike_train(const Cohort& cohort, std::string_view user);

struct EventSpec {
  std::string name;
  Date date;
  int alpha_days = 7;
};

/// Interval day of the event; throws DomainError when [t - before, t + after)
/// does not fit in the cohort interval.
int event_day_index(const Cohort& cohort, Date date, int before_days, int after_days);

/// Users with a bedtime in every night of [t - alpha, t + alpha), sorted.
std::vector<std::string> filter_complete_trains(const Cohort& cohort, const EventSpec& event);

struct DailySeries {
  Date start;
  std::vector<std::optional<double>> values;

  std::size_t size() const { return values.size(); }
};

DailySeries to_daily_series(const Cohort& cohort, std::string_view user, Activity activity);

}  // namespace biorhythm
