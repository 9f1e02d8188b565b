#pragma once

// Characteristic periodicities from Welch power spectra, per-user rhythm
// shifts around an event, and rhythm disruption as the KL divergence between
// the event's shift distribution and a null distribution.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biorhythm/data_model.hpp"

namespace biorhythm {

enum class Detrend { constant, linear };

std::string_view to_string(Detrend d);
Detrend parse_detrend(std::string_view name);

struct WelchConfig {
  int segment_days = 14;
  double overlap_fraction = 0.5;
  Detrend detrend = Detrend::linear;
  /// Longest run of missing days bridged by linear interpolation.
  int max_gap_days = 2;

  void validate() const;
};

/// Half-open range of day indices relative to a series start.
struct DayWindow {
  int begin = 0;
  int end = 0;
  int length() const { return end - begin; }
};

struct PsdEstimate {
  std::vector<double> periods;  // days, strictly decreasing
  std::vector<double> power;    // one-sided spectral density, >= 0
};

/// Gap-filled copy of the window's samples. Throws DomainError when every
/// value is missing and InsufficientDataError when a gap exceeds max_gap_days.
std::vector<double> fill_gaps(const DailySeries& series, DayWindow window, int max_gap_days);

/// Welch PSD: Hann-windowed, detrended, overlapping segments; averaged
/// periodograms; the zero-frequency bin is dropped and frequencies are
/// reported as periods in days.
PsdEstimate welch_psd(const DailySeries& series, DayWindow window, const WelchConfig& cfg = {});
PsdEstimate welch_psd(std::span<const double> samples, const WelchConfig& cfg = {});

/// Period with the largest power; exact ties go to the smaller period.
double dominant_period(const PsdEstimate& psd);

struct RhythmConfig {
  WelchConfig welch;
  /// Days on each side of an event used for rhythm estimation.
  int window_days = 28;
  /// Histogram bin width in days; empty means the finest gap between
  /// representable periods.
  std::optional<double> bin_width_days;
  double smoothing_mass = 1e-9;

  void validate() const;
};

double characteristic_rhythm(const DailySeries& series, DayWindow window, const RhythmConfig& cfg = {});

/// Rhythm over [t, t + W) minus rhythm over [t - W, t), W = cfg.window_days.
double rhythm_shift_user(const DailySeries& series, Date event_date, const RhythmConfig& cfg = {});

/// Periods a segment of `segment_days` can report, decreasing.
std::vector<double> representable_periods(int segment_days);

struct ShiftBinning {
  double bin_width = 1.0;
  /// Largest representable |shift|; bins are centred on multiples of
  /// bin_width and cover [-half_range, half_range].
  double half_range = 1.0;
};

ShiftBinning default_binning(const RhythmConfig& cfg);

struct ShiftDistribution {
  std::vector<double> bin_edges;      // ascending
  std::vector<double> probabilities;  // one per bin, sum to 1
  std::size_t n_samples = 0;

  double bin_width() const { return bin_edges.size() > 1 ? bin_edges[1] - bin_edges[0] : 0.0; }
};

/// Histogram of shifts on shared symmetric edges with `smoothing_mass` added to
/// every bin before renormalising. Shifts beyond the range land in the end
/// bins. A zero smoothing mass is rejected unless every bin is occupied.
ShiftDistribution shift_distribution(std::span<const double> shifts, const ShiftBinning& binning,
                                     double smoothing_mass);

/// D_KL(event || null) = sum p ln(p / q) in nats.
double rhythm_disruption(const ShiftDistribution& event_dist, const ShiftDistribution& null_dist);
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Per-user rhythms for every window start. Entry [u][s] is the rhythm of
/// user u over days [s, s + W), empty when that window is unusable.
class RhythmTable {
 public:
  RhythmTable(const Cohort& cohort, Activity activity, const RhythmConfig& cfg);

  int window_days() const { return window_days_; }
  int n_days() const { return n_days_; }
  std::size_t n_users() const { return rhythms_.size(); }
  std::optional<double> rhythm(std::size_t user, int start) const;
  /// Shift for user around day index d, or empty.
  std::optional<double> shift(std::size_t user, int day) const;
  /// Whether both windows around day index d fit inside the interval.
  bool fits(int day) const { return day - window_days_ >= 0 && day + window_days_ <= n_days_; }

 private:
  int window_days_;
  int n_days_;
  std::vector<std::vector<std::optional<double>>> rhythms_;
};

struct PopulationShifts {
  std::vector<double> shifts;
  std::size_t n_users = 0;
  std::vector<std::string> skipped;  // "user: reason"
};

/// Shifts of every user whose two windows around the event are usable.
PopulationShifts population_shifts(const Cohort& cohort, Activity activity, Date event_date,
                                   const RhythmConfig& cfg);

/// Mean PSD over users whose window is usable (for export); empty when none is.
std::optional<PsdEstimate> mean_psd(const Cohort& cohort, Activity activity, DayWindow window,
                                    const WelchConfig& cfg);

}  // namespace biorhythm
