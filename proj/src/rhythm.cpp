#include "biorhythm/rhythm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "biorhythm/errors.hpp"
#include "biorhythm/parallel.hpp"

namespace biorhythm {

std::string_view to_string(Detrend d) { return d == Detrend::constant ? "constant" : "linear"; }

Detrend parse_detrend(std::string_view name) {
  if (name == "constant" || name == "mean") return Detrend::constant;
  if (name == "linear") return Detrend::linear;
  throw ConfigError("unknown detrend '" + std::string(name) + "' (expected constant or linear)");
}

void WelchConfig::validate() const {
  if (segment_days < 4) throw ConfigError("welch segment_days must be at least 4");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
    throw ConfigError("welch overlap_fraction must lie in [0, 1)");
  if (max_gap_days < 0) throw ConfigError("max_gap_days must be nonnegative");
}

void RhythmConfig::validate() const {
  welch.validate();
  if (window_days < welch.segment_days)
    throw ConfigError("rhythm window_days must be at least the Welch segment length");
  if (bin_width_days && !(*bin_width_days > 0.0)) throw ConfigError("shift bin width must be positive");
  if (!(smoothing_mass >= 0.0)) throw ConfigError("smoothing mass must be nonnegative");
}

std::vector<double> fill_gaps(const DailySeries& series, DayWindow window, int max_gap_days) {
  if (window.begin < 0 || window.end > static_cast<int>(series.size()) || window.length() <= 0)
    throw DomainError("day window [" + std::to_string(window.begin) + ", " + std::to_string(window.end) +
                      ") outside the series");
  const auto n = static_cast<std::size_t>(window.length());
  std::vector<double> out(n);
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = series.values[static_cast<std::size_t>(window.begin) + i];
    if (v) {
      out[i] = *v;
      present.push_back(i);
    }
  }
  if (present.empty()) throw DomainError("every value in the window is missing");

  const auto max_gap = static_cast<std::size_t>(max_gap_days);
  auto check = [&](std::size_t gap) {
    if (gap > max_gap)
      throw InsufficientDataError("gap of " + std::to_string(gap) + " missing days exceeds " +
                                  std::to_string(max_gap_days));
  };
  check(present.front());
  for (std::size_t i = 0; i < present.front(); ++i) out[i] = out[present.front()];
  check(n - 1 - present.back());
  for (std::size_t i = present.back() + 1; i < n; ++i) out[i] = out[present.back()];
  for (std::size_t k = 0; k + 1 < present.size(); ++k) {
    const std::size_t lo = present[k], hi = present[k + 1];
    check(hi - lo - 1);
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double f = static_cast<double>(i - lo) / static_cast<double>(hi - lo);
      out[i] = out[lo] + f * (out[hi] - out[lo]);
    }
  }
  return out;
}

namespace {

struct DftTables {
  int n = 0;
  std::vector<double> window;  // periodic Hann
  double window_power = 0.0;   // sum of squared window weights
  std::vector<double> cos_table, sin_table;  // [k * n + i], k = 0..n/2
};

const DftTables& tables_for(int n) {
  thread_local DftTables t;
  if (t.n == n) return t;
  t.n = n;
  t.window.resize(static_cast<std::size_t>(n));
  t.window_power = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    t.window[static_cast<std::size_t>(i)] = w;
    t.window_power += w * w;
  }
  const int half = n / 2;
  t.cos_table.resize(static_cast<std::size_t>((half + 1) * n));
  t.sin_table.resize(t.cos_table.size());
  for (int k = 0; k <= half; ++k)
    for (int i = 0; i < n; ++i) {
      const double angle = 2.0 * std::numbers::pi * ((static_cast<long>(k) * i) % n) / n;
      t.cos_table[static_cast<std::size_t>(k * n + i)] = std::cos(angle);
      t.sin_table[static_cast<std::size_t>(k * n + i)] = std::sin(angle);
    }
  return t;
}

void detrend_in_place(std::span<double> x, Detrend mode) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  if (mode == Detrend::constant) {
    for (double& v : x) v -= mean;
    return;
  }
  const double t_mean = (n - 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dt = static_cast<double>(i) - t_mean;
    sxy += dt * (x[i] - mean);
    sxx += dt * dt;
  }
  const double slope = sxy / sxx;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= mean + slope * (static_cast<double>(i) - t_mean);
}

}  // namespace

PsdEstimate welch_psd(std::span<const double> samples, const WelchConfig& cfg) {
  cfg.validate();
  const int seg = cfg.segment_days;
  const int n = static_cast<int>(samples.size());
  if (n < seg)
    throw InsufficientDataError("window of " + std::to_string(n) + " days is shorter than the " +
                                std::to_string(seg) + "-day Welch segment");
  const int overlap = static_cast<int>(std::floor(cfg.overlap_fraction * seg));
  const int step = std::max(1, seg - overlap);
  const int n_segments = (n - seg) / step + 1;
  const int half = seg / 2;
  const DftTables& tab = tables_for(seg);

  PsdEstimate psd;
  psd.power.assign(static_cast<std::size_t>(half), 0.0);
  std::vector<double> buf(static_cast<std::size_t>(seg));
  for (int s = 0; s < n_segments; ++s) {
    std::copy_n(samples.begin() + s * step, seg, buf.begin());
    detrend_in_place(buf, cfg.detrend);
    for (int i = 0; i < seg; ++i) buf[static_cast<std::size_t>(i)] *= tab.window[static_cast<std::size_t>(i)];
    for (int k = 1; k <= half; ++k) {
      double re = 0.0, im = 0.0;
      const std::size_t row = static_cast<std::size_t>(k * seg);
      for (int i = 0; i < seg; ++i) {
        re += buf[static_cast<std::size_t>(i)] * tab.cos_table[row + static_cast<std::size_t>(i)];
        im -= buf[static_cast<std::size_t>(i)] * tab.sin_table[row + static_cast<std::size_t>(i)];
      }
      const double one_sided = (seg % 2 == 0 && k == half) ? 1.0 : 2.0;
      psd.power[static_cast<std::size_t>(k - 1)] += one_sided * (re * re + im * im) / tab.window_power;
    }
  }
  for (double& p : psd.power) p /= n_segments;
  psd.periods = representable_periods(seg);
  return psd;
}

PsdEstimate welch_psd(const DailySeries& series, DayWindow window, const WelchConfig& cfg) {
  cfg.validate();
  const auto samples = fill_gaps(series, window, cfg.max_gap_days);
  return welch_psd(samples, cfg);
}

double dominant_period(const PsdEstimate& psd) {
  if (psd.power.empty()) throw DomainError("empty spectrum");
  std::size_t best = 0;
  // Periods decrease with the index, so `>=` hands ties to the smaller period.
  for (std::size_t k = 1; k < psd.power.size(); ++k)
    if (psd.power[k] >= psd.power[best]) best = k;
  return psd.periods[best];
}

double characteristic_rhythm(const DailySeries& series, DayWindow window, const RhythmConfig& cfg) {
  return dominant_period(welch_psd(series, window, cfg.welch));
}

double rhythm_shift_user(const DailySeries& series, Date event_date, const RhythmConfig& cfg) {
  cfg.validate();
  const int e = event_date - series.start;
  const int w = cfg.window_days;
  if (e - w < 0 || e + w > static_cast<int>(series.size()))
    throw DomainError("rhythm windows around " + event_date.iso() + " leave the series");
  const double before = characteristic_rhythm(series, {e - w, e}, cfg);
  const double after = characteristic_rhythm(series, {e, e + w}, cfg);
  return after - before;
}

std::vector<double> representable_periods(int segment_days) {
  std::vector<double> p;
  for (int k = 1; k <= segment_days / 2; ++k) p.push_back(static_cast<double>(segment_days) / k);
  return p;
}

ShiftBinning default_binning(const RhythmConfig& cfg) {
  const auto periods = representable_periods(cfg.welch.segment_days);
  ShiftBinning b;
  b.half_range = periods.front() - periods.back();
  if (cfg.bin_width_days) {
    b.bin_width = *cfg.bin_width_days;
  } else {
    b.bin_width = periods.size() > 1 ? periods[periods.size() - 2] - periods.back() : 1.0;
  }
  return b;
}

ShiftDistribution shift_distribution(std::span<const double> shifts, const ShiftBinning& binning,
                                     double smoothing_mass) {
  if (shifts.empty()) throw DomainError("no rhythm shifts to bin");
  if (!(binning.bin_width > 0.0)) throw DomainError("bin width must be positive");
  if (!(binning.half_range >= 0.0)) throw DomainError("shift range must be nonnegative");
  if (!(smoothing_mass >= 0.0)) throw DomainError("smoothing mass must be nonnegative");

  const double w = binning.bin_width;
  const int half_bins = static_cast<int>(std::ceil(binning.half_range / w - 1e-9));
  const int n_bins = 2 * half_bins + 1;

  ShiftDistribution d;
  d.n_samples = shifts.size();
  for (int j = -half_bins; j <= half_bins + 1; ++j) d.bin_edges.push_back((j - 0.5) * w);
  std::vector<double> counts(static_cast<std::size_t>(n_bins), 0.0);
  for (double s : shifts) {
    const int j = static_cast<int>(std::floor(s / w + 0.5));
    counts[static_cast<std::size_t>(std::clamp(j, -half_bins, half_bins) + half_bins)] += 1.0;
  }
  if (smoothing_mass == 0.0 && std::any_of(counts.begin(), counts.end(), [](double c) { return c == 0.0; }))
    throw DomainError("zero smoothing mass with empty bins would make KL divergence infinite");

  const double n = static_cast<double>(shifts.size());
  const double total = 1.0 + smoothing_mass * n_bins;
  d.probabilities.reserve(counts.size());
  for (double c : counts) d.probabilities.push_back((c / n + smoothing_mass) / total);
  return d;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("KL divergence of distributions with different supports");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw DomainError("negative probability mass");
    if (p[i] == 0.0) {
      sum += q[i];
      continue;
    }
    if (q[i] == 0.0) throw DomainError("KL divergence is infinite: null mass is zero where event mass is not");
    // p ln(p/q) - p + q is nonnegative per bin and sums to the KL divergence
    // for normalised inputs.
    sum += std::max(0.0, p[i] * std::log(p[i] / q[i]) - p[i] + q[i]);
  }
  return sum;
}

double rhythm_disruption(const ShiftDistribution& event_dist, const ShiftDistribution& null_dist) {
  if (event_dist.bin_edges != null_dist.bin_edges)
    throw DomainError("rhythm disruption needs identical bin edges for event and null distributions");
  return kl_divergence(event_dist.probabilities, null_dist.probabilities);
}

// ---------------------------------------------------------------------------

RhythmTable::RhythmTable(const Cohort& cohort, Activity activity, const RhythmConfig& cfg)
    : window_days_(cfg.window_days), n_days_(cohort.n_days()) {
  cfg.validate();
  rhythms_.resize(cohort.n_users());
  const int n_starts = std::max(0, n_days_ - window_days_ + 1);
  parallel_for(cohort.n_users(), [&](std::size_t u) {
    const auto series = to_daily_series(cohort, cohort.users()[u], activity);
    auto& row = rhythms_[u];
    row.resize(static_cast<std::size_t>(n_starts));
    for (int s = 0; s < n_starts; ++s) {
      try {
        row[static_cast<std::size_t>(s)] = characteristic_rhythm(series, {s, s + window_days_}, cfg);
      } catch (const InsufficientDataError&) {
      } catch (const DomainError&) {
      }
    }
  });
}

std::optional<double> RhythmTable::rhythm(std::size_t user, int start) const {
  const auto& row = rhythms_.at(user);
  if (start < 0 || start >= static_cast<int>(row.size())) return std::nullopt;
  return row[static_cast<std::size_t>(start)];
}

std::optional<double> RhythmTable::shift(std::size_t user, int day) const {
  if (!fits(day)) return std::nullopt;
  const auto before = rhythm(user, day - window_days_);
  const auto after = rhythm(user, day);
  if (!before || !after) return std::nullopt;
  return *after - *before;
}

PopulationShifts population_shifts(const Cohort& cohort, Activity activity, Date event_date,
                                   const RhythmConfig& cfg) {
  cfg.validate();
  event_day_index(cohort, event_date, cfg.window_days, cfg.window_days);
  PopulationShifts out;
  std::vector<std::optional<double>> shifts(cohort.n_users());
  std::vector<std::string> reasons(cohort.n_users());
  parallel_for(cohort.n_users(), [&](std::size_t u) {
    const auto series = to_daily_series(cohort, cohort.users()[u], activity);
    try {
      shifts[u] = rhythm_shift_user(series, event_date, cfg);
    } catch (const InsufficientDataError& e) {
      reasons[u] = e.what();
    } catch (const DomainError& e) {
      reasons[u] = e.what();
    }
  });
  for (std::size_t u = 0; u < cohort.n_users(); ++u) {
    if (shifts[u]) {
      out.shifts.push_back(*shifts[u]);
      ++out.n_users;
    } else {
      out.skipped.push_back(cohort.users()[u] + ": " + reasons[u]);
    }
  }
  return out;
}

std::optional<PsdEstimate> mean_psd(const Cohort& cohort, Activity activity, DayWindow window,
                                    const WelchConfig& cfg) {
  std::optional<PsdEstimate> acc;
  std::size_t used = 0;
  for (const auto& user : cohort.users()) {
    const auto series = to_daily_series(cohort, user, activity);
    PsdEstimate psd;
    try {
      psd = welch_psd(series, window, cfg);
    } catch (const InsufficientDataError&) {
      continue;
    } catch (const DomainError&) {
      continue;
    }
    if (!acc) {
      acc = std::move(psd);
    } else {
      for (std::size_t k = 0; k < acc->power.size(); ++k) acc->power[k] += psd.power[k];
    }
    ++used;
  }
  if (acc)
    for (double& p : acc->power) p /= static_cast<double>(used);
  return acc;
}

}  // namespace biorhythm
