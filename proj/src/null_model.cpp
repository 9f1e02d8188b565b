#include "biorhythm/null_model.hpp"

#include <algorithm>
#include <random>

#include "biorhythm/errors.hpp"
#include "biorhythm/seeding.hpp"
#include "biorhythm/stats.hpp"

namespace biorhythm {

double NullSummary::quantile(double q) const { return stats::quantile(samples, q); }

void summarize(NullSummary& s) {
  if (s.samples.empty())
    throw InsufficientDataError("null model '" + s.metric + "': every sampled day failed");
  s.mean = stats::mean(s.samples);
  s.ci_halfwidth.reset();
  if (auto se = stats::standard_error(s.samples)) s.ci_halfwidth = 1.96 * *se;
}

std::vector<Date> sample_random_days(const DateInterval& interval, int margin_days, std::size_t n,
                                     std::uint64_t seed, std::span<const Date> exclusions) {
  if (n == 0) throw DomainError("number of random days must be positive");
  if (margin_days < 0) throw DomainError("margin must be nonnegative");
  std::vector<int> valid;
  for (int d = margin_days; d + margin_days <= interval.n_days(); ++d) {
    const Date lo = interval.first + (d - margin_days), hi = interval.first + (d + margin_days);
    const bool hit = std::any_of(exclusions.begin(), exclusions.end(),
                                 [&](Date x) { return lo <= x && x < hi; });
    if (!hit) valid.push_back(d);
  }
  if (valid.empty())
    throw DomainError("no day has a " + std::to_string(margin_days) +
                      "-day neighbourhood inside the interval that avoids the exclusions");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
  std::vector<Date> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(interval.first + valid[pick(rng)]);
  return out;
}

NullSync null_sync(const Cohort& cohort, int alpha_days, std::size_t n, std::uint64_t seed,
                   const SyncConfig& cfg, std::span<const Date> exclusions,
                   const PairDistanceMatrix* threshold_source) {
  const auto days = sample_random_days(cohort.interval(), alpha_days, n, seed, exclusions);
  NullSync out;
  out.oos.metric = "oos";
  out.oos.seed = seed;
  if (threshold_source) {
    out.growth.emplace();
    out.growth->metric = "oos_growth";
    out.growth->seed = seed;
  }
  for (std::size_t i = 0; i < days.size(); ++i) {
    SyncConfig day_cfg = cfg;
    day_cfg.seed = derive_seed(seed, {static_cast<std::uint64_t>(i)});
    const EventSpec ev{"random-" + std::to_string(i), days[i], alpha_days};
    try {
      const auto r = analyze_event_sync(cohort, ev, day_cfg, threshold_source);
      out.oos.samples.push_back(r.oos);
      out.oos.days.push_back(days[i]);
      if (out.growth) {
        if (r.oos_growth) {
          out.growth->samples.push_back(*r.oos_growth);
          out.growth->days.push_back(days[i]);
        } else {
          ++out.growth->skipped_days;
          out.growth->skip_reasons.push_back(days[i].iso() + ": " + r.growth_error);
        }
      }
    } catch (const InsufficientDataError& e) {
      ++out.oos.skipped_days;
      out.oos.skip_reasons.push_back(days[i].iso() + ": " + e.what());
      if (out.growth) {
        ++out.growth->skipped_days;
        out.growth->skip_reasons.push_back(days[i].iso() + ": " + e.what());
      }
    }
  }
  summarize(out.oos);
  if (out.growth) summarize(*out.growth);
  return out;
}

NullSummary null_oos(const Cohort& cohort, int alpha_days, std::size_t n, std::uint64_t seed,
                     const SyncConfig& cfg, std::span<const Date> exclusions) {
  return null_sync(cohort, alpha_days, n, seed, cfg, exclusions).oos;
}

NullShifts null_shift_distribution(const RhythmTable& table, const DateInterval& interval, std::size_t n,
                                   std::uint64_t seed, const RhythmConfig& cfg,
                                   std::span<const Date> exclusions) {
  const auto days = sample_random_days(interval, table.window_days(), n, seed, exclusions);
  NullShifts out;
  out.summary.metric = "rhythm_shift";
  out.summary.seed = seed;
  std::vector<double> day_shifts;
  for (Date day : days) {
    const int d = interval.index_of(day);
    day_shifts.clear();
    for (std::size_t u = 0; u < table.n_users(); ++u) {
      if (auto s = table.shift(u, d)) day_shifts.push_back(*s);
      else ++out.skipped_user_days;
    }
    if (day_shifts.empty()) {
      ++out.summary.skipped_days;
      out.summary.skip_reasons.push_back(day.iso() + ": no user has both rhythm windows");
      continue;
    }
    out.shifts.insert(out.shifts.end(), day_shifts.begin(), day_shifts.end());
    out.summary.samples.push_back(stats::mean(day_shifts));
    out.summary.days.push_back(day);
  }
  if (out.shifts.empty()) throw DomainError("null rhythm-shift pool is empty");
  summarize(out.summary);
  out.distribution = shift_distribution(out.shifts, default_binning(cfg), cfg.smoothing_mass);
  return out;
}

NullShifts null_shift_distribution(const Cohort& cohort, Activity activity, int window_days, std::size_t n,
                                   std::uint64_t seed, RhythmConfig cfg, std::span<const Date> exclusions) {
  cfg.window_days = window_days;
  const RhythmTable table(cohort, activity, cfg);
  return null_shift_distribution(table, cohort.interval(), n, seed, cfg, exclusions);
}

std::optional<ShiftDistribution> day_shift_distribution(const RhythmTable& table, int day,
                                                        const ShiftBinning& binning, double smoothing_mass) {
  std::vector<double> shifts;
  for (std::size_t u = 0; u < table.n_users(); ++u)
    if (auto s = table.shift(u, day)) shifts.push_back(*s);
  if (shifts.empty()) return std::nullopt;
  return shift_distribution(shifts, binning, smoothing_mass);
}

NullSummary null_disruption(const RhythmTable& table, const DateInterval& interval,
                            const ShiftDistribution& null_dist, std::size_t n, std::uint64_t seed,
                            const RhythmConfig& cfg, std::span<const Date> exclusions) {
  const auto days = sample_random_days(interval, table.window_days(), n, seed, exclusions);
  const auto binning = default_binning(cfg);
  NullSummary out;
  out.metric = "rhythm_disruption";
  out.seed = seed;
  for (Date day : days) {
    const auto dist = day_shift_distribution(table, interval.index_of(day), binning, cfg.smoothing_mass);
    if (!dist) {
      ++out.skipped_days;
      out.skip_reasons.push_back(day.iso() + ": no user has both rhythm windows");
      continue;
    }
    out.samples.push_back(rhythm_disruption(*dist, null_dist));
    out.days.push_back(day);
  }
  summarize(out);
  return out;
}

NullSummary null_volume(const PopulationSeries& series, const DateInterval& interval, int alpha_days,
                        std::size_t n, std::uint64_t seed, std::span<const Date> exclusions) {
  // Volume windows are closed, [d - alpha, d + alpha], so they need one extra day.
  const auto days = sample_random_days(interval, alpha_days + 1, n, seed, exclusions);
  NullSummary out;
  out.metric = "volume";
  out.seed = seed;
  for (Date day : days) {
    try {
      out.samples.push_back(event_volume_summary(series, day, alpha_days));
      out.days.push_back(day);
    } catch (const InsufficientDataError& e) {
      ++out.skipped_days;
      out.skip_reasons.push_back(day.iso() + ": " + e.what());
    }
  }
  summarize(out);
  return out;
}

}  // namespace biorhythm
