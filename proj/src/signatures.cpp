#include "biorhythm/signatures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "biorhythm/errors.hpp"
#include "biorhythm/seeding.hpp"
#include "biorhythm/stats.hpp"

namespace biorhythm {

void AnalysisConfig::validate() const {
  sync.spike.validate();
  rhythm.validate();
  if (alpha_days < 1) throw ConfigError("alpha_days must be at least 1");
  if (null_days < 1) throw ConfigError("null_days must be at least 1");
  if (sync.pair_budget && *sync.pair_budget < 1) throw ConfigError("pair_budget must be at least 1");
  if (!(dbscan_eps > 0.0)) throw ConfigError("dbscan_eps must be positive");
  if (dbscan_min_pts < 1) throw ConfigError("dbscan_min_pts must be at least 1");
}

namespace {

enum SeedStream : std::uint64_t {
  kNullSyncStream = 1,
  kNullShiftStream = 2,
  kNullVolumeStream = 3,
  kThresholdStream = 4,
  kEventStream = 5,
};

}  // namespace

AnalysisContext::AnalysisContext(const Cohort& cohort, AnalysisConfig cfg, std::vector<EventSpec> events)
    : cohort_(cohort), cfg_(std::move(cfg)), events_(std::move(events)) {
  cfg_.validate();
  if (cfg_.exclude_events_from_null)
    for (const auto& e : events_) exclusions_.push_back(e.date);
}

const PopulationSeries& AnalysisContext::volume(Activity a) {
  auto it = volume_.find(a);
  if (it == volume_.end()) it = volume_.emplace(a, population_volume(cohort_, a)).first;
  return it->second;
}

const RhythmTable& AnalysisContext::rhythm_table(Activity a) {
  auto it = tables_.find(a);
  if (it == tables_.end()) it = tables_.try_emplace(a, cohort_, a, cfg_.rhythm).first;
  return it->second;
}

const PairDistanceMatrix& AnalysisContext::threshold_source() {
  if (!threshold_) {
    SyncConfig c = cfg_.sync;
    c.seed = derive_seed(cfg_.seed, {kThresholdStream});
    threshold_ = full_period_distances(cohort_, c);
  }
  return *threshold_;
}

const NullSync& AnalysisContext::null_sync() {
  if (!null_sync_) {
    const auto& source = threshold_source();
    null_sync_ = biorhythm::null_sync(cohort_, cfg_.alpha_days, cfg_.null_days,
                                      derive_seed(cfg_.seed, {kNullSyncStream}), cfg_.sync, exclusions_, &source);
  }
  return *null_sync_;
}

const NullShifts& AnalysisContext::null_shifts(Activity a) {
  auto it = null_shifts_.find(a);
  if (it == null_shifts_.end()) {
    const auto seed = derive_seed(cfg_.seed, {kNullShiftStream, static_cast<std::uint64_t>(a)});
    it = null_shifts_
             .emplace(a, null_shift_distribution(rhythm_table(a), cohort_.interval(), cfg_.null_days, seed,
                                                 cfg_.rhythm, exclusions_))
             .first;
    it->second.summary.metric = "rhythm_shift_" + std::string(to_string(a));
  }
  return it->second;
}

const NullSummary& AnalysisContext::null_volume(Activity a) {
  auto it = null_volume_.find(a);
  if (it == null_volume_.end()) {
    const auto seed = derive_seed(cfg_.seed, {kNullVolumeStream, static_cast<std::uint64_t>(a)});
    it = null_volume_
             .emplace(a, biorhythm::null_volume(volume(a), cohort_.interval(), cfg_.alpha_days, cfg_.null_days,
                                                seed, exclusions_))
             .first;
    it->second.metric = "volume_" + std::string(to_string(a));
  }
  return it->second;
}

std::uint64_t AnalysisContext::event_seed(std::size_t event_index) const {
  return derive_seed(cfg_.seed, {kEventStream, static_cast<std::uint64_t>(event_index)});
}

EventSync AnalysisContext::event_sync(std::size_t event_index) {
  const auto& source = threshold_source();
  SyncConfig c = cfg_.sync;
  c.seed = event_seed(event_index);
  return analyze_event_sync(cohort_, events_.at(event_index), c, &source);
}

ShiftDistribution AnalysisContext::event_shift_distribution(Activity a, Date date) {
  const auto& table = rhythm_table(a);
  const int d = event_day_index(cohort_, date, table.window_days(), table.window_days());
  auto dist = day_shift_distribution(table, d, default_binning(cfg_.rhythm), cfg_.rhythm.smoothing_mass);
  if (!dist) throw InsufficientDataError("no user has usable rhythm windows around " + date.iso());
  return *dist;
}

double AnalysisContext::event_disruption(Activity a, Date date) {
  return rhythm_disruption(event_shift_distribution(a, date), null_shifts(a).distribution);
}

// ---------------------------------------------------------------------------
// Signature table

namespace {

template <typename F>
void fill_cell(std::optional<double>& cell, std::vector<std::string>& errors, std::string_view label, F&& compute) {
  try {
    cell = compute();
  } catch (const Error& e) {
    errors.push_back(std::string(label) + ": " + e.what());
  }
}

}  // namespace

std::vector<EventSignature> build_signature_table(AnalysisContext& ctx) {
  std::vector<EventSignature> rows;
  for (std::size_t i = 0; i < ctx.events().size(); ++i) {
    const auto& ev = ctx.events()[i];
    EventSignature row;
    row.event_name = ev.name;
    fill_cell(row.steps_volume, row.errors, "steps_volume",
              [&] { return event_volume_summary(ctx.volume(Activity::steps), ev.date, ev.alpha_days); });
    fill_cell(row.sleep_volume_hours, row.errors, "sleep_volume_hours", [&] {
      return event_volume_summary(ctx.volume(Activity::sleep_minutes), ev.date, ev.alpha_days) / 60.0;
    });
    fill_cell(row.hr_volume_bpm, row.errors, "hr_volume_bpm",
              [&] { return event_volume_summary(ctx.volume(Activity::heart_rate), ev.date, ev.alpha_days); });
    try {
      const auto sync = ctx.event_sync(i);
      row.oos_sleep = sync.oos;
      if (sync.oos_growth) row.oos_growth_sleep = sync.oos_growth;
      else row.errors.push_back("oos_growth_sleep: " + sync.growth_error);
    } catch (const Error& e) {
      row.errors.push_back(std::string("oos_sleep: ") + e.what());
      row.errors.push_back(std::string("oos_growth_sleep: ") + e.what());
    }
    fill_cell(row.rhythm_disruption_steps, row.errors, "rhythm_disruption_steps",
              [&] { return ctx.event_disruption(Activity::steps, ev.date); });
    fill_cell(row.rhythm_disruption_sleep, row.errors, "rhythm_disruption_sleep",
              [&] { return ctx.event_disruption(Activity::sleep_minutes, ev.date); });
    fill_cell(row.rhythm_disruption_hr, row.errors, "rhythm_disruption_hr",
              [&] { return ctx.event_disruption(Activity::heart_rate, ev.date); });
    rows.push_back(std::move(row));
  }

  EventSignature random;
  random.event_name = std::string(kRandomRowName);
  fill_cell(random.steps_volume, random.errors, "steps_volume",
            [&] { return ctx.null_volume(Activity::steps).mean; });
  fill_cell(random.sleep_volume_hours, random.errors, "sleep_volume_hours",
            [&] { return ctx.null_volume(Activity::sleep_minutes).mean / 60.0; });
  fill_cell(random.hr_volume_bpm, random.errors, "hr_volume_bpm",
            [&] { return ctx.null_volume(Activity::heart_rate).mean; });
  fill_cell(random.oos_sleep, random.errors, "oos_sleep", [&] { return ctx.null_sync().oos.mean; });
  fill_cell(random.oos_growth_sleep, random.errors, "oos_growth_sleep",
            [&] { return ctx.null_sync().growth->mean; });
  // The null compared with itself.
  auto self_kl = [&](Activity a) {
    const auto& d = ctx.null_shifts(a).distribution;
    return rhythm_disruption(d, d);
  };
  fill_cell(random.rhythm_disruption_steps, random.errors, "rhythm_disruption_steps",
            [&] { return self_kl(Activity::steps); });
  fill_cell(random.rhythm_disruption_sleep, random.errors, "rhythm_disruption_sleep",
            [&] { return self_kl(Activity::sleep_minutes); });
  fill_cell(random.rhythm_disruption_hr, random.errors, "rhythm_disruption_hr",
            [&] { return self_kl(Activity::heart_rate); });
  rows.push_back(std::move(random));
  return rows;
}

std::vector<EventSignature> build_signature_table(const Cohort& cohort, const std::vector<EventSpec>& events,
                                                  const AnalysisConfig& cfg) {
  AnalysisContext ctx(cohort, cfg, events);
  return build_signature_table(ctx);
}

// ---------------------------------------------------------------------------
// Day features

bool standardize(std::span<const double> values, std::span<double> out) {
  if (values.size() != out.size()) throw DomainError("standardize: size mismatch");
  if (values.empty()) return true;
  const double m = stats::mean(values);
  const double sd = stats::pop_sd(values);
  if (!(sd > 0.0)) {
    std::fill(out.begin(), out.end(), 0.0);
    return false;
  }
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - m) / sd;
  return true;
}

DayFeatures day_feature_points(AnalysisContext& ctx, Activity activity) {
  const auto& cohort = ctx.cohort();
  const auto& cfg = ctx.config();
  const auto& table = ctx.rhythm_table(activity);
  const auto& series = ctx.volume(activity);
  const auto& null_dist = ctx.null_shifts(activity).distribution;
  const auto binning = default_binning(cfg.rhythm);

  DayFeatures out;
  for (int d = 0; d < cohort.n_days(); ++d) {
    const Date date = cohort.interval().first + d;
    if (!table.fits(d) || d - cfg.alpha_days < 0 || d + cfg.alpha_days >= cohort.n_days()) {
      ++out.excluded_days;
      continue;
    }
    const auto dist = day_shift_distribution(table, d, binning, cfg.rhythm.smoothing_mass);
    if (!dist) {
      ++out.excluded_days;
      continue;
    }
    DayPoint p;
    p.date = date;
    try {
      p.volume = event_volume_summary(series, date, cfg.alpha_days);
    } catch (const InsufficientDataError&) {
      ++out.excluded_days;
      continue;
    }
    p.disruption = rhythm_disruption(*dist, null_dist);
    out.points.push_back(p);
  }

  std::vector<double> vol, dis, vz(out.points.size()), dz(out.points.size());
  for (const auto& p : out.points) {
    vol.push_back(p.volume);
    dis.push_back(p.disruption);
  }
  if (!standardize(vol, vz)) out.warnings.push_back("volume column has zero variance; z-scores set to 0");
  if (!standardize(dis, dz)) out.warnings.push_back("disruption column has zero variance; z-scores set to 0");
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    out.points[i].volume_z = vz[i];
    out.points[i].disruption_z = dz[i];
  }
  return out;
}

DayFeatures day_feature_points(const Cohort& cohort, Activity activity, const AnalysisConfig& cfg) {
  AnalysisContext ctx(cohort, cfg);
  return day_feature_points(ctx, activity);
}

// ---------------------------------------------------------------------------
// Clustering

namespace {

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool lex_less(const Point2& a, const Point2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

}  // namespace

std::vector<int> dbscan(std::span<const Point2> points, double eps, int min_pts) {
  if (points.empty()) throw DomainError("dbscan of an empty point set");
  if (!(eps > 0.0)) throw DomainError("dbscan eps must be positive");
  if (min_pts < 1) throw DomainError("dbscan min_pts must be at least 1");
  const std::size_t n = points.size();

  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (distance(points[i], points[j]) <= eps) neighbours[i].push_back(j);
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = neighbours[i].size() >= static_cast<std::size_t>(min_pts);

  // Connected components of the core graph, discovered in input order.
  std::vector<int> labels(n, kNoise);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || labels[i] != kNoise) continue;
    std::vector<std::size_t> stack{i};
    labels[i] = next;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      for (std::size_t q : neighbours[p]) {
        if (core[q] && labels[q] == kNoise) {
          labels[q] = next;
          stack.push_back(q);
        }
      }
    }
    ++next;
  }

  // Border points: nearest core neighbour, ties to the lexicographically smaller core point.
  std::vector<int> result = labels;
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    std::optional<std::size_t> best;
    for (std::size_t q : neighbours[i]) {
      if (!core[q]) continue;
      if (!best) {
        best = q;
        continue;
      }
      const double dq = distance(points[i], points[q]), db = distance(points[i], points[*best]);
      if (dq < db || (dq == db && lex_less(points[q], points[*best]))) best = q;
    }
    if (best) result[i] = labels[*best];
  }

  // Renumber by first appearance in input order.
  std::vector<int> remap(static_cast<std::size_t>(next), kNoise);
  int counter = 0;
  for (int& l : result) {
    if (l == kNoise) continue;
    auto& m = remap[static_cast<std::size_t>(l)];
    if (m == kNoise) m = counter++;
    l = m;
  }
  return result;
}

void dbscan(std::span<DayPoint> points, double eps, int min_pts) {
  std::vector<Point2> xy;
  xy.reserve(points.size());
  for (const auto& p : points) xy.push_back({p.volume_z, p.disruption_z});
  const auto labels = dbscan(xy, eps, min_pts);
  for (std::size_t i = 0; i < points.size(); ++i) points[i].cluster_label = labels[i];
}

std::size_t cluster_count(std::span<const int> labels) {
  int max_label = kNoise;
  for (int l : labels) max_label = std::max(max_label, l);
  return static_cast<std::size_t>(max_label + 1);
}

double silhouette(std::span<const Point2> points, std::span<const int> labels) {
  if (points.size() != labels.size()) throw DomainError("silhouette: points and labels differ in size");
  const std::size_t k = cluster_count(labels);
  std::vector<std::size_t> sizes(k, 0);
  for (int l : labels)
    if (l != kNoise) ++sizes[static_cast<std::size_t>(l)];
  const auto populated = std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; });
  if (populated < 2) throw UndefinedSilhouetteError("silhouette needs at least two clusters");

  double total = 0.0;
  std::size_t counted = 0;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] == kNoise) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < points.size(); ++j)
      if (j != i && labels[j] != kNoise) sums[static_cast<std::size_t>(labels[j])] += distance(points[i], points[j]);
    const auto own = static_cast<std::size_t>(labels[i]);
    ++counted;
    if (sizes[own] == 1) continue;  // singleton clusters score 0
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(counted);
}

double silhouette(std::span<const DayPoint> points) {
  std::vector<Point2> xy;
  std::vector<int> labels;
  for (const auto& p : points) {
    xy.push_back({p.volume_z, p.disruption_z});
    labels.push_back(p.cluster_label);
  }
  return silhouette(xy, labels);
}

}  // namespace biorhythm
