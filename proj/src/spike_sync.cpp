#include "biorhythm/spike_sync.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "biorhythm/errors.hpp"
#include "biorhythm/parallel.hpp"
#include "biorhythm/seeding.hpp"
#include "biorhythm/stats.hpp"

namespace biorhythm {

std::string_view to_string(SpikeVariant v) {
  return v == SpikeVariant::paper_verbatim ? "paper" : "standard";
}

SpikeVariant parse_spike_variant(std::string_view name) {
  if (name == "paper" || name == "paper-verbatim" || name == "paper_verbatim") return SpikeVariant::paper_verbatim;
  if (name == "standard" || name == "standard-normalized" || name == "standard_normalized")
    return SpikeVariant::standard_normalized;
  throw ConfigError("unknown spike variant '" + std::string(name) + "' (expected paper or standard)");
}

std::string_view to_string(EdgeHandling e) {
  return e == EdgeHandling::clip ? "clip" : "auxiliary";
}

EdgeHandling parse_edge_handling(std::string_view name) {
  if (name == "auxiliary" || name == "auxiliary-endpoint-spikes" || name == "auxiliary_spikes")
    return EdgeHandling::auxiliary_spikes;
  if (name == "clip") return EdgeHandling::clip;
  throw ConfigError("unknown edge handling '" + std::string(name) + "' (expected auxiliary or clip)");
}

void SpikeDistanceConfig::validate() const {
  if (grid_points_per_mean_isi < 10)
    throw ConfigError("grid_points_per_mean_isi must be at least 10, got " +
                      std::to_string(grid_points_per_mean_isi));
}

namespace {

struct EdgedTrain {
  std::vector<double> t;
  std::vector<double> nearest;  // distance of each spike to the closest spike of the other train
  double mean_isi = 0.0;
};

struct PreparedPair {
  EdgedTrain a;
  EdgedTrain b;
  double begin = 0.0;
  double end = 0.0;
};

std::vector<double> restrict_to(const SpikeTrain& s, TimeWindow w, EdgeHandling edges) {
  std::vector<double> out;
  if (edges == EdgeHandling::auxiliary_spikes) out.push_back(w.begin);
  for (double x : s.spikes()) {
    const bool inside = edges == EdgeHandling::auxiliary_spikes ? (x > w.begin && x < w.end)
                                                                : (x >= w.begin && x <= w.end);
    if (inside) out.push_back(x);
  }
  if (edges == EdgeHandling::auxiliary_spikes) out.push_back(w.end);
  return out;
}

std::vector<double> nearest_distances(const std::vector<double>& from, const std::vector<double>& to) {
  std::vector<double> out(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    auto it = std::lower_bound(to.begin(), to.end(), from[i]);
    double best = INFINITY;
    if (it != to.end()) best = *it - from[i];
    if (it != to.begin()) best = std::min(best, from[i] - *std::prev(it));
    out[i] = best;
  }
  return out;
}

PreparedPair prepare(const SpikeTrain& s1, const SpikeTrain& s2, TimeWindow w, const SpikeDistanceConfig& cfg) {
  cfg.validate();
  if (!(w.end > w.begin)) throw DomainError("spike distance window is empty or reversed");
  if (w.begin < 0.0 || w.end > s1.length() || w.end > s2.length())
    throw DomainError("spike distance window lies outside the trains' intervals");

  PreparedPair p;
  p.a.t = restrict_to(s1, w, cfg.edge_handling);
  p.b.t = restrict_to(s2, w, cfg.edge_handling);
  if (p.a.t.size() < 2) throw InsufficientDataError("first train has fewer than 2 spikes in the window");
  if (p.b.t.size() < 2) throw InsufficientDataError("second train has fewer than 2 spikes in the window");
  p.begin = std::max(p.a.t.front(), p.b.t.front());
  p.end = std::min(p.a.t.back(), p.b.t.back());
  if (!(p.end > p.begin)) throw InsufficientDataError("trains do not overlap inside the window");

  for (EdgedTrain* e : {&p.a, &p.b})
    e->mean_isi = (e->t.back() - e->t.front()) / static_cast<double>(e->t.size() - 1);
  if (cfg.variant == SpikeVariant::standard_normalized) {
    p.a.nearest = nearest_distances(p.a.t, p.b.t);
    p.b.nearest = nearest_distances(p.b.t, p.a.t);
  }
  return p;
}

/// S(t) with t between spikes ia/ia+1 of train a and ib/ib+1 of train b.
double evaluate(const PreparedPair& p, std::size_t ia, std::size_t ib, double t, SpikeVariant variant) {
  const double a_prev = p.a.t[ia], a_next = p.a.t[ia + 1];
  const double b_prev = p.b.t[ib], b_next = p.b.t[ib + 1];
  const double xp_a = t - a_prev, xf_a = a_next - t, isi_a = a_next - a_prev;
  const double xp_b = t - b_prev, xf_b = b_next - t, isi_b = b_next - b_prev;

  if (variant == SpikeVariant::paper_verbatim) {
    const double dt_prev = std::fabs(a_prev - b_prev);
    const double dt_next = std::fabs(a_next - b_next);
    const double mean_isi = 0.5 * (p.a.mean_isi + p.b.mean_isi);
    return (dt_prev * 0.5 * (xf_a + xf_b) + dt_next * 0.5 * (xp_a + xp_b)) / mean_isi;
  }

  const double s_a = (p.a.nearest[ia] * xf_a + p.a.nearest[ia + 1] * xp_a) / isi_a;
  const double s_b = (p.b.nearest[ib] * xf_b + p.b.nearest[ib + 1] * xp_b) / isi_b;
  const double mean_isi = 0.5 * (isi_a + isi_b);
  return (s_a * isi_b + s_b * isi_a) / (2.0 * mean_isi * mean_isi);
}

std::size_t preceding_index(const std::vector<double>& t, double x, bool left_limit) {
  auto it = left_limit ? std::lower_bound(t.begin(), t.end(), x) : std::upper_bound(t.begin(), t.end(), x);
  std::size_t i = static_cast<std::size_t>(it - t.begin());
  i = i == 0 ? 0 : i - 1;
  return std::min(i, t.size() - 2);
}

double integrate(const PreparedPair& p, const SpikeDistanceConfig& cfg) {
  const double length = p.end - p.begin;
  const double h = 0.5 * (p.a.mean_isi + p.b.mean_isi) / cfg.grid_points_per_mean_isi;
  const auto n_grid = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / h)));
  const double step = length / static_cast<double>(n_grid);

  // Breakpoints: every spike of either train inside (begin, end), plus the ends.
  std::vector<double> breaks;
  breaks.reserve(p.a.t.size() + p.b.t.size() + 2);
  breaks.push_back(p.begin);
  {
    auto ia = std::upper_bound(p.a.t.begin(), p.a.t.end(), p.begin);
    auto ib = std::upper_bound(p.b.t.begin(), p.b.t.end(), p.begin);
    while (true) {
      const double na = ia != p.a.t.end() ? *ia : INFINITY;
      const double nb = ib != p.b.t.end() ? *ib : INFINITY;
      const double next = std::min(na, nb);
      if (!(next < p.end)) break;
      breaks.push_back(next);
      if (na == next) ++ia;
      if (nb == next) ++ib;
    }
  }
  breaks.push_back(p.end);

  std::size_t ia = preceding_index(p.a.t, p.begin, false);
  std::size_t ib = preceding_index(p.b.t, p.begin, false);
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = breaks[k], hi = breaks[k + 1];
    while (ia + 2 < p.a.t.size() && p.a.t[ia + 1] <= lo) ++ia;
    while (ib + 2 < p.b.t.size() && p.b.t[ib + 1] <= lo) ++ib;

    double prev_t = lo;
    double prev_v = evaluate(p, ia, ib, lo, cfg.variant);
    auto j = static_cast<std::size_t>(std::floor((lo - p.begin) / step)) + 1;
    for (; j < n_grid; ++j) {
      const double t = p.begin + static_cast<double>(j) * step;
      if (t <= prev_t) continue;
      if (t >= hi) break;
      const double v = evaluate(p, ia, ib, t, cfg.variant);
      sum += 0.5 * (t - prev_t) * (prev_v + v);
      prev_t = t;
      prev_v = v;
    }
    const double v_hi = evaluate(p, ia, ib, hi, cfg.variant);
    sum += 0.5 * (hi - prev_t) * (prev_v + v_hi);
  }
  return std::max(0.0, sum / length);
}

}  // namespace

double spike_function_at(double t, const SpikeTrain& s1, const SpikeTrain& s2, TimeWindow window,
                         const SpikeDistanceConfig& cfg) {
  const PreparedPair p = prepare(s1, s2, window, cfg);
  if (!(t >= p.begin && t <= p.end)) throw DomainError("time outside the evaluated window");
  const bool at_end = t == p.end;
  return evaluate(p, preceding_index(p.a.t, t, at_end), preceding_index(p.b.t, t, at_end), t, cfg.variant);
}

double bivariate_spike_distance(const SpikeTrain& s1, const SpikeTrain& s2, TimeWindow window,
                                const SpikeDistanceConfig& cfg) {
  return integrate(prepare(s1, s2, window, cfg), cfg);
}

std::vector<double> PairDistanceMatrix::values() const {
  std::vector<double> v;
  v.reserve(pairs.size());
  for (const auto& p : pairs) v.push_back(p.d_s);
  return v;
}

double PairDistanceMatrix::mean() const {
  if (pairs.empty()) throw DomainError("mean of an empty pair matrix");
  const auto v = values();
  return stats::mean(v);
}

std::vector<std::pair<std::size_t, std::size_t>> select_pairs(std::size_t n, std::optional<std::size_t> budget,
                                                              std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (n < 2) return out;
  const std::size_t total = n * (n - 1) / 2;
  if (!budget || *budget >= total) {
    out.reserve(total);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) out.emplace_back(i, j);
    return out;
  }
  if (*budget == 0) throw DomainError("pair budget must be positive");

  // Floyd's sampling of distinct linear pair indices.
  std::mt19937_64 rng(seed);
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(*budget * 2);
  for (std::size_t j = total - *budget; j < total; ++j) {
    const std::size_t r = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    if (!chosen.insert(r).second) chosen.insert(j);
  }
  std::vector<std::size_t> idx(chosen.begin(), chosen.end());
  std::sort(idx.begin(), idx.end());

  // Linear index k enumerates (0,1), (0,2), ..., (0,n-1), (1,2), ...
  out.reserve(idx.size());
  std::size_t row = 0, row_start = 0;
  for (std::size_t k : idx) {
    while (k >= row_start + (n - 1 - row)) {
      row_start += n - 1 - row;
      ++row;
    }
    out.emplace_back(row, row + 1 + (k - row_start));
  }
  return out;
}

PairDistanceMatrix pair_distances(std::span<const LabeledTrain> trains,
                                  std::span<const std::pair<std::size_t, std::size_t>> pairs, TimeWindow window,
                                  const SpikeDistanceConfig& cfg) {
  cfg.validate();
  PairDistanceMatrix m{window, std::vector<PairDistance>(pairs.size())};
  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto& a = trains[pairs[k].first];
    const auto& b = trains[pairs[k].second];
    try {
      m.pairs[k] = {a.user, b.user, bivariate_spike_distance(a.train, b.train, window, cfg)};
    } catch (const InsufficientDataError& e) {
      throw InsufficientDataError("pair " + a.user + "/" + b.user + ": " + e.what());
    }
  });
  return m;
}

MultivariateDistance multivariate_spike_distance(std::vector<LabeledTrain> trains, TimeWindow window,
                                                 const SpikeDistanceConfig& cfg,
                                                 std::optional<std::size_t> pair_budget, std::uint64_t seed) {
  if (trains.size() < 2) throw InsufficientDataError("need at least 2 spike trains");
  std::sort(trains.begin(), trains.end(), [](const auto& x, const auto& y) { return x.user < y.user; });
  const auto pairs = select_pairs(trains.size(), pair_budget, seed);
  MultivariateDistance out;
  out.matrix = pair_distances(trains, pairs, window, cfg);
  out.mean = out.matrix.mean();
  return out;
}

// ---------------------------------------------------------------------------
// Event metrics

double outlier_fraction(std::span<const double> values, std::span<const double> reference) {
  if (reference.empty()) throw DomainError("outlier threshold source is empty");
  if (values.empty()) throw DomainError("no pair distances to classify");
  const double cutoff = stats::median(reference) + 2.0 * stats::pop_sd(reference);
  const auto above = std::count_if(values.begin(), values.end(), [&](double v) { return v > cutoff; });
  return static_cast<double>(above) / static_cast<double>(values.size());
}

double oos_outlier_fraction(const PairDistanceMatrix& pairs, const PairDistanceMatrix& threshold_source) {
  const auto v = pairs.values();
  const auto r = threshold_source.values();
  return outlier_fraction(v, r);
}

double outlier_growth(double before_fraction, double after_fraction) {
  if (before_fraction <= 0.0)
    throw UndefinedGrowthError("no out-of-sync outliers before the event; growth is undefined");
  return (after_fraction - before_fraction) / before_fraction;
}

namespace {

std::vector<LabeledTrain> trains_for(const Cohort& cohort, std::span<const std::string> users) {
  std::vector<LabeledTrain> out;
  out.reserve(users.size());
  for (const auto& u : users) out.push_back({u, to_spike_train(cohort, u)});
  return out;
}

}  // namespace

PairDistanceMatrix full_period_distances(const Cohort& cohort, const SyncConfig& cfg) {
  std::vector<LabeledTrain> trains;
  for (const auto& u : cohort.users()) {
    auto t = to_spike_train(cohort, u);
    if (t.size() >= 2) trains.push_back({u, std::move(t)});
  }
  if (trains.size() < 2) throw InsufficientDataError("fewer than 2 users with bedtime data");
  const auto pairs = select_pairs(trains.size(), cfg.pair_budget, derive_seed(cfg.seed, {0xf0115eedULL}));
  return pair_distances(trains, pairs, night_window(0, cohort.n_days()), cfg.spike);
}

EventSync analyze_event_sync(const Cohort& cohort, const EventSpec& event, const SyncConfig& cfg,
                             const PairDistanceMatrix* threshold_source) {
  const auto users = filter_complete_trains(cohort, event);
  if (users.size() < 2)
    throw InsufficientDataError("event " + event.name + ": fewer than 2 users with complete bedtime data");
  const int e = cohort.interval().index_of(event.date);
  const int alpha = event.alpha_days;
  const auto trains = trains_for(cohort, users);
  const auto pairs = select_pairs(trains.size(), cfg.pair_budget, cfg.seed);

  EventSync out;
  out.event = event.name;
  out.before = pair_distances(trains, pairs, night_window(e - alpha, alpha), cfg.spike);
  out.after = pair_distances(trains, pairs, night_window(e, alpha), cfg.spike);
  out.mean_before = out.before.mean();
  out.mean_after = out.after.mean();
  out.oos = out.mean_after - out.mean_before;
  out.n_users = users.size();
  out.n_pairs = pairs.size();

  if (threshold_source) {
    out.outliers_before = oos_outlier_fraction(out.before, *threshold_source);
    out.outliers_after = oos_outlier_fraction(out.after, *threshold_source);
    try {
      out.oos_growth = outlier_growth(*out.outliers_before, *out.outliers_after);
    } catch (const UndefinedGrowthError& err) {
      out.growth_error = err.what();
    }
  }
  return out;
}

double oos_score(const Cohort& cohort, const EventSpec& event, const SyncConfig& cfg) {
  return analyze_event_sync(cohort, event, cfg).oos;
}

double oos_population_growth(const Cohort& cohort, const EventSpec& event, const SyncConfig& cfg,
                             const PairDistanceMatrix& threshold_source) {
  const auto r = analyze_event_sync(cohort, event, cfg, &threshold_source);
  if (!r.oos_growth) throw UndefinedGrowthError("event " + event.name + ": " + r.growth_error);
  return *r.oos_growth;
}

double oos_population_growth(const Cohort& cohort, const EventSpec& event, const SyncConfig& cfg) {
  const auto source = full_period_distances(cohort, cfg);
  return oos_population_growth(cohort, event, cfg, source);
}

}  // namespace biorhythm
