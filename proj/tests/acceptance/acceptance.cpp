// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance --cli <path to biorhythm> --workdir <scratch dir> [--only 1,5,9]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "biorhythm/errors.hpp"
#include "biorhythm/seeding.hpp"
#include "biorhythm/null_model.hpp"
#include "biorhythm/rhythm.hpp"
#include "biorhythm/signatures.hpp"
#include "biorhythm/simulator.hpp"
#include "biorhythm/spike_sync.hpp"
#include "biorhythm/stats.hpp"
#include "oracles.hpp"

using namespace biorhythm;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Options {
  fs::path cli;
  fs::path workdir = fs::temp_directory_path() / "biorhythm_acceptance";
  std::set<int> only;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SpikeDistanceConfig spike(SpikeVariant v, int grid = 200) { return {v, grid, EdgeHandling::auxiliary_spikes}; }

/// Trains of one bedtime per night with random phase, jitter and gaps.
std::vector<SpikeTrain> random_trains(std::size_t n, double length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.05, 0.45);
  std::vector<SpikeTrain> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto t = oracle::random_train(rng, length, jitter(rng));
    std::bernoulli_distribution drop(0.1);
    std::vector<double> kept;
    for (double x : t)
      if (!drop(rng)) kept.push_back(x);
    if (kept.size() < 2) kept = t;
    out.emplace_back(kept, length);
  }
  return out;
}

int run(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// ---------------------------------------------------------------------------

Outcome c1_identity_symmetry(const Options&) {
  const auto t0 = Clock::now();
  const auto trains = random_trains(200, 30.0, 101);
  const TimeWindow w{0.0, 30.0};
  double worst_self = 0.0, worst_asym = 0.0;
  for (auto v : {SpikeVariant::standard_normalized, SpikeVariant::paper_verbatim}) {
    for (std::size_t i = 0; i < trains.size(); ++i) {
      worst_self = std::max(worst_self, bivariate_spike_distance(trains[i], trains[i], w, spike(v)));
      const auto& other = trains[(i + 1) % trains.size()];
      worst_asym = std::max(worst_asym, std::fabs(bivariate_spike_distance(trains[i], other, w, spike(v)) -
                                                  bivariate_spike_distance(other, trains[i], w, spike(v))));
    }
  }
  const double secs = seconds_since(t0);
  return {worst_self <= 1e-12 && worst_asym == 0.0 && secs < 10.0,
          fmt("max D(s,s) = %.3g, max |D(a,b) - D(b,a)| = %.3g over 200 trains x 2 variants, %.2f s (< 10 s)",
              worst_self, worst_asym, secs)};
}

Outcome c2_grid_oracle(const Options&) {
  const auto trains = random_trains(200, 40.0, 202);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> edge(0.0, 8.0);
  double worst = 0.0, worst_exact = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto& a = trains[2 * k];
    const auto& b = trains[2 * k + 1];
    const TimeWindow w{edge(rng), 40.0 - edge(rng)};
    for (auto v : {SpikeVariant::standard_normalized, SpikeVariant::paper_verbatim}) {
      const double coarse = bivariate_spike_distance(a, b, w, spike(v, 200));
      const double fine = bivariate_spike_distance(a, b, w, spike(v, 2000));
      const double exact = oracle::spike_distance({a.spikes().begin(), a.spikes().end()},
                                                  {b.spikes().begin(), b.spikes().end()}, w.begin, w.end,
                                                  v == SpikeVariant::paper_verbatim ? oracle::Variant::paper
                                                                                    : oracle::Variant::standard);
      worst = std::max(worst, std::fabs(coarse - fine) / std::max(std::fabs(fine), 1e-300));
      worst_exact = std::max(worst_exact, std::fabs(coarse - exact) / std::max(std::fabs(exact), 1e-300));
    }
  }
  return {worst <= 1e-4, fmt("max relative gap default vs 10x grid = %.3g (<= 1e-4) on 100 pairs x 2 variants; "
                             "vs exact breakpoint oracle = %.3g",
                             worst, worst_exact)};
}

Outcome c3_bounds(const Options&) {
  std::size_t n = 0;
  double lo = INFINITY, hi = -INFINITY;
  auto check = [&](const SpikeTrain& a, const SpikeTrain& b, TimeWindow w) {
    const double d = bivariate_spike_distance(a, b, w, spike(SpikeVariant::standard_normalized));
    lo = std::min(lo, d);
    hi = std::max(hi, d);
    ++n;
  };
  for (std::uint64_t seed : {101, 202, 303}) {
    const auto trains = random_trains(200, 30.0, seed);
    for (std::size_t i = 0; i < trains.size(); ++i)
      for (std::size_t j = i; j < trains.size(); j += 7) check(trains[i], trains[j], {0.0, 30.0});
  }
  // Adversarial shapes: bursts against sparse trains, near-coincident spikes.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int k = 0; k < 2000; ++k) {
    std::set<double> sa, sb;
    const int na = 1 + k % 25, nb = 1 + (k * 7) % 25;
    while (static_cast<int>(sa.size()) < na) sa.insert(u(rng));
    while (static_cast<int>(sb.size()) < nb) sb.insert(u(rng));
    check(SpikeTrain({sa.begin(), sa.end()}, 20.0), SpikeTrain({sb.begin(), sb.end()}, 20.0), {0.0, 20.0});
  }
  // Bedtime trains from the simulator.
  CohortSpec spec;
  spec.n_users = 60;
  spec.days = 60;
  EventEffect e;
  e.event_date = spec.start_date + 20;
  e.onset_jitter_multiplier = 4;
  const Cohort c = generate_cohort(spec, {e});
  for (const auto& p : full_period_distances(c, {}).pairs) lo = std::min(lo, p.d_s), hi = std::max(hi, p.d_s), ++n;
  return {lo >= 0.0 && hi <= 1.0, fmt("standard-normalized D_S in [%.4f, %.4f] over %zu pairs", lo, hi, n)};
}

Outcome c4_null_centering(const Options&) {
  const auto t0 = Clock::now();
  CohortSpec spec;
  spec.n_users = 200;
  spec.days = 365;
  spec.seed = 4;
  const Cohort c = generate_cohort(spec);
  SyncConfig cfg;
  cfg.pair_budget = 2000;
  const auto s = null_oos(c, 7, 100, 44, cfg);
  const auto se = stats::standard_error(s.samples);
  const double secs = seconds_since(t0);
  const bool ok = se && std::fabs(s.mean) <= 2.0 * *se && secs < 300.0 && s.n_days() == 100;
  return {ok, fmt("mean null OOS = %.3g, SE = %.3g, |mean|/SE = %.2f (<= 2), %zu days, %.1f s (< 300 s)", s.mean,
                  se.value_or(NAN), std::fabs(s.mean) / se.value_or(NAN), s.n_days(), secs)};
}

struct DesyncRun {
  double oos = 0.0;
  double null_p95 = 0.0;
  std::optional<double> growth;
};

DesyncRun desync_run(std::uint64_t seed) {
  CohortSpec spec;
  spec.n_users = 100;
  spec.days = 150;
  spec.seed = 1000 + seed;
  EventEffect e;
  e.event_date = spec.start_date + 90;
  e.duration_days = 14;
  e.onset_jitter_multiplier = 3.0;
  const Cohort c = generate_cohort(spec, {e});
  SyncConfig cfg;
  cfg.pair_budget = 1000;
  cfg.seed = derive_seed(seed, {1});
  const auto source = full_period_distances(c, cfg);
  const auto ev = analyze_event_sync(c, {"desync", e.event_date, 7}, cfg, &source);
  const auto null = null_oos(c, 7, 100, derive_seed(seed, {2}), cfg);
  return {ev.oos, null.quantile(0.95), ev.oos_growth};
}

Outcome c5_desync(const Options&) {
  int hits = 0;
  std::string worst;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = desync_run(seed);
    const bool ok = r.oos > r.null_p95 && r.growth && *r.growth > 0.0;
    hits += ok;
    if (!ok) worst += fmt(" [seed %d: oos %.3g p95 %.3g growth %.3g]", int(seed), r.oos, r.null_p95, r.growth.value_or(NAN));
  }
  return {hits >= 18, fmt("%d/20 seeds with OOS > null p95 and OOS growth > 0 (>= 18)%s", hits, worst.c_str())};
}

Outcome c6_rhythm_recovery(const Options&) {
  const auto periods = representable_periods(14);
  auto bin_of = [&](double p) {  // nearest bin in frequency
    std::size_t best = 0;
    for (std::size_t k = 1; k < periods.size(); ++k)
      if (std::fabs(1 / periods[k] - 1 / p) < std::fabs(1 / periods[best] - 1 / p)) best = k;
    return static_cast<int>(best);
  };
  std::string detail;
  bool ok = true;
  for (double p : {3.0, 7.0, 14.0}) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(p)}));
      std::uniform_real_distribution<double> phase(0.0, 2 * M_PI);
      std::normal_distribution<double> noise(0.0, 1.0);
      const double amp = std::sqrt(2.0 * 10.0);  // SNR = (amp^2 / 2) / sigma^2 = 10
      const double ph = phase(rng);
      DailySeries s{Date::from_ymd(2016, 1, 1), {}};
      for (int d = 0; d < 28; ++d) s.values.emplace_back(100.0 + amp * std::sin(2 * M_PI * d / p + ph) + noise(rng));
      hits += std::abs(bin_of(characteristic_rhythm(s, {0, 28})) - bin_of(p)) <= 1;
    }
    ok = ok && hits == 100;
    detail += fmt("%s%g d: %d/100", detail.empty() ? "" : ", ", p, hits);
  }
  return {ok, detail + " within one frequency bin at SNR 10, 28-day window"};
}

struct SwitchRun {
  double event = 0.0;
  double p95 = 0.0;
};

SwitchRun period_switch_run(std::uint64_t seed) {
  CohortSpec spec;
  spec.n_users = 100;
  spec.days = 365;
  spec.seed = 2000 + seed;
  spec.steps_weekday = 7000;
  spec.steps_weekend = 4000;
  EventEffect e;
  e.event_date = spec.start_date + 180;
  e.duration_days = 42;
  e.period_override_days = 3.5;
  const Cohort c = generate_cohort(spec, {e});
  RhythmConfig cfg;
  const RhythmTable table(c, Activity::steps, cfg);
  const std::vector<Date> excl{e.event_date};
  const auto null = null_shift_distribution(table, c.interval(), 100, derive_seed(seed, {1}), cfg, excl);
  const auto ev = day_shift_distribution(table, c.interval().index_of(e.event_date), default_binning(cfg),
                                         cfg.smoothing_mass);
  const auto rnd = null_disruption(table, c.interval(), null.distribution, 100, derive_seed(seed, {2}), cfg, excl);
  return {rhythm_disruption(*ev, null.distribution), rnd.quantile(0.95)};
}

Outcome c7_disruption(const Options&) {
  int hits = 0;
  double min_ratio = INFINITY;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = period_switch_run(seed);
    hits += r.event > r.p95;
    min_ratio = std::min(min_ratio, r.event / r.p95);
  }
  return {hits >= 18, fmt("%d/20 seeds with event KL > random-day p95 (>= 18); smallest ratio %.2f", hits, min_ratio)};
}

Outcome c8_kl(const Options&) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> bins(2, 40);
  double lowest = INFINITY;
  for (int t = 0; t < 1000; ++t) {
    const int n = bins(rng);
    std::vector<double> p(n), q(n);
    for (int i = 0; i < n; ++i) p[i] = u(rng) * (u(rng) < 0.2 ? 0.0 : 1.0), q[i] = u(rng) + 1e-6;
    if (std::accumulate(p.begin(), p.end(), 0.0) == 0.0) p[0] = 1.0;
    const double sp = std::accumulate(p.begin(), p.end(), 0.0), sq = std::accumulate(q.begin(), q.end(), 0.0);
    for (int i = 0; i < n; ++i) p[i] /= sp, q[i] /= sq;
    lowest = std::min(lowest, kl_divergence(p, q));
  }
  // Shared-support fixtures: shift histograms on common edges.
  double self = 0.0;
  const ShiftBinning b{1.0 / 3.0, 12.0};
  for (std::uint64_t s = 0; s < 50; ++s) {
    std::mt19937_64 r(s);
    std::normal_distribution<double> n(0.0, 2.0);
    std::vector<double> shifts(200);
    for (auto& x : shifts) x = n(r);
    const auto d = shift_distribution(shifts, b, 1e-9);
    self = std::max(self, rhythm_disruption(d, d));
  }
  const std::vector<double> f{0.5, 0.3, 0.2};
  self = std::max(self, kl_divergence(f, f));
  return {lowest >= 0.0 && self == 0.0,
          fmt("min KL over 1000 random pairs = %.3g (>= 0); max D_KL(f,f) over 51 fixtures = %g (== 0)", lowest, self)};
}

struct ClusterRun {
  std::size_t clusters = 0;
  double silhouette = NAN;
  std::size_t noise = 0;
  std::size_t days = 0;
};

/// A year with four event types acting on daily steps.
std::pair<CohortSpec, std::vector<EventEffect>> four_event_year(std::uint64_t seed) {
  CohortSpec spec;
  spec.n_users = 400;
  spec.days = 365;
  spec.seed = 3000 + seed;
  spec.steps_weekday = 7000;
  spec.steps_weekend = 4000;
  const Date s = spec.start_date;
  auto effect = [&](int start, int days) {
    EventEffect e;
    e.event_date = s + start;
    e.duration_days = days;
    return e;
  };
  std::vector<EventEffect> fx;
  auto up = effect(35, 45);  // volume surge
  up.steps_delta = 4000;
  fx.push_back(up);
  auto down = effect(110, 45);  // volume slump
  down.steps_delta = -3500;
  fx.push_back(down);
  auto rhythm = effect(185, 40);  // weekly cycle replaced by a 3.5-day one
  rhythm.period_override_days = 3.5;
  fx.push_back(rhythm);
  auto both_vol = effect(245, 90);  // slump enclosing a rhythm switch
  both_vol.steps_delta = -3500;
  fx.push_back(both_vol);
  auto both_rhythm = effect(270, 40);
  both_rhythm.period_override_days = 3.5;
  fx.push_back(both_rhythm);
  return {spec, fx};
}

ClusterRun cluster_run(std::uint64_t seed, double eps, int min_pts) {
  const auto [spec, fx] = four_event_year(seed);
  const Cohort c = generate_cohort(spec, fx);
  AnalysisConfig cfg;
  cfg.seed = seed;
  cfg.exclude_events_from_null = true;
  cfg.dbscan_eps = eps;
  cfg.dbscan_min_pts = min_pts;
  std::vector<EventSpec> events;
  for (std::size_t k = 0; k < fx.size(); ++k) events.push_back({"e" + std::to_string(k), fx[k].event_date, 7});
  AnalysisContext ctx(c, cfg, events);
  auto f = day_feature_points(ctx, Activity::steps);
  dbscan(std::span<DayPoint>(f.points), eps, min_pts);
  ClusterRun r;
  std::vector<int> labels;
  for (const auto& p : f.points) labels.push_back(p.cluster_label), r.noise += p.cluster_label == kNoise;
  r.clusters = cluster_count(labels);
  r.days = f.points.size();
  if (r.clusters >= 2) r.silhouette = silhouette(f.points);
  return r;
}

// Chosen on seeds 100-115, disjoint from the scored seeds. The library defaults
// (0.5, 5) chain event plateaus to the baseline through the 15-day volume ramps.
constexpr double kClusterEps = 0.3;
constexpr int kClusterMinPts = 12;

Outcome c9_clusters(const Options&) {
  int hits = 0;
  std::string runs;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = cluster_run(seed, kClusterEps, kClusterMinPts);
    hits += r.clusters >= 4 && r.silhouette >= 0.3;
    runs += fmt(" %zu/%.2f", r.clusters, r.silhouette);
  }
  return {hits >= 15, fmt("%d/20 seeds with >= 4 clusters and silhouette >= 0.3 (>= 15); eps %.2f, min_pts %d; "
                          "clusters/silhouette per seed:%s",
                          hits, kClusterEps, kClusterMinPts, runs.c_str())};
}

Outcome c10_dose_response(const Options&) {
  std::vector<double> means;
  for (double m : {1.0, 2.0, 3.0}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      CohortSpec spec;
      spec.n_users = 60;
      spec.days = 60;
      spec.seed = 4000 + seed;
      EventEffect e;
      e.event_date = spec.start_date + 30;
      e.onset_jitter_multiplier = m;
      const Cohort c = generate_cohort(spec, {e});
      SyncConfig cfg;
      cfg.seed = seed;
      total += oos_score(c, {"dose", e.event_date, 7}, cfg);
    }
    means.push_back(total / 20.0);
  }
  return {means[0] < means[1] && means[1] < means[2],
          fmt("mean OOS over 20 seeds: x1 %.4g < x2 %.4g < x3 %.4g", means[0], means[1], means[2])};
}

const char* kFourEventSpec =
    "n_users = %d\ndays = 365\nseed = %d\nstart_date = 2016-01-01\n"
    "[effect]\nevent_date = 2016-02-15\nonset_jitter_multiplier = 3\n"
    "[effect]\nevent_date = 2016-05-01\nsteps_delta = 3000\nduration_days = 21\n"
    "[effect]\nevent_date = 2016-07-15\nperiod_override_days = 3.5\nduration_days = 35\n"
    "[effect]\nevent_date = 2016-10-10\nsleep_delta_min = -60\nhr_delta_bpm = 4\n";

const char* kFourEventRun =
    "input = cohort.csv\nseed = 11\npair_budget = %d\nnull_days = 100\n"
    "[event]\nname = Desync\ndate = 2016-02-15\n"
    "[event]\nname = Surge\ndate = 2016-05-01\n"
    "[event]\nname = Rhythm switch\ndate = 2016-07-15\n"
    "[event]\nname = Short nights\ndate = 2016-10-10\n";

Outcome c11_determinism(const Options& o) {
  if (o.cli.empty()) return {false, "no --cli given"};
  const fs::path dir = o.workdir / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write(dir / "sim.ini", fmt(kFourEventSpec, 120, 21));
  write(dir / "run.ini", fmt(kFourEventRun, 2000));
  const std::string cli = o.cli.string();
  if (run(cli + " simulate --config " + (dir / "sim.ini").string() + " --out " + (dir / "cohort.csv").string() +
          " > /dev/null") != 0)
    return {false, "simulate failed"};
  int rc[2];
  for (int k = 0; k < 2; ++k)
    rc[k] = run(cli + " analyze --config " + (dir / "run.ini").string() + " --out " +
                (dir / ("run" + std::to_string(k))).string() + " > /dev/null 2>&1");
  std::set<std::string> names[2];
  for (int k = 0; k < 2; ++k)
    for (const auto& e : fs::directory_iterator(dir / ("run" + std::to_string(k))))
      names[k].insert(e.path().filename().string());
  std::size_t differing = 0;
  for (const auto& n : names[0])
    differing += slurp(dir / "run0" / n) != slurp(dir / "run1" / n);
  const bool ok = (rc[0] == 0 || rc[0] == 4) && rc[0] == rc[1] && names[0] == names[1] && differing == 0 &&
                  !names[0].empty();
  return {ok, fmt("%zu files per bundle, %zu differing, exit codes %d/%d", names[0].size(), differing, rc[0], rc[1])};
}

Outcome c12_performance(const Options& o) {
  if (o.cli.empty()) return {false, "no --cli given"};
  const fs::path dir = o.workdir / "performance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write(dir / "sim.ini", fmt(kFourEventSpec, 1000, 12));
  write(dir / "run.ini", fmt(kFourEventRun, 10000));
  const std::string cli = o.cli.string();
  const auto t0 = Clock::now();
  if (run(cli + " simulate --config " + (dir / "sim.ini").string() + " --out " + (dir / "cohort.csv").string() +
          " > /dev/null") != 0)
    return {false, "simulate failed"};
  const double sim = seconds_since(t0);
  const auto t1 = Clock::now();
  const int rc = run(cli + " analyze --config " + (dir / "run.ini").string() + " --out " + (dir / "out").string() +
                     " > /dev/null 2>&1");
  const double secs = seconds_since(t1);
  return {rc == 0 && secs < 600.0,
          fmt("1000 users x 365 days, 4 events, 100-day nulls, pair budget 10000: analyze %.1f s (< 600 s), "
              "exit %d; simulate %.1f s; %u hardware threads",
              secs, rc, sim, std::thread::hardware_concurrency())};
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) opt.cli = argv[++i];
    else if (a == "--workdir" && i + 1 < argc) opt.workdir = argv[++i];
    else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) opt.only.insert(std::stoi(tok));
    } else {
      std::cerr << "usage: acceptance [--cli PATH] [--workdir DIR] [--only 1,2,...]\n";
      return 2;
    }
  }
  fs::create_directories(opt.workdir);

  const std::vector<std::pair<std::string, std::function<Outcome(const Options&)>>> criteria = {
      {"spike-distance identity and symmetry", c1_identity_symmetry},
      {"grid oracle equivalence", c2_grid_oracle},
      {"standard-normalized bound", c3_bounds},
      {"null OOS centering", c4_null_centering},
      {"desynchronization detection", c5_desync},
      {"rhythm recovery", c6_rhythm_recovery},
      {"rhythm disruption detection", c7_disruption},
      {"KL properties", c8_kl},
      {"clustering separability", c9_clusters},
      {"dose-response monotonicity", c10_dose_response},
      {"determinism", c11_determinism},
      {"performance envelope", c12_performance},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!opt.only.empty() && !opt.only.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome r;
    try {
      r = criteria[i].second(opt);
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failures += !r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << criteria[i].first
              << "): " << r.detail << fmt("  [%.1f s]", seconds_since(t0)) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
