#include "biorhythm/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "biorhythm/errors.hpp"
#include "biorhythm/format.hpp"
#include "biorhythm/simulator.hpp"
#include "json.hpp"

namespace biorhythm {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void RunConfig::validate() const {
  analysis.validate();
  if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) throw ConfigError("min_coverage must lie in [0, 1]");
  std::set<std::string> names;
  for (const auto& e : events) {
    if (e.name.empty()) throw ConfigError("event name must not be empty");
    if (e.alpha_days < 1) throw ConfigError("event " + e.name + ": alpha_days must be at least 1");
    if (!names.insert(e.name).second) throw ConfigError("duplicate event name '" + e.name + "'");
  }
}

RunConfig parse_run_config(const KvDocument& doc, const fs::path& base_dir) {
  RunConfig cfg;
  auto& a = cfg.analysis;
  KvReader r(doc.root);
  const auto input = r.require_string("input");
  cfg.input = fs::path(input).is_absolute() ? fs::path(input) : base_dir / input;
  if (auto v = r.get_int("seed")) {
    if (*v < 0) throw ConfigError("seed must be nonnegative");
    a.seed = static_cast<std::uint64_t>(*v);
  }
  if (auto v = r.get_int("alpha_days")) a.alpha_days = static_cast<int>(*v);
  if (auto v = r.get_int("rhythm_window_days")) a.rhythm.window_days = static_cast<int>(*v);
  if (auto v = r.get_int("welch_segment_days")) a.rhythm.welch.segment_days = static_cast<int>(*v);
  if (auto v = r.get_double("welch_overlap")) a.rhythm.welch.overlap_fraction = *v;
  if (auto v = r.get_string("welch_detrend")) a.rhythm.welch.detrend = parse_detrend(*v);
  if (auto v = r.get_int("max_gap_days")) a.rhythm.welch.max_gap_days = static_cast<int>(*v);
  if (auto v = r.get_double("shift_bin_width")) a.rhythm.bin_width_days = *v;
  if (auto v = r.get_double("smoothing_mass")) a.rhythm.smoothing_mass = *v;
  if (auto v = r.get_string("spike_variant")) a.sync.spike.variant = parse_spike_variant(*v);
  if (auto v = r.get_int("grid_points_per_mean_isi")) a.sync.spike.grid_points_per_mean_isi = static_cast<int>(*v);
  if (auto v = r.get_string("edge_handling")) a.sync.spike.edge_handling = parse_edge_handling(*v);
  if (auto v = r.get_int("pair_budget")) {
    if (*v < 1) throw ConfigError("pair_budget must be at least 1");
    a.sync.pair_budget = static_cast<std::size_t>(*v);
  }
  if (auto v = r.get_int("null_days")) {
    if (*v < 1) throw ConfigError("null_days must be at least 1, got " + std::to_string(*v));
    a.null_days = static_cast<std::size_t>(*v);
  }
  if (auto v = r.get_bool("exclude_events_from_null")) a.exclude_events_from_null = *v;
  if (auto v = r.get_double("dbscan_eps")) a.dbscan_eps = *v;
  if (auto v = r.get_int("dbscan_min_pts")) a.dbscan_min_pts = static_cast<int>(*v);
  if (auto v = r.get_string("coverage_activity")) {
    try {
      cfg.coverage_activity = parse_activity(*v);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  if (auto v = r.get_double("min_coverage")) cfg.min_coverage = *v;
  r.finish();

  for (const auto& block : doc.sections) {
    if (block.section != "event")
      throw ConfigError("line " + std::to_string(block.line) + ": unknown section [" + block.section + "]");
    KvReader er(block);
    EventSpec e;
    e.name = er.require_string("name");
    e.date = er.require_date("date");
    e.alpha_days = static_cast<int>(er.get_int("alpha_days").value_or(a.alpha_days));
    er.finish();
    cfg.events.push_back(std::move(e));
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  return parse_run_config(parse_kv_file(path), path.parent_path());
}

void apply_overrides(RunConfig& cfg, const RunOverrides& o) {
  auto& a = cfg.analysis;
  if (o.seed) a.seed = *o.seed;
  if (o.pair_budget) {
    if (*o.pair_budget < 1) throw ConfigError("--pair-budget must be at least 1");
    a.sync.pair_budget = *o.pair_budget;
  }
  if (o.alpha_days) {
    a.alpha_days = *o.alpha_days;
    for (auto& e : cfg.events) e.alpha_days = *o.alpha_days;
  }
  if (o.rhythm_window_days) a.rhythm.window_days = *o.rhythm_window_days;
  if (o.spike_variant) a.sync.spike.variant = *o.spike_variant;
  cfg.validate();
}

namespace {

json config_json(const RunConfig& cfg) {
  const auto& a = cfg.analysis;
  json events = json::array();
  for (const auto& e : cfg.events)
    events.push_back({{"name", e.name}, {"date", e.date.iso()}, {"alpha_days", e.alpha_days}});
  json j = {
      {"input", cfg.input.generic_string()},
      {"seed", a.seed},
      {"alpha_days", a.alpha_days},
      {"rhythm_window_days", a.rhythm.window_days},
      {"welch_segment_days", a.rhythm.welch.segment_days},
      {"welch_overlap", a.rhythm.welch.overlap_fraction},
      {"welch_detrend", std::string(to_string(a.rhythm.welch.detrend))},
      {"max_gap_days", a.rhythm.welch.max_gap_days},
      {"shift_bin_width", a.rhythm.bin_width_days ? json(*a.rhythm.bin_width_days) : json(nullptr)},
      {"smoothing_mass", a.rhythm.smoothing_mass},
      {"spike_variant", std::string(to_string(a.sync.spike.variant))},
      {"grid_points_per_mean_isi", a.sync.spike.grid_points_per_mean_isi},
      {"edge_handling", std::string(to_string(a.sync.spike.edge_handling))},
      {"pair_budget", a.sync.pair_budget ? json(*a.sync.pair_budget) : json(nullptr)},
      {"null_days", a.null_days},
      {"exclude_events_from_null", a.exclude_events_from_null},
      {"dbscan_eps", a.dbscan_eps},
      {"dbscan_min_pts", a.dbscan_min_pts},
      {"coverage_activity", cfg.coverage_activity ? json(std::string(to_string(*cfg.coverage_activity))) : json(nullptr)},
      {"min_coverage", cfg.min_coverage},
      {"events", events},
  };
  return j;
}

}  // namespace

std::string canonical_config(const RunConfig& cfg) { return config_json(cfg).dump(); }

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_config(cfg))));
  return buf;
}

IngestResult load_cohort(const RunConfig& cfg) {
  if (!fs::exists(cfg.input)) throw Error("input file not found: " + cfg.input.string());
  auto result = parse_activity_csv(cfg.input);
  if (result.cohort.empty()) throw InsufficientDataError("input " + cfg.input.string() + " holds no valid records");
  if (cfg.coverage_activity)
    result.cohort = filter_by_coverage(result.cohort, *cfg.coverage_activity, cfg.min_coverage);
  return result;
}

// ---------------------------------------------------------------------------
// Bundle writing

namespace {

class Bundle {
 public:
  explicit Bundle(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void text(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << content;
    if (!out) throw Error("failed writing " + (dir_ / name).string());
    files_.push_back(name);
  }

  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string slugify(const std::string& name) {
  std::string s;
  for (char c : name) {
    const auto uc = static_cast<unsigned char>(c);
    s += std::isalnum(uc) ? static_cast<char>(std::tolower(uc)) : '_';
  }
  return s.empty() ? "event" : s;
}

std::vector<std::string> event_slugs(const std::vector<EventSpec>& events) {
  std::vector<std::string> out;
  std::set<std::string> used;
  for (const auto& e : events) {
    std::string base = slugify(e.name), s = base;
    for (int k = 2; used.count(s); ++k) s = base + "_" + std::to_string(k);
    used.insert(s);
    out.push_back(s);
  }
  return out;
}

std::string volume_csv(const PopulationSeries& s) {
  std::ostringstream o;
  o << "date,mean,ci_halfwidth,n\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    o << (s.start + static_cast<int>(i)).iso() << ',' << format_optional(s.mean[i]) << ','
      << format_optional(s.ci_halfwidth[i]) << ',' << s.n[i] << '\n';
  return o.str();
}

std::string pairs_csv(const PairDistanceMatrix& m) {
  std::ostringstream o;
  o << "user_a,user_b,d_s\n";
  for (const auto& p : m.pairs) o << p.user_a << ',' << p.user_b << ',' << format_number(p.d_s) << '\n';
  return o.str();
}

std::string psd_csv(const PsdEstimate& psd) {
  std::ostringstream o;
  o << "period_days,power\n";
  for (std::size_t k = 0; k < psd.periods.size(); ++k)
    o << format_number(psd.periods[k]) << ',' << format_number(psd.power[k]) << '\n';
  return o.str();
}

std::string shift_csv(const ShiftDistribution& ev, const ShiftDistribution& null) {
  std::ostringstream o;
  o << "bin_left,bin_right,event_mass,null_mass\n";
  for (std::size_t b = 0; b < ev.probabilities.size(); ++b)
    o << format_number(ev.bin_edges[b]) << ',' << format_number(ev.bin_edges[b + 1]) << ','
      << format_number(ev.probabilities[b]) << ',' << format_number(null.probabilities[b]) << '\n';
  return o.str();
}

json null_json(const NullSummary& s) {
  return {{"metric", s.metric},       {"n_days", s.n_days()},           {"seed", s.seed},
          {"mean", s.mean},           {"ci_halfwidth", opt(s.ci_halfwidth)}, {"skipped_days", s.skipped_days}};
}

std::string signature_csv(const std::vector<EventSignature>& rows) {
  std::ostringstream o;
  o << "event,steps,sleep_hours,heart_bpm,oos_sleep,oos_growth_sleep,rhythm_disruption_steps,"
       "rhythm_disruption_sleep,rhythm_disruption_heart\n";
  for (const auto& r : rows)
    o << r.event_name << ',' << format_optional(r.steps_volume) << ',' << format_optional(r.sleep_volume_hours)
      << ',' << format_optional(r.hr_volume_bpm) << ',' << format_optional(r.oos_sleep) << ','
      << format_optional(r.oos_growth_sleep) << ',' << format_optional(r.rhythm_disruption_steps) << ','
      << format_optional(r.rhythm_disruption_sleep) << ',' << format_optional(r.rhythm_disruption_hr) << '\n';
  return o.str();
}

std::string days_csv(const std::vector<DayPoint>& pts) {
  std::ostringstream o;
  o << "date,volume_z,disruption_z,cluster\n";
  for (const auto& p : pts)
    o << p.date.iso() << ',' << format_number(p.volume_z) << ',' << format_number(p.disruption_z) << ','
      << p.cluster_label << '\n';
  return o.str();
}

template <typename F>
void guarded(std::vector<std::string>& errors, const std::string& label, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    errors.push_back(label + ": " + e.what());
  }
}

void write_manifest(Bundle& bundle, const RunConfig& cfg, std::string_view command, const IngestResult& input,
                    RunOutcome& outcome) {
  outcome.artifacts = bundle.files();
  std::sort(outcome.artifacts.begin(), outcome.artifacts.end());
  outcome.artifacts.push_back("manifest.json");
  json rejected = json::array();
  for (const auto& r : input.rejected)
    rejected.push_back({{"line", r.line}, {"user_id", r.user_id}, {"reason", r.reason}});
  json manifest = {
      {"tool", "biorhythm"},
      {"version", std::string(kToolVersion)},
      {"command", std::string(command)},
      {"config_hash", config_hash(cfg)},
      {"config", json::parse(canonical_config(cfg))},
      {"seed", cfg.analysis.seed},
      {"n_users", input.cohort.n_users()},
      {"interval", {input.cohort.interval().first.iso(), input.cohort.interval().last.iso()}},
      {"rejected_rows", rejected},
      {"artifacts", outcome.artifacts},
      {"errors", outcome.errors},
  };
  bundle.json_file("manifest.json", manifest);
  outcome.exit_code = outcome.errors.empty() ? kExitOk : kExitMetricFailure;
}

void write_null_models(Bundle& bundle, AnalysisContext& ctx, std::vector<std::string>& errors) {
  guarded(errors, "null_oos", [&] {
    const auto& ns = ctx.null_sync();
    bundle.json_file("null_oos.json", null_json(ns.oos));
    if (ns.growth) bundle.json_file("null_oos_growth.json", null_json(*ns.growth));
  });
  for (Activity a : kSignatureActivities) {
    const std::string name(to_string(a));
    guarded(errors, "null_shift_" + name,
            [&] { bundle.json_file("null_shift_" + name + ".json", null_json(ctx.null_shifts(a).summary)); });
    guarded(errors, "null_volume_" + name,
            [&] { bundle.json_file("null_volume_" + name + ".json", null_json(ctx.null_volume(a))); });
  }
}

}  // namespace

RunOutcome run_analyze(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const IngestResult input = load_cohort(cfg);
  const Cohort& cohort = input.cohort;
  AnalysisContext ctx(cohort, cfg.analysis, cfg.events);
  Bundle bundle(out_dir);
  RunOutcome outcome;
  auto& errors = outcome.errors;
  const auto slugs = event_slugs(cfg.events);
  const auto& a = cfg.analysis;

  for (Activity act : kSignatureActivities) {
    const std::string name(to_string(act));
    guarded(errors, "volume_" + name, [&] { bundle.text("volume_" + name + ".csv", volume_csv(ctx.volume(act))); });
  }

  guarded(errors, "threshold_source",
          [&] { bundle.text("pairs_full_period.csv", pairs_csv(ctx.threshold_source())); });

  for (std::size_t i = 0; i < cfg.events.size(); ++i) {
    const auto& ev = cfg.events[i];
    const auto& slug = slugs[i];
    guarded(errors, "oos_" + slug, [&] {
      const auto sync = ctx.event_sync(i);
      json j = {{"event", ev.name},
                {"oos", sync.oos},
                {"oos_growth", opt(sync.oos_growth)},
                {"n_users", sync.n_users},
                {"n_pairs", sync.n_pairs},
                {"variant", std::string(to_string(a.sync.spike.variant))},
                {"seed", ctx.event_seed(i)}};
      bundle.json_file("oos_" + slug + ".json", j);
      bundle.text("pairs_" + slug + "_before.csv", pairs_csv(sync.before));
      bundle.text("pairs_" + slug + "_after.csv", pairs_csv(sync.after));
      if (!sync.oos_growth) errors.push_back("oos_growth_" + slug + ": " + sync.growth_error);
    });

    for (Activity act : kSignatureActivities) {
      const std::string name(to_string(act));
      const std::string tag = slug + "_" + name;
      guarded(errors, "rhythm_" + tag, [&] {
        const auto ev_dist = ctx.event_shift_distribution(act, ev.date);
        const auto& null = ctx.null_shifts(act).distribution;
        json j = {{"event", ev.name},
                  {"activity", name},
                  {"kl", rhythm_disruption(ev_dist, null)},
                  {"n_users", ev_dist.n_samples},
                  {"window_days", a.rhythm.window_days}};
        bundle.json_file("rhythm_" + tag + ".json", j);
        bundle.text("shifts_" + tag + ".csv", shift_csv(ev_dist, null));
        const int e = cohort.interval().index_of(ev.date);
        const int w = a.rhythm.window_days;
        if (auto psd = mean_psd(cohort, act, {e - w, e}, a.rhythm.welch))
          bundle.text("psd_" + tag + "_before.csv", psd_csv(*psd));
        if (auto psd = mean_psd(cohort, act, {e, e + w}, a.rhythm.welch))
          bundle.text("psd_" + tag + "_after.csv", psd_csv(*psd));
      });
    }
  }

  write_null_models(bundle, ctx, errors);

  guarded(errors, "signatures", [&] {
    const auto rows = build_signature_table(ctx);
    bundle.text("signatures.csv", signature_csv(rows));
  });

  for (Activity act : {Activity::steps, Activity::sleep_minutes}) {
    const std::string name(to_string(act));
    guarded(errors, "days_" + name, [&] {
      auto features = day_feature_points(ctx, act);
      if (features.points.empty()) throw InsufficientDataError("no day has usable feature windows");
      dbscan(std::span<DayPoint>(features.points), a.dbscan_eps, a.dbscan_min_pts);
      std::vector<int> labels;
      for (const auto& p : features.points) labels.push_back(p.cluster_label);
      json sil = nullptr;
      try {
        sil = silhouette(features.points);
      } catch (const UndefinedSilhouetteError&) {
      }
      bundle.text("days_" + name + ".csv", days_csv(features.points));
      bundle.json_file("clusters_" + name + ".json",
                       {{"activity", name},
                        {"eps", a.dbscan_eps},
                        {"min_pts", a.dbscan_min_pts},
                        {"n_days", features.points.size()},
                        {"excluded_days", features.excluded_days},
                        {"n_clusters", cluster_count(labels)},
                        {"n_noise", std::count(labels.begin(), labels.end(), kNoise)},
                        {"silhouette", sil},
                        {"warnings", features.warnings}});
    });
  }

  write_manifest(bundle, cfg, "analyze", input, outcome);
  return outcome;
}

RunOutcome run_nullmodel(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const IngestResult input = load_cohort(cfg);
  AnalysisContext ctx(input.cohort, cfg.analysis, cfg.events);
  Bundle bundle(out_dir);
  RunOutcome outcome;
  write_null_models(bundle, ctx, outcome.errors);
  write_manifest(bundle, cfg, "nullmodel", input, outcome);
  return outcome;
}

void run_simulate(const fs::path& spec_path, const fs::path& out_path, std::optional<std::uint64_t> seed,
                  std::ostream& log) {
  auto spec = load_simulation_spec(spec_path);
  if (seed) spec.cohort.seed = *seed;
  const Cohort cohort = generate_cohort(spec.cohort, spec.effects);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  export_cohort(cohort, out_path);
  log << "wrote " << cohort.n_records() << " records for " << cohort.n_users() << " users ("
      << cohort.interval().first.iso() << " to " << cohort.interval().last.iso() << ", seed " << spec.cohort.seed
      << ", " << spec.effects.size() << " effects) to " << out_path.string() << '\n';
}

}  // namespace biorhythm
