#include "biorhythm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "biorhythm/errors.hpp"
#include "biorhythm/seeding.hpp"

namespace biorhythm {

namespace {

constexpr std::uint64_t kBaselineStream = 0xba5e11e5ULL;
constexpr std::uint64_t kAffectedStream = 0xaffec7edULL;
constexpr std::uint64_t kDayStream = 0xda11ULL;

constexpr double kOnsetEarliest = 1080.0;  // 18:00
constexpr double kOnsetLatest = 2040.0;    // 10:00 next day

std::string user_id(int index, int n_users) {
  const int width = std::max<int>(4, static_cast<int>(std::to_string(n_users).size()));
  std::string digits = std::to_string(index + 1);
  return "u" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

struct UserBaseline {
  double onset = 0.0;
  double sleep = 0.0;
  double steps_offset = 0.0;
  double hr = 0.0;
};

}  // namespace

void CohortSpec::validate() const {
  if (n_users < 1) throw ConfigError("n_users must be at least 1");
  if (days < 1) throw ConfigError("days must be at least 1");
  for (double sd : {onset_sd_min, onset_between_sd_min, sleep_sd_min, sleep_between_sd_min, steps_sd,
                    steps_between_sd, hr_sd_bpm, hr_between_sd_bpm})
    if (!(sd >= 0.0)) throw ConfigError("standard deviations must be nonnegative");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ConfigError("missing_rate must lie in [0, 1)");
}

void EventEffect::validate() const {
  if (duration_days < 1) throw ConfigError("effect duration_days must be at least 1");
  if (!(affected_fraction > 0.0 && affected_fraction <= 1.0))
    throw ConfigError("effect affected_fraction must lie in (0, 1]");
  if (!(onset_jitter_multiplier >= 1.0)) throw ConfigError("onset_jitter_multiplier must be at least 1");
  if (period_override_days && !(*period_override_days >= 2.0))
    throw ConfigError("period_override_days must be at least 2");
}

Cohort generate_cohort(const CohortSpec& spec, const std::vector<EventEffect>& effects) {
  spec.validate();
  std::vector<int> effect_start;
  for (const auto& e : effects) {
    e.validate();
    const int s = e.event_date - spec.start_date;
    if (s < 0 || s + e.duration_days > spec.days)
      throw ConfigError("effect window starting " + e.event_date.iso() + " (" + std::to_string(e.duration_days) +
                        " days) leaves the simulated interval");
    effect_start.push_back(s);
  }

  const DateInterval interval{spec.start_date, spec.start_date + (spec.days - 1)};
  std::vector<ActivityRecord> records;
  records.reserve(static_cast<std::size_t>(spec.n_users) * static_cast<std::size_t>(spec.days));

  for (int u = 0; u < spec.n_users; ++u) {
    const std::string id = user_id(u, spec.n_users);
    const auto uu = static_cast<std::uint64_t>(u);

    UserBaseline base;
    {
      std::mt19937_64 rng(derive_seed(spec.seed, {kBaselineStream, uu}));
      std::normal_distribution<double> z;
      base.onset = spec.onset_mean_min + z(rng) * spec.onset_between_sd_min;
      base.sleep = spec.sleep_mean_min + z(rng) * spec.sleep_between_sd_min;
      base.steps_offset = z(rng) * spec.steps_between_sd;
      base.hr = spec.hr_mean_bpm + z(rng) * spec.hr_between_sd_bpm;
    }
    std::vector<bool> affected(effects.size());
    for (std::size_t k = 0; k < effects.size(); ++k) {
      std::mt19937_64 rng(derive_seed(spec.seed, {kAffectedStream, uu, static_cast<std::uint64_t>(k)}));
      affected[k] = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < effects[k].affected_fraction;
    }

    for (int d = 0; d < spec.days; ++d) {
      const Date date = spec.start_date + d;
      std::mt19937_64 rng(derive_seed(spec.seed, {kDayStream, uu, static_cast<std::uint64_t>(d)}));
      std::normal_distribution<double> z;
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      const double z_onset = z(rng), z_sleep = z(rng), z_steps = z(rng), z_hr = z(rng);
      const double miss_sleep = unif(rng), miss_steps = unif(rng), miss_hr = unif(rng);

      bool weekend = date.is_weekend();
      double jitter = 1.0, sleep_delta = 0.0, hr_delta = 0.0, steps_delta = 0.0;
      for (std::size_t k = 0; k < effects.size(); ++k) {
        const auto& e = effects[k];
        if (!affected[k] || d < effect_start[k] || d >= effect_start[k] + e.duration_days) continue;
        jitter *= e.onset_jitter_multiplier;
        sleep_delta += e.sleep_delta_min;
        hr_delta += e.hr_delta_bpm;
        steps_delta += e.steps_delta;
        if (e.period_override_days) {
          const double cycles = (d - effect_start[k]) / *e.period_override_days;
          weekend = (cycles - std::floor(cycles)) >= 5.0 / 7.0 - 1e-9;
        }
      }

      ActivityRecord rec{id, date, {}};
      if (miss_sleep >= spec.missing_rate) {
        double onset = std::clamp(base.onset + z_onset * spec.onset_sd_min * jitter, kOnsetEarliest, kOnsetLatest);
        onset = std::round(onset);
        const bool next_day = onset >= kMinutesPerDay;
        rec.values.sleep_onset = SleepOnset{next_day ? onset - kMinutesPerDay : onset, next_day};
        const double sleep = base.sleep + (weekend ? spec.sleep_weekend_extra_min : 0.0) +
                             z_sleep * spec.sleep_sd_min + sleep_delta;
        rec.values.sleep_minutes = std::round(std::clamp(sleep, 0.0, kMinutesPerDay));
      }
      if (miss_steps >= spec.missing_rate) {
        const double mean = (weekend ? spec.steps_weekend : spec.steps_weekday) + base.steps_offset;
        rec.values.steps = static_cast<std::int64_t>(std::max(0.0, std::round(mean + z_steps * spec.steps_sd + steps_delta)));
      }
      if (miss_hr >= spec.missing_rate) {
        const double hr = base.hr + (weekend ? spec.hr_weekend_delta_bpm : 0.0) + z_hr * spec.hr_sd_bpm + hr_delta;
        rec.values.heart_rate = std::round(std::clamp(hr, 30.0, 220.0) * 10.0) / 10.0;
      }
      records.push_back(std::move(rec));
    }
  }
  return Cohort(interval, std::move(records));
}

void export_cohort(const Cohort& cohort, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_activity_csv(cohort, out);
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

namespace {

void read_cohort_keys(KvReader& r, CohortSpec& c) {
  if (auto v = r.get_int("n_users")) c.n_users = static_cast<int>(*v);
  if (auto v = r.get_int("days")) c.days = static_cast<int>(*v);
  if (auto v = r.get_int("seed")) c.seed = static_cast<std::uint64_t>(*v);
  if (auto v = r.get_date("start_date")) c.start_date = *v;
  if (auto v = r.get_double("onset_mean_min")) c.onset_mean_min = *v;
  if (auto v = r.get_double("onset_sd_min")) c.onset_sd_min = *v;
  if (auto v = r.get_double("onset_between_sd_min")) c.onset_between_sd_min = *v;
  if (auto v = r.get_double("sleep_mean_min")) c.sleep_mean_min = *v;
  if (auto v = r.get_double("sleep_sd_min")) c.sleep_sd_min = *v;
  if (auto v = r.get_double("sleep_between_sd_min")) c.sleep_between_sd_min = *v;
  if (auto v = r.get_double("sleep_weekend_extra_min")) c.sleep_weekend_extra_min = *v;
  if (auto v = r.get_double("steps_weekday")) c.steps_weekday = *v;
  if (auto v = r.get_double("steps_weekend")) c.steps_weekend = *v;
  if (auto v = r.get_double("steps_sd")) c.steps_sd = *v;
  if (auto v = r.get_double("steps_between_sd")) c.steps_between_sd = *v;
  if (auto v = r.get_double("hr_mean_bpm")) c.hr_mean_bpm = *v;
  if (auto v = r.get_double("hr_sd_bpm")) c.hr_sd_bpm = *v;
  if (auto v = r.get_double("hr_between_sd_bpm")) c.hr_between_sd_bpm = *v;
  if (auto v = r.get_double("hr_weekend_delta_bpm")) c.hr_weekend_delta_bpm = *v;
  if (auto v = r.get_double("missing_rate")) c.missing_rate = *v;
}

}  // namespace

SimulationSpec parse_simulation_spec(const KvDocument& doc) {
  SimulationSpec spec;
  {
    KvReader root(doc.root);
    read_cohort_keys(root, spec.cohort);
    root.finish();
  }
  bool seen_cohort = false;
  for (const auto& block : doc.sections) {
    KvReader r(block);
    if (block.section == "cohort") {
      if (seen_cohort) throw ConfigError("line " + std::to_string(block.line) + ": repeated [cohort] block");
      seen_cohort = true;
      read_cohort_keys(r, spec.cohort);
    } else if (block.section == "effect") {
      EventEffect e;
      e.event_date = r.require_date("event_date");
      if (auto v = r.get_int("duration_days")) e.duration_days = static_cast<int>(*v);
      if (auto v = r.get_double("onset_jitter_multiplier")) e.onset_jitter_multiplier = *v;
      if (auto v = r.get_double("sleep_delta_min")) e.sleep_delta_min = *v;
      if (auto v = r.get_double("hr_delta_bpm")) e.hr_delta_bpm = *v;
      if (auto v = r.get_double("steps_delta")) e.steps_delta = *v;
      if (auto v = r.get_double("period_override_days")) e.period_override_days = *v;
      if (auto v = r.get_double("affected_fraction")) e.affected_fraction = *v;
      spec.effects.push_back(e);
    } else {
      throw ConfigError("line " + std::to_string(block.line) + ": unknown section [" + block.section + "]");
    }
    r.finish();
  }
  spec.cohort.validate();
  for (const auto& e : spec.effects) e.validate();
  return spec;
}

SimulationSpec load_simulation_spec(const std::filesystem::path& path) {
  return parse_simulation_spec(parse_kv_file(path));
}

}  // namespace biorhythm
