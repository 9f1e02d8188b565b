#include "biorhythm/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "biorhythm/errors.hpp"
#include "biorhythm/format.hpp"

namespace biorhythm {

std::string_view to_string(Activity a) {
  switch (a) {
    case Activity::steps: return "steps";
    case Activity::sleep_minutes: return "sleep";
    case Activity::sleep_onset: return "onset";
    case Activity::heart_rate: return "heart_rate";
  }
  return "unknown";
}

Activity parse_activity(std::string_view name) {
  if (name == "steps") return Activity::steps;
  if (name == "sleep" || name == "sleep_minutes") return Activity::sleep_minutes;
  if (name == "onset" || name == "sleep_onset") return Activity::sleep_onset;
  if (name == "heart_rate" || name == "heart") return Activity::heart_rate;
  throw DomainError("unknown activity '" + std::string(name) + "'");
}

std::optional<double> Measurements::value(Activity a) const {
  switch (a) {
    case Activity::steps:
      if (steps) return static_cast<double>(*steps);
      return std::nullopt;
    case Activity::sleep_minutes: return sleep_minutes;
    case Activity::sleep_onset:
      if (sleep_onset) return sleep_onset->absolute_minutes();
      return std::nullopt;
    case Activity::heart_rate: return heart_rate;
  }
  return std::nullopt;
}

std::optional<std::string> invariant_violation(const Measurements& m) {
  if (m.steps && *m.steps < 0) return "steps must be nonnegative";
  if (m.sleep_minutes && !(*m.sleep_minutes >= 0.0 && *m.sleep_minutes <= kMinutesPerDay))
    return "sleep_minutes outside [0, 1440]";
  if (m.sleep_onset && !(m.sleep_onset->minutes >= 0.0 && m.sleep_onset->minutes < kMinutesPerDay))
    return "sleep_onset_min outside [0, 1440)";
  if (m.heart_rate && !(*m.heart_rate > kHeartRateMin && *m.heart_rate < kHeartRateMax))
    return "heart_rate_bpm outside (20, 250)";
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Cohort

Cohort::Cohort(DateInterval interval, std::vector<ActivityRecord> records) : interval_(interval) {
  if (interval.last < interval.first) throw DomainError("cohort interval ends before it starts");
  for (const auto& r : records) users_.push_back(r.user_id);
  std::sort(users_.begin(), users_.end());
  users_.erase(std::unique(users_.begin(), users_.end()), users_.end());

  days_.assign(users_.size(), std::vector<std::optional<Measurements>>(
                                  static_cast<std::size_t>(interval.n_days())));
  std::vector<std::string> duplicates;
  for (auto& r : records) {
    if (!interval.contains(r.date))
      throw DomainError("record " + r.user_id + "/" + r.date.iso() + " lies outside the interval");
    if (auto why = invariant_violation(r.values))
      throw DomainError("record " + r.user_id + "/" + r.date.iso() + ": " + *why);
    auto& slot = days_[user_index(r.user_id)][static_cast<std::size_t>(interval.index_of(r.date))];
    if (slot) {
      duplicates.push_back(r.user_id + "/" + r.date.iso());
      continue;
    }
    slot = std::move(r.values);
  }
  if (!duplicates.empty()) {
    std::string msg = "duplicate (user, date) records:";
    for (const auto& d : duplicates) msg += " " + d;
    throw IngestionError(msg);
  }
}

std::size_t Cohort::n_records() const {
  std::size_t n = 0;
  for (const auto& u : days_)
    n += static_cast<std::size_t>(std::count_if(u.begin(), u.end(), [](const auto& d) { return d.has_value(); }));
  return n;
}

bool Cohort::contains(std::string_view user) const {
  return std::binary_search(users_.begin(), users_.end(), user);
}

std::size_t Cohort::user_index(std::string_view user) const {
  auto it = std::lower_bound(users_.begin(), users_.end(), user);
  if (it == users_.end() || *it != user) throw LookupError("unknown user '" + std::string(user) + "'");
  return static_cast<std::size_t>(it - users_.begin());
}

const Measurements* Cohort::find(std::size_t user, int day) const {
  if (user >= days_.size() || day < 0 || day >= n_days()) return nullptr;
  const auto& slot = days_[user][static_cast<std::size_t>(day)];
  return slot ? &*slot : nullptr;
}

std::vector<ActivityRecord> Cohort::records() const {
  std::vector<ActivityRecord> out;
  for (std::size_t u = 0; u < users_.size(); ++u)
    for (int d = 0; d < n_days(); ++d)
      if (const auto* m = find(u, d)) out.push_back({users_[u], interval_.first + d, *m});
  return out;
}

Cohort Cohort::subset(std::span<const std::string> keep) const {
  Cohort out;
  out.interval_ = interval_;
  for (std::size_t u = 0; u < users_.size(); ++u) {
    if (std::find(keep.begin(), keep.end(), users_[u]) == keep.end()) continue;
    out.users_.push_back(users_[u]);
    out.days_.push_back(days_[u]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
std::optional<T> parse_field(std::string_view s, std::size_t line, std::string_view column) {
  if (s.empty()) return std::nullopt;
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(line, "column '" + std::string(column) + "': cannot parse '" + std::string(s) + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v))
      throw ParseError(line, "column '" + std::string(column) + "': non-finite value");
  }
  return v;
}

}  // namespace

IngestResult parse_activity_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_commas(line);
  auto column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(1, "header lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_user = column(schema.user_id), c_date = column(schema.date),
                    c_steps = column(schema.steps), c_sleep = column(schema.sleep_minutes),
                    c_onset = column(schema.sleep_onset_min), c_flag = column(schema.onset_next_day),
                    c_hr = column(schema.heart_rate_bpm);

  IngestResult result;
  std::vector<ActivityRecord> accepted;
  std::map<std::pair<std::string, int>, std::size_t> seen;
  std::vector<std::string> duplicates;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size())
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));

    ActivityRecord rec;
    rec.user_id = std::string(fields[c_user]);
    if (rec.user_id.empty()) throw ParseError(line_no, "empty user_id");
    try {
      rec.date = Date::parse(fields[c_date]);
    } catch (const DomainError& e) {
      throw ParseError(line_no, e.what());
    }
    rec.values.steps = parse_field<std::int64_t>(fields[c_steps], line_no, schema.steps);
    rec.values.sleep_minutes = parse_field<double>(fields[c_sleep], line_no, schema.sleep_minutes);
    rec.values.heart_rate = parse_field<double>(fields[c_hr], line_no, schema.heart_rate_bpm);
    const auto onset = parse_field<double>(fields[c_onset], line_no, schema.sleep_onset_min);
    const auto flag = parse_field<int>(fields[c_flag], line_no, schema.onset_next_day);
    if (flag && *flag != 0 && *flag != 1)
      throw ParseError(line_no, "column '" + schema.onset_next_day + "' must be 0 or 1");
    if (onset) rec.values.sleep_onset = SleepOnset{*onset, flag.value_or(0) == 1};

    if (auto why = invariant_violation(rec.values)) {
      result.rejected.push_back({line_no, rec.user_id, *why});
      continue;
    }
    auto key = std::make_pair(rec.user_id, rec.date.days_since_epoch());
    if (auto it = seen.find(key); it != seen.end()) {
      duplicates.push_back(rec.user_id + "/" + rec.date.iso() + " (lines " +
                           std::to_string(it->second) + ", " + std::to_string(line_no) + ")");
      continue;
    }
    seen.emplace(std::move(key), line_no);
    accepted.push_back(std::move(rec));
  }

  if (!duplicates.empty()) {
    std::string msg = "duplicate (user, date) rows:";
    for (const auto& d : duplicates) msg += " " + d;
    throw IngestionError(msg);
  }
  if (accepted.empty()) return result;

  auto [lo, hi] = std::minmax_element(accepted.begin(), accepted.end(),
                                      [](const auto& a, const auto& b) { return a.date < b.date; });
  const DateInterval interval{lo->date, hi->date};
  result.cohort = Cohort(interval, std::move(accepted));
  return result;
}

IngestResult parse_activity_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_activity_csv(in, schema);
}

void write_activity_csv(const Cohort& cohort, std::ostream& out) {
  out << kCanonicalHeader << '\n';
  for (std::size_t u = 0; u < cohort.n_users(); ++u) {
    const std::string& user = cohort.users()[u];
    for (int d = 0; d < cohort.n_days(); ++d) {
      const Measurements* m = cohort.find(u, d);
      if (!m) continue;
      out << user << ',' << (cohort.interval().first + d).iso() << ',';
      if (m->steps) out << *m->steps;
      out << ',' << format_optional(m->sleep_minutes) << ',';
      if (m->sleep_onset) out << format_number(m->sleep_onset->minutes) << ',' << (m->sleep_onset->next_day ? 1 : 0);
      else out << ',';
      out << ',' << format_optional(m->heart_rate) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Derived views

Cohort filter_by_coverage(const Cohort& cohort, Activity activity, double min_fraction) {
  if (!(min_fraction >= 0.0 && min_fraction <= 1.0)) throw DomainError("min_fraction outside [0, 1]");
  std::vector<std::string> keep;
  const double n_days = cohort.n_days();
  for (std::size_t u = 0; u < cohort.n_users(); ++u) {
    int present = 0;
    for (int d = 0; d < cohort.n_days(); ++d) {
      const Measurements* m = cohort.find(u, d);
      if (m && m->value(activity)) ++present;
    }
    if (present / n_days >= min_fraction) keep.push_back(cohort.users()[u]);
  }
  return cohort.subset(keep);
}

SpikeTrain::SpikeTrain(std::vector<double> spikes, double length)
    : spikes_(std::move(spikes)), length_(length) {
  if (!(length >= 0.0)) throw DomainError("spike train length must be nonnegative");
  for (std::size_t i = 0; i < spikes_.size(); ++i) {
    if (!(spikes_[i] >= 0.0 && spikes_[i] <= length))
      throw DomainError("spike at " + format_number(spikes_[i]) + " outside [0, " + format_number(length) + "]");
    if (i > 0 && !(spikes_[i] > spikes_[i - 1])) throw DomainError("spikes must be strictly increasing");
  }
}

TimeWindow night_window(int first_night, int n_nights) {
  return {first_night + 0.5, first_night + n_nights + 0.5};
}

double spike_train_length(const Cohort& cohort) { return cohort.n_days() + 1.0; }

SpikeTrain to_spike_train(const Cohort& cohort, std::string_view user) {
  const std::size_t u = cohort.user_index(user);
  std::vector<double> spikes;
  for (int d = 0; d < cohort.n_days(); ++d) {
    const Measurements* m = cohort.find(u, d);
    if (!m || !m->sleep_onset) continue;
    const double t = d + m->sleep_onset->absolute_minutes() / kMinutesPerDay;
    if (!spikes.empty() && t <= spikes.back()) continue;
    spikes.push_back(t);
  }
  return SpikeTrain(std::move(spikes), spike_train_length(cohort));
}

int event_day_index(const Cohort& cohort, Date date, int before_days, int after_days) {
  const int e = cohort.interval().index_of(date);
  if (e - before_days < 0 || e + after_days > cohort.n_days())
    throw DomainError("window around " + date.iso() + " (" + std::to_string(before_days) + " days before, " +
                      std::to_string(after_days) + " after) leaves the cohort interval");
  return e;
}

std::vector<std::string> filter_complete_trains(const Cohort& cohort, const EventSpec& event) {
  if (event.alpha_days < 1) throw DomainError("alpha_days must be positive");
  const int e = event_day_index(cohort, event.date, event.alpha_days, event.alpha_days);
  std::vector<std::string> out;
  for (std::size_t u = 0; u < cohort.n_users(); ++u) {
    bool complete = true;
    for (int night = e - event.alpha_days; night < e + event.alpha_days && complete; ++night) {
      const Measurements* m = cohort.find(u, night);
      if (!m || !m->sleep_onset) {
        complete = false;
        break;
      }
      const double t = night + m->sleep_onset->absolute_minutes() / kMinutesPerDay;
      const TimeWindow slot = night_window(night, 1);
      complete = t >= slot.begin && t < slot.end;
    }
    if (complete) out.push_back(cohort.users()[u]);
  }
  return out;
}

DailySeries to_daily_series(const Cohort& cohort, std::string_view user, Activity activity) {
  const std::size_t u = cohort.user_index(user);
  DailySeries s{cohort.interval().first, {}};
  s.values.resize(static_cast<std::size_t>(cohort.n_days()));
  for (int d = 0; d < cohort.n_days(); ++d)
    if (const Measurements* m = cohort.find(u, d)) s.values[static_cast<std::size_t>(d)] = m->value(activity);
  return s;
}

}  // namespace biorhythm
