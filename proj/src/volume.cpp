#include "biorhythm/volume.hpp"

#include <cmath>

#include "biorhythm/errors.hpp"
#include "biorhythm/stats.hpp"

namespace biorhythm {

PopulationSeries population_volume(const Cohort& cohort, Activity activity) {
  if (cohort.empty()) throw DomainError("population volume of an empty cohort");
  PopulationSeries out;
  out.start = cohort.interval().first;
  const auto n_days = static_cast<std::size_t>(cohort.n_days());
  out.mean.resize(n_days);
  out.ci_halfwidth.resize(n_days);
  out.n.resize(n_days);

  std::vector<double> day_values;
  for (int d = 0; d < cohort.n_days(); ++d) {
    day_values.clear();
    for (std::size_t u = 0; u < cohort.n_users(); ++u)
      if (const Measurements* m = cohort.find(u, d))
        if (auto v = m->value(activity)) day_values.push_back(*v);
    const auto i = static_cast<std::size_t>(d);
    out.n[i] = day_values.size();
    if (day_values.empty()) continue;
    out.mean[i] = stats::mean(day_values);
    if (auto se = stats::standard_error(day_values)) out.ci_halfwidth[i] = 1.96 * *se;
  }
  return out;
}

double event_volume_summary(const PopulationSeries& series, Date event_date, int alpha_days) {
  if (alpha_days < 0) throw DomainError("alpha_days must be nonnegative");
  const int e = event_date - series.start;
  if (e - alpha_days < 0 || e + alpha_days >= static_cast<int>(series.size()))
    throw DomainError("volume window around " + event_date.iso() + " leaves the cohort interval");
  std::vector<double> vals;
  for (int d = e - alpha_days; d <= e + alpha_days; ++d)
    if (const auto& m = series.mean[static_cast<std::size_t>(d)]) vals.push_back(*m);
  if (vals.empty()) throw InsufficientDataError("no measurements around " + event_date.iso());
  return stats::mean(vals);
}

double event_volume_summary(const Cohort& cohort, Activity activity, const EventSpec& event) {
  return event_volume_summary(population_volume(cohort, activity), event.date, event.alpha_days);
}

}  // namespace biorhythm
