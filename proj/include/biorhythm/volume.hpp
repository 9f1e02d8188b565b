#pragma once

#include <optional>
#include <vector>

#include "biorhythm/data_model.hpp"

namespace biorhythm {

/// Daily population mean of one activity.
struct PopulationSeries {
  Date start;
  std::vector<std::optional<double>> mean;          // empty when no user measured the day
  std::vector<std::optional<double>> ci_halfwidth;  // 1.96 standard errors; empty when n < 2
  std::vector<std::size_t> n;

  std::size_t size() const { return mean.size(); }
};

/// Mean over the users that measured each day (not over the whole cohort).
PopulationSeries population_volume(const Cohort& cohort, Activity activity);

/// Mean of the daily population mean over [t - alpha, t + alpha].
double event_volume_summary(const PopulationSeries& series, Date event_date, int alpha_days);
double event_volume_summary(const Cohort& cohort, Activity activity, const EventSpec& event);

}  // namespace biorhythm
