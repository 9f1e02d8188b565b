#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "biorhythm/data_model.hpp"

namespace fixtures {

using namespace biorhythm;

inline Date day0() { return Date::from_ymd(2016, 6, 1); }

inline Cohort cohort_from_csv(const std::string& body) {
  std::istringstream in(std::string(kCanonicalHeader) + "\n" + body);
  return parse_activity_csv(in).cohort;
}

/// One user with a bedtime at `onset_min` on each listed day.
inline std::vector<ActivityRecord> onsets(const std::string& user, Date start, const std::vector<int>& days,
                                          double onset_min) {
  std::vector<ActivityRecord> out;
  for (int d : days) {
    ActivityRecord r{user, start + d, {}};
    r.values.sleep_onset = SleepOnset{onset_min >= 1440 ? onset_min - 1440 : onset_min, onset_min >= 1440};
    out.push_back(r);
  }
  return out;
}

inline std::vector<int> range(int lo, int hi) {
  std::vector<int> v;
  for (int i = lo; i < hi; ++i) v.push_back(i);
  return v;
}

}  // namespace fixtures
