#pragma once

// Small descriptive-statistics helpers shared by the metric modules.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "biorhythm/errors.hpp"

namespace biorhythm::stats {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Population standard deviation (divides by n).
inline double pop_sd(std::span<const double> xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

/// Sample standard deviation (divides by n - 1); empty when n < 2.
inline std::optional<double> sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) return std::nullopt;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Standard error of the mean; empty when n < 2.
inline std::optional<double> standard_error(std::span<const double> xs) {
  auto sd = sample_sd(xs);
  if (!sd) return std::nullopt;
  return *sd / std::sqrt(static_cast<double>(xs.size()));
}

inline double median(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("median of empty sample");
  std::vector<double> v(xs.begin(), xs.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

/// Linear-interpolation quantile, q in [0, 1].
inline double quantile(std::span<const double> xs, double q) {
  if (xs.empty()) throw DomainError("quantile of empty sample");
  if (q < 0.0 || q > 1.0) throw DomainError("quantile level outside [0, 1]");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace biorhythm::stats
