#include "biorhythm/rhythm.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "biorhythm/errors.hpp"
#include "biorhythm/simulator.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace biorhythm;

namespace {

std::vector<double> sinusoid(int n, double period, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = amp * std::sin(2 * std::numbers::pi * i / period + phase);
  return x;
}

DailySeries series_of(const std::vector<double>& x) {
  DailySeries s{Date::from_ymd(2016, 1, 1), {}};
  for (double v : x) s.values.emplace_back(v);
  return s;
}

/// Distance between `p` and `target` in bins of the representable period grid.
int bin_distance(double p, double target, int seg = 14) {
  const auto periods = representable_periods(seg);
  auto nearest = [&](double x) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < periods.size(); ++k)
      if (std::fabs(periods[k] - x) < std::fabs(periods[best] - x)) best = k;
    return static_cast<int>(best);
  };
  return std::abs(nearest(p) - nearest(target));
}

}  // namespace

TEST_CASE("PSD matches the textbook oracle") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int len : {14, 28, 41, 56})
    for (bool linear : {false, true}) {
      std::vector<double> x(static_cast<std::size_t>(len));
      for (auto& v : x) v = n(rng) + 0.05 * (&v - x.data());
      WelchConfig cfg;
      cfg.detrend = linear ? Detrend::linear : Detrend::constant;
      const auto psd = welch_psd(x, cfg);
      const auto want = oracle::welch(x, 14, 0.5, linear);
      REQUIRE(psd.power.size() == want.size());
      for (std::size_t k = 0; k < want.size(); ++k) CHECK(psd.power[k] == doctest::Approx(want[k]).epsilon(1e-10));
    }
}

TEST_CASE("periods are the segment's harmonics") {
  const auto p = representable_periods(14);
  REQUIRE(p.size() == 7);
  CHECK(p.front() == 14.0);
  CHECK(p[1] == 7.0);
  CHECK(p.back() == 2.0);
  CHECK(welch_psd(sinusoid(28, 7)).periods == p);
}

TEST_CASE("Parseval: white-noise density integrates to the variance") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<double> x(7000);
  for (auto& v : x) v = n(rng);
  WelchConfig cfg;
  cfg.detrend = Detrend::constant;
  const auto psd = welch_psd(x, cfg);
  double total = 0.0;
  for (double p : psd.power) total += p / 14.0;  // frequency spacing 1/14 per day
  CHECK(total == doctest::Approx(4.0).epsilon(0.08));
}

TEST_CASE("single tones and mixtures") {
  CHECK(dominant_period(welch_psd(sinusoid(56, 7))) == 7.0);
  auto mix = sinusoid(56, 7, 2.0);
  const auto fast = sinusoid(56, 3.5, 1.0);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += fast[i];
  CHECK(dominant_period(welch_psd(mix)) == 7.0);
  // 9.333 days is not representable and sits midway (in frequency) between the
  // 14- and 7-day bins; either neighbour is nearest.
  const double p = dominant_period(welch_psd(sinusoid(56, 9.333)));
  CHECK(std::fabs(1.0 / p - 1.0 / 9.333) <= 0.5 / 14.0 + 1e-3);
}

TEST_CASE("constant series has a flat, near-zero spectrum") {
  const std::vector<double> c(28, 1234.5);
  for (auto d : {Detrend::constant, Detrend::linear}) {
    WelchConfig cfg;
    cfg.detrend = d;
    for (double p : welch_psd(c, cfg).power) CHECK(p < 1e-10 * 1234.5 * 1234.5);
  }
}

TEST_CASE("weekly step pattern") {
  DailySeries s{Date::from_ymd(2016, 6, 6), {}};  // a Monday
  for (int d = 0; d < 28; ++d) s.values.emplace_back((s.start + d).is_weekend() ? 4000.0 : 7000.0);
  CHECK(characteristic_rhythm(s, {0, 28}) == 7.0);
}

TEST_CASE("period recovery at SNR 10") {
  for (double period : {3.0, 7.0, 14.0}) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> ph(0.0, 2 * std::numbers::pi);
      // SNR = signal power / noise power = (A^2 / 2) / sigma^2.
      auto x = sinusoid(28, period, std::sqrt(20.0), ph(rng));
      std::normal_distribution<double> n(0.0, 1.0);
      for (auto& v : x) v += n(rng);
      hits += bin_distance(characteristic_rhythm(series_of(x), {0, 28}), period) <= 1;
    }
    CHECK(hits == 100);
  }
}

TEST_CASE("white noise is deterministic") {
  std::mt19937_64 a(4), b(4);
  std::normal_distribution<double> n;
  std::vector<double> x(28), y(28);
  for (auto& v : x) v = n(a);
  for (auto& v : y) v = n(b);
  CHECK(welch_psd(x).power == welch_psd(y).power);
}

TEST_CASE("argmax ties go to the smaller period") {
  PsdEstimate psd{{14, 7, 4.666}, {1.0, 3.0, 3.0}};
  CHECK(dominant_period(psd) == 4.666);
  CHECK_THROWS_AS(dominant_period(PsdEstimate{}), DomainError);
}

TEST_CASE("gap filling") {
  DailySeries s{Date::from_ymd(2016, 1, 1), {1.0, std::nullopt, std::nullopt, 4.0, 5.0, std::nullopt}};
  const auto f = fill_gaps(s, {0, 6}, 2);
  CHECK(f == std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0, 5.0});
  CHECK_THROWS_AS(fill_gaps(s, {0, 6}, 1), InsufficientDataError);
  DailySeries empty{Date::from_ymd(2016, 1, 1), std::vector<std::optional<double>>(20)};
  CHECK_THROWS_AS(fill_gaps(empty, {0, 20}, 2), DomainError);
  CHECK_THROWS_AS(fill_gaps(s, {0, 7}, 2), DomainError);
  CHECK_THROWS_AS(welch_psd(std::vector<double>(10, 0.0)), InsufficientDataError);
}

TEST_CASE("rhythm shift") {
  auto x = sinusoid(56, 7);
  CHECK(rhythm_shift_user(series_of(x), Date::from_ymd(2016, 1, 29)) == 0.0);

  auto before = sinusoid(28, 7), after = sinusoid(28, 3.5);
  std::vector<double> sw(before);
  sw.insert(sw.end(), after.begin(), after.end());
  const double shift = rhythm_shift_user(series_of(sw), Date::from_ymd(2016, 1, 29));
  CHECK(std::fabs(shift + 3.5) <= default_binning({}).bin_width + 1e-9);

  // Swapping the windows negates the shift exactly.
  std::vector<double> rev(after);
  rev.insert(rev.end(), before.begin(), before.end());
  CHECK(rhythm_shift_user(series_of(rev), Date::from_ymd(2016, 1, 29)) == -shift);
  CHECK_THROWS_AS(rhythm_shift_user(series_of(sw), Date::from_ymd(2016, 1, 20)), DomainError);
}

TEST_CASE("noise-only users shift around zero") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(50.0, 3.0);
  double total = 0.0;
  const int users = 400;
  for (int u = 0; u < users; ++u) {
    std::vector<double> x(56);
    for (auto& v : x) v = n(rng);
    total += rhythm_shift_user(series_of(x), Date::from_ymd(2016, 1, 29));
  }
  CHECK(std::fabs(total / users) < 1.0 / 3.0);
}

TEST_CASE("shift histogram") {
  const ShiftBinning b{1.0, 3.0};
  const auto zero = shift_distribution(std::vector<double>(10, 0.0), b, 1e-9);
  CHECK(zero.probabilities.size() == 7);
  CHECK(zero.probabilities[3] == doctest::Approx(1.0));
  CHECK(zero.bin_edges.front() == -3.5);
  CHECK(zero.bin_width() == 1.0);

  const auto three = shift_distribution(std::vector<double>{-1, 0, 1}, {1.0, 1.0}, 1e-9);
  for (double p : three.probabilities) CHECK(p == doctest::Approx(1.0 / 3.0));
  double s = 0.0;
  for (double p : three.probabilities) s += p;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_NOTHROW(shift_distribution(std::vector<double>{-1, 0, 1}, {1.0, 1.0}, 0.0));
  CHECK_THROWS_AS(shift_distribution(std::vector<double>{0, 1}, {1.0, 1.0}, 0.0), DomainError);
  CHECK_THROWS_AS(shift_distribution({}, b, 1e-9), DomainError);
  // Out-of-range shifts land in the end bins.
  CHECK(shift_distribution(std::vector<double>{50.0}, b, 1e-9).probabilities.back() > 0.99);
}

TEST_CASE("default binning uses the finest period gap") {
  const auto b = default_binning({});
  CHECK(b.bin_width == doctest::Approx(14.0 / 6.0 - 2.0));
  CHECK(b.half_range == 12.0);
  RhythmConfig c;
  c.bin_width_days = 0.5;
  CHECK(default_binning(c).bin_width == 0.5);
}

TEST_CASE("KL divergence") {
  const std::vector<double> p{0.5, 0.3, 0.2}, q{0.2, 0.3, 0.5};
  CHECK(kl_divergence(p, q) == doctest::Approx(0.5 * std::log(2.5) + 0.2 * std::log(0.4)));
  CHECK(kl_divergence(p, q) == doctest::Approx(0.274887).epsilon(1e-6));
  CHECK(kl_divergence(p, p) == 0.0);
  CHECK_THROWS_AS(kl_divergence(p, std::vector<double>{0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(kl_divergence(p, std::vector<double>{0.5, 0.5, 0.0}), DomainError);
  CHECK(kl_divergence(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5, 0.5}) == doctest::Approx(std::log(2.0)));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(6), b(6);
    double sa = 0, sb = 0;
    for (int i = 0; i < 6; ++i) sa += a[i] = u(rng), sb += b[i] = u(rng) + 1e-3;
    for (int i = 0; i < 6; ++i) a[i] /= sa, b[i] /= sb;
    CHECK(kl_divergence(a, b) >= 0.0);
    CHECK(kl_divergence(a, b) == doctest::Approx(oracle::kl(a, b)).epsilon(1e-9).scale(1e-12));
  }
}

TEST_CASE("rhythm disruption needs shared edges") {
  const auto a = shift_distribution(std::vector<double>{0, 1}, {1.0, 2.0}, 1e-9);
  const auto b = shift_distribution(std::vector<double>{0, 1}, {0.5, 2.0}, 1e-9);
  CHECK(rhythm_disruption(a, a) == 0.0);
  CHECK_THROWS_AS(rhythm_disruption(a, b), DomainError);
}

TEST_CASE("rhythm table agrees with direct computation") {
  CohortSpec spec;
  spec.n_users = 6;
  spec.days = 90;
  spec.seed = 3;
  const Cohort c = generate_cohort(spec);
  RhythmConfig cfg;
  const RhythmTable table(c, Activity::steps, cfg);
  CHECK(table.n_users() == 6);
  const Date e = spec.start_date + 45;
  const auto pop = population_shifts(c, Activity::steps, e, cfg);
  std::vector<double> from_table;
  for (std::size_t u = 0; u < c.n_users(); ++u)
    if (auto s = table.shift(u, 45)) from_table.push_back(*s);
  CHECK(from_table == pop.shifts);
  CHECK(pop.n_users + pop.skipped.size() == 6);
  CHECK_FALSE(table.shift(0, 10));
  CHECK(table.fits(28));
  CHECK_FALSE(table.fits(63));
  CHECK_THROWS_AS(population_shifts(c, Activity::steps, spec.start_date + 10, cfg), DomainError);
  CHECK(mean_psd(c, Activity::steps, {0, 28}, cfg.welch));
}

TEST_CASE("config validation") {
  WelchConfig w;
  w.overlap_fraction = 1.0;
  CHECK_THROWS_AS(w.validate(), ConfigError);
  RhythmConfig r;
  r.window_days = 10;
  CHECK_THROWS_AS(r.validate(), ConfigError);
  CHECK_THROWS_AS(parse_detrend("quadratic"), ConfigError);
}
