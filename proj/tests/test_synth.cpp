#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "meso/synth.hpp"

using namespace meso;

TEST_CASE("chirplet phase values") {
  CHECK(chirplet_phase(0.0, 512.0, 1.0).value == doctest::Approx(738.66).epsilon(1e-4));
  CHECK(chirplet_phase(1.0, 512.0, 1.0).value == doctest::Approx(1477.32).epsilon(1e-4));
  CHECK_THROWS_AS(chirplet_phase(0.0, 512.0, 0.0), NumericDomainError);
}

TEST_CASE("instantaneous frequency at onset equals f_c") {
  const double h = 1e-6;
  for (double g : {0.5, 1.0, 1.49, 2.0, 4.0}) {
    const double f = (chirplet_phase(h, 512.0, g).value - chirplet_phase(-h, 512.0, g).value) / (2 * h);
    CHECK(std::abs(f / 512.0 - 1.0) < 1e-3);
  }
}

TEST_CASE("half-sine amplitude support") {
  const double fm = 8.0;
  CHECK(chirplet_amp(1.0 / (4 * fm), fm).value == doctest::Approx(1.0));
  CHECK(chirplet_amp(-0.01, fm).value == 0.0);
  CHECK(chirplet_amp(1.0 / (2 * fm), fm).value == 0.0);
  CHECK(chirplet_amp(1.0 / (8 * fm), fm, AmShape::SineSquared).value == doctest::Approx(0.5));
}

TEST_CASE("event count") {
  CHECK(event_count({8, 2}, 2.0) == doctest::Approx(8.0));
  CHECK(event_count({4, 4}, 2.0) == doctest::Approx(2.0));
  CHECK(event_count({16, 0.5}, 2.0) == doctest::Approx(64.0));
  CHECK_THROWS_AS(event_count({1, 0}, 2.0), NumericDomainError);
}

TEST_CASE("arpeggio is finite and bounded on the grid corners") {
  SynthConfig cfg;
  for (ThetaPoint t : {ThetaPoint{4, 0.5}, ThetaPoint{4, 4}, ThetaPoint{16, 0.5}, ThetaPoint{16, 4}, ThetaPoint{8.49, 1.49}}) {
    const auto x = arpeggio(DualTheta::seeded(t), cfg);
    REQUIRE(x.size() == cfg.num_samples);
    double peak = 0.0;
    for (std::size_t k = 0; k < 3; ++k)
      for (double v : x.samples.lane(k)) REQUIRE(std::isfinite(v));
    for (double v : x.samples.value()) peak = std::max(peak, std::abs(v));
    CHECK(peak <= 1.0 + 1e-12);
    CHECK(peak > 0.95);
  }
  CHECK_THROWS_AS(arpeggio(DualTheta::constant({8, 0}), cfg), NumericDomainError);
}

TEST_CASE("arpeggio tangents match central differences per sample") {
  // The carrier phase moves by thousands of radians per unit of gamma, so the
  // difference step must resolve it: h = 1e-7.
  SynthConfig cfg;
  const ThetaPoint t{8.49, 1.49};
  const auto x = arpeggio(DualTheta::seeded(t), cfg);
  const double h = 1e-7;
  const auto up0 = arpeggio(DualTheta::constant({t.f_m + h, t.gamma}), cfg);
  const auto dn0 = arpeggio(DualTheta::constant({t.f_m - h, t.gamma}), cfg);
  const auto up1 = arpeggio(DualTheta::constant({t.f_m, t.gamma + h}), cfg);
  const auto dn1 = arpeggio(DualTheta::constant({t.f_m, t.gamma - h}), cfg);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(cfg.num_samples / 4, 3 * cfg.num_samples / 4);
  double num0 = 0, den0 = 0, num1 = 0, den1 = 0;
  for (int k = 0; k < 100; ++k) {
    const auto i = pick(rng);
    const double fd0 = (up0.samples.value()[i] - dn0.samples.value()[i]) / (2 * h);
    const double fd1 = (up1.samples.value()[i] - dn1.samples.value()[i]) / (2 * h);
    num0 += std::pow(fd0 - x.samples.lane(1)[i], 2);
    den0 += fd0 * fd0;
    num1 += std::pow(fd1 - x.samples.lane(2)[i], 2);
    den1 += fd1 * fd1;
  }
  CHECK(std::sqrt(num0 / den0) < 1e-3);
  CHECK(std::sqrt(num1 / den1) < 1e-3);
}

TEST_CASE("samples on event edges take the mean one-sided derivative") {
  // f_m = 6: t = 1.75 s ends event 10 exactly on a sample.
  SynthConfig cfg;
  const ThetaPoint t{6.0, 1.0};
  const std::size_t i = cfg.num_samples / 2 + 14336;
  const auto x = arpeggio(DualTheta::seeded(t), cfg);
  const double h = 1e-7;
  const double fd = (arpeggio(DualTheta::constant({t.f_m + h, t.gamma}), cfg).samples.value()[i] -
                     arpeggio(DualTheta::constant({t.f_m - h, t.gamma}), cfg).samples.value()[i]) / (2 * h);
  CHECK(x.samples.value()[i] == 0.0);
  CHECK(fd != 0.0);
  CHECK(x.samples.lane(1)[i] == doctest::Approx(fd).epsilon(1e-4));
}

TEST_CASE("normalize") {
  Signal c{DualRealArray(8, false), 8192.0};
  for (auto& v : c.samples.lane(0)) v = 0.5;
  const auto n = normalize(c);
  for (double v : n.samples.value()) CHECK(v == doctest::Approx(1.0));
  const auto again = normalize(n);
  for (std::size_t i = 0; i < 8; ++i) CHECK(again.samples.value()[i] == n.samples.value()[i]);
  Signal z{DualRealArray(8, false), 8192.0};
  CHECK_THROWS_AS(normalize(z), DegenerateSignalError);
  CHECK_THROWS_AS(normalize(z, Normalization::Energy), DegenerateSignalError);
}

TEST_CASE("normalize tangents follow the quotient rule") {
  // x_i(a, b) = (i + 1) * a + sin(i) * b, normalized by its peak sample.
  const auto make = [](double a, double b, bool seeded) {
    Signal s{DualRealArray(6, seeded), 1.0};
    for (std::size_t i = 0; i < 6; ++i)
      set(s.samples, i, (seeded ? lift(a, 0) : lift(a)) * double(i + 1) + (seeded ? lift(b, 1) : lift(b)) * std::sin(double(i)));
    return s;
  };
  const auto x = normalize(make(1.3, 0.4, true));
  const double h = 1e-6;
  for (std::size_t i = 0; i < 6; ++i) {
    const double fd0 = (normalize(make(1.3 + h, 0.4, false)).samples.value()[i] - normalize(make(1.3 - h, 0.4, false)).samples.value()[i]) / (2 * h);
    const double fd1 = (normalize(make(1.3, 0.4 + h, false)).samples.value()[i] - normalize(make(1.3, 0.4 - h, false)).samples.value()[i]) / (2 * h);
    CHECK(x.samples.lane(1)[i] == doctest::Approx(fd0).epsilon(1e-6));
    CHECK(x.samples.lane(2)[i] == doctest::Approx(fd1).epsilon(1e-6));
  }
}

TEST_CASE("time shift") {
  SynthConfig cfg;
  const auto x = arpeggio(DualTheta::constant({8.49, 1.49}), cfg);
  const auto same = time_shift(x, 0);
  CHECK(std::equal(same.samples.value().begin(), same.samples.value().end(), x.samples.value().begin()));
  const auto y = time_shift(time_shift(x, 1024), -1024);
  double diff = 0;
  for (std::size_t i = 0; i + 1024 < x.size(); ++i)
    diff = std::max(diff, std::abs(y.samples.value()[i] - x.samples.value()[i]));
  CHECK(diff == 0.0);
  CHECK_THROWS_AS(time_shift(x, static_cast<long>(x.size())), std::out_of_range);
}

TEST_CASE("time shift preserves energy when the support stays inside") {
  SynthConfig cfg;
  const auto x = arpeggio(DualTheta::constant({8.49, 1.49}), cfg);
  const auto y = time_shift(x, 1024);
  double e0 = 0, e1 = 0;
  for (double v : x.samples.value()) e0 += v * v;
  for (double v : y.samples.value()) e1 += v * v;
  CHECK(e1 == doctest::Approx(e0).epsilon(1e-9));
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.num_samples = 1000;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.f_c = 5000;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
