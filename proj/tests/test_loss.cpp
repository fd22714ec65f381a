#include <doctest.h>

#include <cmath>
#include <numbers>

#include "meso/loss.hpp"

using namespace meso;

namespace {

const SynthConfig kSynth;
const ThetaPoint kTarget{8.49, 1.49};

std::shared_ptr<const JtfsPlan> plan() {
  static const auto p = std::make_shared<const JtfsPlan>(ScatteringConfig{}, kSynth.num_samples, kSynth.sample_rate);
  return p;
}

double rel_err(const Tangent& a, const Tangent& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]) / std::hypot(b[0], b[1]);
}

}  // namespace

TEST_CASE("param distance") {
  CHECK(param_distance(kTarget, kTarget) == 0.0);
  CHECK(param_distance(kTarget, {4, 0.5}) == doctest::Approx(4.49 * 4.49 + 0.99 * 0.99));
  CHECK(param_distance(kTarget, {4, 0.5}) == doctest::Approx(21.14).epsilon(1e-3));
  CHECK(param_distance({4, 0.5}, kTarget) == param_distance(kTarget, {4, 0.5}));
}

TEST_CASE("loss kind names") {
  CHECK(parse_loss_kind("jtfs") == LossKind::Jtfs);
  CHECK(parse_loss_kind("mss") == LossKind::Mss);
  CHECK(to_string(LossKind::Mss) == "mss");
  CHECK_THROWS_AS(parse_loss_kind("l2"), ConfigurationError);
}

TEST_CASE("periodic hann and stft framing") {
  const auto w = hann_window(8);
  CHECK(w[0] == 0.0);
  CHECK(w[4] == doctest::Approx(1.0));
  CHECK(w[2] == doctest::Approx(0.5));
  Signal x{DualRealArray(1000, false), 8192.0};
  std::size_t frames = 0;
  const auto s = stft_magnitude(x, 64, 16, &frames);
  CHECK(frames == 1 + 1000 / 16);
  CHECK(s.size() == frames * 33);
  MssConfig mss;
  CHECK(mss.resolutions() == 6);
  mss.hop_divisor = 0;
  CHECK_THROWS_AS(mss.validate(), ConfigurationError);
}

TEST_CASE("stft magnitude of a tone") {
  // Bin-centred tone: magnitude sum(w)/2 in its bin away from the edges.
  Signal x{DualRealArray(4096, false), 8192.0};
  for (std::size_t i = 0; i < x.size(); ++i) x.samples.lane(0)[i] = std::cos(2 * std::numbers::pi * 8 * i / 64.0);
  std::size_t frames = 0;
  const auto s = stft_magnitude(x, 64, 16, &frames);
  CHECK(s.value()[10 * 33 + 8] == doctest::Approx(16.0).epsilon(1e-9));
}

TEST_CASE("l1 ties have zero derivative") {
  DualRealArray a(3, true), b(3, true);
  for (std::size_t i = 0; i < 3; ++i) {
    a.lane(0)[i] = b.lane(0)[i] = double(i);
    b.lane(1)[i] = 1.0;
    b.lane(2)[i] = -2.0;
  }
  const auto d = l1_distance(a, b);
  CHECK(d.value == 0.0);
  CHECK(d.gradient == Tangent{0.0, 0.0});
  b.lane(0)[1] = 5.0;
  const auto e = l1_distance(a, b);
  CHECK(e.value == doctest::Approx(4.0));
  CHECK(e.gradient == Tangent{1.0, -2.0});
}

TEST_CASE("identity and symmetry") {
  const ThetaPoint other{5.5, 2.2};
  const auto same = jtfs_loss(kTarget, kTarget, 0, 0, kSynth, *plan());
  CHECK(same.value < 1e-20);
  CHECK(std::hypot(same.gradient[0], same.gradient[1]) < 1e-9);
  CHECK(jtfs_loss(kTarget, other, 0, 0, kSynth, *plan()).value ==
        doctest::Approx(jtfs_loss(other, kTarget, 0, 0, kSynth, *plan()).value).epsilon(1e-12));

  CHECK(mss_loss(kTarget, kTarget, 0, 0, kSynth).value == 0.0);
  const double ab = mss_loss(kTarget, other, 0, 0, kSynth).value;
  CHECK(ab > 0.0);
  CHECK(ab == doctest::Approx(mss_loss(other, kTarget, 0, 0, kSynth).value).epsilon(1e-12));
}

TEST_CASE("jtfs shrugs off a shift that mss does not") {
  const auto jtfs_obj = make_objective(LossKind::Jtfs, kTarget, 0, 1024, kSynth, plan());
  const auto mss_obj = make_objective(LossKind::Mss, kTarget, 0, 1024, kSynth);
  const double j_shift = jtfs_obj->evaluate(kTarget, false).value;
  const double m_shift = mss_obj->evaluate(kTarget, false).value;
  // (16, 4) is the grid corner furthest from the target.
  CHECK(j_shift < 0.01 * jtfs_obj->evaluate({16, 4}, false).value);
  double m_max = 0.0;
  for (ThetaPoint c : {ThetaPoint{4, 0.5}, ThetaPoint{4, 4}, ThetaPoint{16, 0.5}, ThetaPoint{16, 4}})
    m_max = std::max(m_max, mss_obj->evaluate(c, false).value);
  CHECK(m_shift > 0.25 * m_max);
}

TEST_CASE("dual gradients are exact") {
  // Small steps: both surfaces carry carrier-phase ripple that a 1e-4 step
  // cannot resolve.
  const ThetaPoint p{6.0, 1.0};
  const auto jtfs_obj = make_objective(LossKind::Jtfs, kTarget, 0, 0, kSynth, plan());
  const auto g = jtfs_obj->evaluate(p).gradient;
  const auto fd = fd_oracle([&](const Tangent& t) { return jtfs_obj->evaluate(ThetaPoint::from_array(t), false).value; },
                            p.as_array(), 1e-6);
  CHECK(rel_err(g, fd) < 1e-3);

  const auto mss_obj = make_objective(LossKind::Mss, kTarget, 0, 0, kSynth);
  const auto gm = mss_obj->evaluate(p).gradient;
  const auto fdm = fd_oracle([&](const Tangent& t) { return mss_obj->evaluate(ThetaPoint::from_array(t), false).value; },
                             p.as_array(), 1e-8);
  CHECK(rel_err(gm, fdm) < 1e-3);
}

TEST_CASE("displaced chirps are closer than chirps of another rate") {
  const std::vector<double> gammas{0.5, 1.0, 1.49, 2.0, 4.0};
  for (double g : gammas) {
    const auto obj = make_objective(LossKind::Jtfs, {8.49, g}, 0, 1024, kSynth, plan());
    const auto overlap = make_objective(LossKind::Jtfs, {8.49, g}, 0, 0, kSynth, plan());
    const double displaced = obj->evaluate({8.49, g}, false).value;
    for (double other : gammas)
      if (other != g) CHECK(displaced < overlap->evaluate({8.49, other}, false).value);
  }
}

TEST_CASE("sum reduction scales by the entry count") {
  MssConfig sum;
  sum.reduction = L1Reduction::Sum;
  MssConfig one;
  one.min_exponent = one.max_exponent = 8;
  MssConfig one_sum = one;
  one_sum.reduction = L1Reduction::Sum;
  const ThetaPoint other{5.5, 2.2};
  const double mean = mss_loss(kTarget, other, 0, 0, kSynth, one).value;
  const double total = mss_loss(kTarget, other, 0, 0, kSynth, one_sum).value;
  const double entries = double(1 + kSynth.num_samples / 64) * 129.0;
  CHECK(total == doctest::Approx(mean * entries).epsilon(1e-12));
  CHECK(mss_loss(kTarget, other, 0, 0, kSynth, sum).value > mss_loss(kTarget, other, 0, 0, kSynth).value);
}
