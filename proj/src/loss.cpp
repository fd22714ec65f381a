#include "meso/loss.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "meso/fft.hpp"

namespace meso {

using cplx = std::complex<double>;

void MssConfig::validate() const {
  if (min_exponent < 1 || max_exponent < min_exponent || max_exponent > 20)
    throw ConfigurationError("mss: need 1 <= min_exponent <= max_exponent <= 20");
  if (hop_divisor < 1) throw ConfigurationError("mss: hop_divisor must be >= 1");
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "jtfs") return LossKind::Jtfs;
  if (s == "mss") return LossKind::Mss;
  throw ConfigurationError("unknown loss '" + s + "' (expected jtfs or mss)");
}

std::string to_string(LossKind k) { return k == LossKind::Jtfs ? "jtfs" : "mss"; }

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

DualRealArray stft_magnitude(const Signal& x, std::size_t window, std::size_t hop, std::size_t* frames) {
  if (window < 2 || hop < 1) throw ConfigurationError("stft: window >= 2 and hop >= 1 required");
  const std::size_t n = x.size();
  const std::size_t n_frames = 1 + n / hop;
  const std::size_t bins = window / 2 + 1;
  const auto w = hann_window(window);
  const long half = static_cast<long>(window / 2);
  double peak = 0.0;
  for (double v : x.samples.value()) peak = std::max(peak, std::abs(v));
  const double eps = kModulusFloor * (peak > 0.0 ? peak : 1.0);
  const double eps2 = eps * eps;

  DualRealArray out(n_frames * bins, x.samples.has_tangents());
  std::vector<AlignedVector<cplx>> spec(x.samples.lane_count(), AlignedVector<cplx>(bins));
  AlignedVector<double> seg(window);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const long start = static_cast<long>(f * hop) - half;
    for (std::size_t lane = 0; lane < x.samples.lane_count(); ++lane) {
      const auto src = x.samples.lane(lane);
      for (std::size_t i = 0; i < window; ++i) {
        const long j = start + static_cast<long>(i);
        seg[i] = j >= 0 && j < static_cast<long>(n) ? src[static_cast<std::size_t>(j)] * w[i] : 0.0;
      }
      fft::r2c(seg, spec[lane]);
    }
    auto m0 = out.lane(0).subspan(f * bins, bins);
    for (std::size_t k = 0; k < bins; ++k) m0[k] = std::sqrt(std::norm(spec[0][k]) + eps2);
    for (std::size_t lane = 1; lane < out.lane_count(); ++lane) {
      auto ml = out.lane(lane).subspan(f * bins, bins);
      for (std::size_t k = 0; k < bins; ++k)
        ml[k] = (spec[0][k].real() * spec[lane][k].real() + spec[0][k].imag() * spec[lane][k].imag()) / m0[k];
    }
  }
  if (frames) *frames = n_frames;
  return out;
}

LossValue l2_distance(const DualRealArray& target, const DualRealArray& pred) {
  if (target.size() != pred.size()) throw std::invalid_argument("l2_distance: size mismatch");
  LossValue out;
  const auto t = target.value(), p = pred.value();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = p[i] - t[i];
    out.value += d * d;
  }
  if (pred.has_tangents()) {
    for (std::size_t k = 0; k < 2; ++k) {
      const auto dp = pred.lane(k + 1);
      double g = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i) g += (p[i] - t[i]) * dp[i];
      out.gradient[k] = 2.0 * g;
    }
  }
  return out;
}

LossValue l1_distance(const DualRealArray& target, const DualRealArray& pred) {
  if (target.size() != pred.size()) throw std::invalid_argument("l1_distance: size mismatch");
  LossValue out;
  const auto t = target.value(), p = pred.value();
  for (std::size_t i = 0; i < t.size(); ++i) out.value += std::abs(p[i] - t[i]);
  if (pred.has_tangents()) {
    for (std::size_t k = 0; k < 2; ++k) {
      const auto dp = pred.lane(k + 1);
      double g = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double d = p[i] - t[i];
        if (d > 0.0) g += dp[i];
        else if (d < 0.0) g -= dp[i];
      }
      out.gradient[k] = g;
    }
  }
  return out;
}

double param_distance(const ThetaPoint& a, const ThetaPoint& b) {
  const double df = a.f_m - b.f_m, dg = a.gamma - b.gamma;
  return df * df + dg * dg;
}

Signal Objective::render(const ThetaPoint& theta, bool with_gradient, long tau) const {
  const auto duals = with_gradient ? DualTheta::seeded(theta) : DualTheta::constant(theta);
  auto x = arpeggio(duals, synth_);
  return tau == 0 ? x : time_shift(x, tau);
}

JtfsObjective::JtfsObjective(const ThetaPoint& target, long tau_target, long tau_pred,
                             const SynthConfig& synth, std::shared_ptr<const JtfsPlan> plan)
    : Objective(target, tau_target, tau_pred, synth), plan_(std::move(plan)) {
  if (!plan_) throw std::invalid_argument("JtfsObjective: missing plan");
  target_coeffs_ = jtfs(render(target, false, tau_target), *plan_).flatten();
}

LossValue JtfsObjective::evaluate(const ThetaPoint& pred, bool with_gradient) const {
  return l2_distance(target_coeffs_, jtfs(render(pred, with_gradient, tau_pred_), *plan_).flatten());
}

MssObjective::MssObjective(const ThetaPoint& target, long tau_target, long tau_pred,
                           const SynthConfig& synth, const MssConfig& mss)
    : Objective(target, tau_target, tau_pred, synth), mss_(mss) {
  mss_.validate();
  target_features_ = features(render(target, false, tau_target));
}

std::vector<DualRealArray> MssObjective::features(const Signal& x) const {
  std::vector<DualRealArray> out;
  for (int e = mss_.min_exponent; e <= mss_.max_exponent; ++e) {
    const std::size_t win = std::size_t{1} << e;
    out.push_back(stft_magnitude(x, win, std::max<std::size_t>(1, win / static_cast<std::size_t>(mss_.hop_divisor))));
  }
  return out;
}

LossValue MssObjective::evaluate(const ThetaPoint& pred, bool with_gradient) const {
  const auto f = features(render(pred, with_gradient, tau_pred_));
  LossValue out;
  for (std::size_t r = 0; r < f.size(); ++r) {
    auto d = l1_distance(target_features_[r], f[r]);
    if (mss_.reduction == L1Reduction::Mean) {
      const double n = static_cast<double>(f[r].size());
      d.value /= n;
      d.gradient[0] /= n;
      d.gradient[1] /= n;
    }
    out.value += d.value;
    out.gradient[0] += d.gradient[0];
    out.gradient[1] += d.gradient[1];
  }
  const double inv = 1.0 / static_cast<double>(f.size());
  out.value *= inv;
  out.gradient[0] *= inv;
  out.gradient[1] *= inv;
  return out;
}

LossValue jtfs_loss(const ThetaPoint& target, const ThetaPoint& pred, long tau_target, long tau_pred,
                    const SynthConfig& synth, const JtfsPlan& plan) {
  // Non-owning alias: the plan outlives this call.
  const std::shared_ptr<const JtfsPlan> alias(std::shared_ptr<const JtfsPlan>{}, &plan);
  return JtfsObjective(target, tau_target, tau_pred, synth, alias).evaluate(pred);
}

LossValue mss_loss(const ThetaPoint& target, const ThetaPoint& pred, long tau_target, long tau_pred,
                   const SynthConfig& synth, const MssConfig& mss) {
  return MssObjective(target, tau_target, tau_pred, synth, mss).evaluate(pred);
}

std::unique_ptr<Objective> make_objective(LossKind kind, const ThetaPoint& target, long tau_target,
                                          long tau_pred, const SynthConfig& synth,
                                          std::shared_ptr<const JtfsPlan> plan, const MssConfig& mss) {
  if (kind == LossKind::Mss) return std::make_unique<MssObjective>(target, tau_target, tau_pred, synth, mss);
  if (!plan) plan = std::make_shared<const JtfsPlan>(ScatteringConfig{}, synth.num_samples, synth.sample_rate);
  return std::make_unique<JtfsObjective>(target, tau_target, tau_pred, synth, std::move(plan));
}

}  // namespace meso
