#include "meso/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace meso {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }
}  // namespace

void SynthConfig::validate() const {
  if (!(sample_rate > 0.0)) throw std::invalid_argument("synth: sample_rate must be positive");
  if (!is_power_of_two(num_samples))
    throw std::invalid_argument("synth: num_samples must be a power of two");
  if (!(f_c > 0.0) || f_c >= sample_rate / 2)
    throw std::invalid_argument("synth: f_c must lie in (0, sample_rate/2)");
  if (!(w > 0.0)) throw std::invalid_argument("synth: w must be positive");
  if (event_range < 0) throw std::invalid_argument("synth: event_range must be >= 0");
  if (antialias_hi > 0.0 && !(antialias_lo >= 0.0 && antialias_lo < antialias_hi && antialias_hi <= 1.0))
    throw std::invalid_argument("synth: need 0 <= antialias_lo < antialias_hi <= 1");
  if (edge_taper < 0.0) throw std::invalid_argument("synth: edge_taper must be >= 0");
}

DualScalar chirplet_phase(const DualScalar& t, double f_c, const DualScalar& gamma) {
  if (!(gamma.value > 0.0)) throw NumericDomainError("chirplet_phase");
  return DualScalar(f_c) / (gamma * std::numbers::ln2) * pow2(gamma * t);
}

DualScalar chirplet_amp(const DualScalar& t, const DualScalar& f_m) {
  const DualScalar u = f_m * t;
  if (u.value < 0.0 || u.value >= 0.5) return DualScalar(0.0);
  return sin(kTwoPi * u);
}

DualScalar chirplet_amp(const DualScalar& t, const DualScalar& f_m, AmShape shape) {
  const DualScalar a = chirplet_amp(t, f_m);
  return shape == AmShape::HalfSine ? a : a * a;
}

double event_count(const ThetaPoint& theta, double w) {
  if (!theta.valid()) throw NumericDomainError("event_count");
  return theta.f_m * w / theta.gamma;
}

long default_event_range(const ThetaPoint& theta, double w) {
  // Events further than 4.3 envelope deviations away carry < 1e-4 of the peak.
  return static_cast<long>(std::ceil(4.3 * event_count(theta, w))) + 2;
}

Signal arpeggio(const DualTheta& theta, const SynthConfig& cfg) {
  cfg.validate();
  const ThetaPoint primal{theta.f_m.value, theta.gamma.value};
  if (!primal.valid()) throw NumericDomainError("arpeggio");

  const long range = cfg.event_range > 0 ? cfg.event_range : default_event_range(primal, cfg.w);
  const std::size_t n = cfg.num_samples;
  const double centre = static_cast<double>(n / 2);
  const DualScalar& f_m = theta.f_m;
  const DualScalar& gamma = theta.gamma;
  const DualScalar inv_gamma = DualScalar(1.0) / gamma;
  const double two_w2 = 2.0 * cfg.w * cfg.w;

  Signal out{DualRealArray(n, theta.has_tangents()), cfg.sample_rate};
  const double nyquist = cfg.sample_rate / 2.0;
  const double taper_len = cfg.edge_taper * cfg.sample_rate;
  DualScalar peak;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) - centre) / cfg.sample_rate;
    // At most one event is active at t: its half-sine starts at n / f_m.
    const double cycles = f_m.value * t;
    const long event = static_cast<long>(std::floor(cycles));
    if (event < -range || event > range) continue;
    const double frac = cycles - static_cast<double>(event);
    if (frac > 0.5) continue;

    const DualScalar onset = DualScalar(static_cast<double>(event)) / f_m;
    const DualScalar local = DualScalar(t) - onset;
    DualScalar amp = chirplet_amp(local, f_m, cfg.am_shape);
    if (frac == 0.0 || frac == 0.5) {
      // A sample on an event edge is a kink in theta: use the mean of the
      // one-sided derivatives (zero outside the event).
      DualScalar inside = sin(kTwoPi * (f_m * local));
      if (cfg.am_shape == AmShape::SineSquared) inside = inside * inside;
      amp = DualScalar(0.0, {0.5 * inside.tangent[0], 0.5 * inside.tangent[1]});
    }
    if (amp.value == 0.0 && amp.is_constant()) continue;
    const DualScalar u = gamma * t;
    DualScalar gain = inv_gamma * exp(-(u * u) / two_w2) * amp;
    if (taper_len > 0.0) {
      const double edge = std::min(static_cast<double>(i), static_cast<double>(n - 1 - i));
      if (edge < taper_len) gain *= DualScalar(0.5 - 0.5 * std::cos(std::numbers::pi * edge / taper_len));
    }
    if (std::abs(gain.value) > std::abs(peak.value)) peak = gain;
    if (cfg.antialias_hi > 0.0) {
      const DualScalar f_inst = cfg.f_c * pow2(u);
      const double lo = cfg.antialias_lo * nyquist, hi = cfg.antialias_hi * nyquist;
      if (f_inst.value >= hi) continue;
      if (f_inst.value > lo) gain *= 0.5 + 0.5 * cos(std::numbers::pi * (f_inst - lo) / DualScalar(hi - lo));
    }
    const DualScalar phase = pow2(gamma * onset) * chirplet_phase(local, cfg.f_c, gamma);
    set(out.samples, i, gain * cos(kTwoPi * phase));
  }
  if (cfg.normalization == Normalization::Energy) return normalize(out, Normalization::Energy);
  if (peak.value == 0.0) throw DegenerateSignalError("arpeggio: all-zero signal");
  const DualScalar inv = DualScalar(1.0) / (peak.value < 0.0 ? -peak : peak);
  for (std::size_t i = 0; i < n; ++i) set(out.samples, i, at(out.samples, i) * inv);
  return out;
}

Signal normalize(const Signal& x, Normalization mode) {
  const auto v = x.samples.value();
  DualScalar scale;
  if (mode == Normalization::Peak) {
    std::size_t peak = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (std::abs(v[i]) > std::abs(v[peak])) peak = i;
    if (v.empty() || v[peak] == 0.0) throw DegenerateSignalError("normalize: all-zero signal");
    scale = at(x.samples, peak);
    if (scale.value < 0.0) scale = -scale;
  } else {
    DualScalar energy;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const DualScalar s = at(x.samples, i);
      energy += s * s;
    }
    if (energy.value == 0.0) throw DegenerateSignalError("normalize: all-zero signal");
    scale = sqrt(energy / DualScalar(static_cast<double>(v.size())));
  }

  Signal out{DualRealArray(x.size(), x.samples.has_tangents()), x.sample_rate};
  const DualScalar inv = DualScalar(1.0) / scale;
  for (std::size_t i = 0; i < x.size(); ++i) set(out.samples, i, at(x.samples, i) * inv);
  return out;
}

Signal time_shift(const Signal& x, long tau) {
  const long n = static_cast<long>(x.size());
  if (std::labs(tau) >= n) throw std::out_of_range("time_shift: |tau| must be < num_samples");
  Signal out{DualRealArray(x.size(), x.samples.has_tangents()), x.sample_rate};
  for (std::size_t k = 0; k < x.samples.lane_count(); ++k) {
    auto src = x.samples.lane(k);
    auto dst = out.samples.lane(k);
    if (tau >= 0)
      std::copy(src.begin(), src.end() - tau, dst.begin() + tau);
    else
      std::copy(src.begin() - tau, src.end(), dst.begin());
  }
  return out;
}

}  // namespace meso
