#pragma once

// Differentiable chirplet arpeggiator.
//
// An arpeggio is a train of half-sine amplitude events at rate f_m whose
// carrier glides upward at gamma octaves per second, under a Gaussian global
// envelope spanning w octaves. theta = (f_m, gamma) is the parameter pair
// recovered by sound matching.

#include <cstddef>
#include <filesystem>
#include <stdexcept>

#include "meso/dual.hpp"

namespace meso {

struct ThetaPoint {
  double f_m = 0.0;    ///< AM frequency, Hz
  double gamma = 0.0;  ///< chirp rate, octaves per second

  bool valid() const { return f_m > 0.0 && gamma > 0.0; }
  Tangent as_array() const { return {f_m, gamma}; }
  static ThetaPoint from_array(const Tangent& a) { return {a[0], a[1]}; }
  friend bool operator==(const ThetaPoint&, const ThetaPoint&) = default;
};

/// theta as duals: f_m seeds tangent 0, gamma seeds tangent 1.
struct DualTheta {
  DualScalar f_m;
  DualScalar gamma;

  static DualTheta seeded(const ThetaPoint& t) { return {lift(t.f_m, 0), lift(t.gamma, 1)}; }
  static DualTheta constant(const ThetaPoint& t) { return {lift(t.f_m), lift(t.gamma)}; }
  bool has_tangents() const { return !f_m.is_constant() || !gamma.is_constant(); }
};

enum class Normalization { Peak, Energy };

/// Event amplitude shape over its half period: sin (as in the model) or sin^2,
/// whose zero-slope edges keep the rendered signal smooth in theta.
enum class AmShape { HalfSine, SineSquared };

struct SynthConfig {
  double f_c = 512.0;            ///< onset frequency of the chirplet at t = 0, Hz
  double w = 2.0;                ///< envelope width, octaves
  double sample_rate = 8192.0;   ///< Hz
  std::size_t num_samples = 1u << 16;
  /// Half-width of the event summation; 0 selects it from event_count().
  long event_range = 0;
  Normalization normalization = Normalization::Peak;
  AmShape am_shape = AmShape::HalfSine;
  /// Carrier gain fades to zero (raised cosine in instantaneous frequency)
  /// between these fractions of Nyquist; a zero upper bound disables it.
  double antialias_lo = 0.7;
  double antialias_hi = 0.9;
  /// Hann fade-in/out at both buffer ends, seconds; 0 disables it.
  double edge_taper = 0.25;

  void validate() const;
};

/// Uniformly sampled waveform with dual lanes.
struct Signal {
  DualRealArray samples;
  double sample_rate = 8192.0;

  std::size_t size() const { return samples.size(); }
};

class DegenerateSignalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// phi(t) = f_c / (gamma log 2) * 2^(gamma t); its time derivative is the
/// instantaneous frequency f_c 2^(gamma t).
DualScalar chirplet_phase(const DualScalar& t, double f_c, const DualScalar& gamma);

/// Half-period sine: sin(2 pi f_m t) for 0 <= f_m t < 1/2, zero elsewhere.
DualScalar chirplet_amp(const DualScalar& t, const DualScalar& f_m);
DualScalar chirplet_amp(const DualScalar& t, const DualScalar& f_m, AmShape shape);

/// Number of events carrying non-negligible energy, f_m w / gamma.
double event_count(const ThetaPoint& theta, double w);

/// Summation half-width used by arpeggio() when cfg.event_range is 0.
long default_event_range(const ThetaPoint& theta, double w);

/// Renders the arpeggio with t = 0 at the buffer centre, then normalizes it.
/// Peak normalization divides by the largest sampled value of the
/// carrier-free amplitude, so the scale does not depend on carrier phase.
Signal arpeggio(const DualTheta& theta, const SynthConfig& cfg);

/// Scales the signal so the peak magnitude (or RMS, for Energy) equals 1.
Signal normalize(const Signal& x, Normalization mode = Normalization::Peak);

/// Delays by tau samples (negative advances) with zero fill; length preserved.
Signal time_shift(const Signal& x, long tau);

}  // namespace meso
