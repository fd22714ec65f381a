#pragma once

// Distances between a target sound and a predicted one.
//
// Both sides are synthesized from parameters, time shifted, and mapped to a
// representation; the prediction carries dual tangents so a single pass gives
// the loss and its gradient with respect to (f_m, gamma).

#include <memory>
#include <string>
#include <vector>

#include "meso/dual.hpp"
#include "meso/scattering.hpp"
#include "meso/synth.hpp"

namespace meso {

struct LossValue {
  double value = 0.0;
  Tangent gradient{0.0, 0.0};
};

/// Per-resolution reduction of the entrywise absolute differences.
enum class L1Reduction { Mean, Sum };

struct MssConfig {
  int min_exponent = 5;  ///< smallest window 2^min_exponent
  int max_exponent = 10;
  int hop_divisor = 4;   ///< hop = window / hop_divisor
  L1Reduction reduction = L1Reduction::Mean;

  void validate() const;
  std::size_t resolutions() const { return static_cast<std::size_t>(max_exponent - min_exponent + 1); }
};

enum class LossKind { Jtfs, Mss };

LossKind parse_loss_kind(const std::string& s);
std::string to_string(LossKind k);

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

/// |STFT| with centred frames (zero padding of n/2 at both ends), one-sided,
/// row-major (frame, bin). Tangents follow the smoothed modulus.
DualRealArray stft_magnitude(const Signal& x, std::size_t window, std::size_t hop,
                             std::size_t* frames = nullptr);

/// Squared L2 distance; gradient taken from the tangents of `pred`.
LossValue l2_distance(const DualRealArray& target, const DualRealArray& pred);
/// L1 distance; the derivative of |u| at u = 0 is taken as 0.
LossValue l1_distance(const DualRealArray& target, const DualRealArray& pred);

/// Squared Euclidean distance in (Hz, octaves per second).
double param_distance(const ThetaPoint& a, const ThetaPoint& b);

/// Loss against a fixed target whose representation is computed once.
class Objective {
 public:
  virtual ~Objective() = default;
  /// Loss at `pred`; the gradient is filled only when requested.
  virtual LossValue evaluate(const ThetaPoint& pred, bool with_gradient = true) const = 0;
  virtual LossKind kind() const = 0;
  const ThetaPoint& target() const { return target_; }
  long tau_pred() const { return tau_pred_; }

 protected:
  Objective(const ThetaPoint& target, long tau_target, long tau_pred, const SynthConfig& synth)
      : target_(target), tau_target_(tau_target), tau_pred_(tau_pred), synth_(synth) {}
  Signal render(const ThetaPoint& theta, bool with_gradient, long tau) const;

  ThetaPoint target_;
  long tau_target_;
  long tau_pred_;
  SynthConfig synth_;
};

class JtfsObjective : public Objective {
 public:
  JtfsObjective(const ThetaPoint& target, long tau_target, long tau_pred, const SynthConfig& synth,
                std::shared_ptr<const JtfsPlan> plan);
  LossValue evaluate(const ThetaPoint& pred, bool with_gradient = true) const override;
  LossKind kind() const override { return LossKind::Jtfs; }

 private:
  std::shared_ptr<const JtfsPlan> plan_;
  DualRealArray target_coeffs_;
};

class MssObjective : public Objective {
 public:
  MssObjective(const ThetaPoint& target, long tau_target, long tau_pred, const SynthConfig& synth,
               const MssConfig& mss = {});
  LossValue evaluate(const ThetaPoint& pred, bool with_gradient = true) const override;
  LossKind kind() const override { return LossKind::Mss; }

 private:
  std::vector<DualRealArray> features(const Signal& x) const;

  MssConfig mss_;
  std::vector<DualRealArray> target_features_;
};

/// One-shot JTFS loss between target and prediction.
LossValue jtfs_loss(const ThetaPoint& target, const ThetaPoint& pred, long tau_target, long tau_pred,
                    const SynthConfig& synth, const JtfsPlan& plan);

/// One-shot multi-scale spectrogram loss.
LossValue mss_loss(const ThetaPoint& target, const ThetaPoint& pred, long tau_target, long tau_pred,
                   const SynthConfig& synth, const MssConfig& mss = {});

/// Builds the objective for `kind`; a JTFS plan is created when none is given.
std::unique_ptr<Objective> make_objective(LossKind kind, const ThetaPoint& target, long tau_target,
                                          long tau_pred, const SynthConfig& synth,
                                          std::shared_ptr<const JtfsPlan> plan = nullptr,
                                          const MssConfig& mss = {});

}  // namespace meso
