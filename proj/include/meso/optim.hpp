#pragma once

// Sound matching by gradient descent with a bold-driver learning rate.

#include <filesystem>
#include <string>
#include <vector>

#include "meso/loss.hpp"

namespace meso {

struct OptimizerConfig {
  int max_iters = 200;
  /// Stop once the attempted parameter step is shorter than this.
  double tol = 1e-6;
  double learning_rate = 1e-3;
  /// Per-coordinate multipliers on the learning rate: squared grid ranges.
  Tangent lr_scale{144.0, 12.25};
  double increase = 1.2;
  double decrease = 0.5;
  /// Undo a step that raised the loss before shrinking the rate.
  bool rollback = true;
  /// Lower bound applied to both parameters after every step.
  double theta_floor = 1e-3;
  /// Consecutive accepted steps on the floor after which a run is declared
  /// divergent.
  int divergence_hits = 5;

  void validate() const;
};

struct OptimizerState {
  ThetaPoint theta_pred;
  double learning_rate = 1e-3;
  double last_loss = 0.0;
  Tangent gradient{0.0, 0.0};  ///< at theta_pred
  int iteration = 0;
};

/// theta - lr * scale * grad, clamped to the floor. Throws NumericDomainError
/// on a non-finite gradient.
ThetaPoint propose_step(const OptimizerState& state, const OptimizerConfig& cfg);

/// Applies the bold-driver rule to the evaluation of `candidate`: accept and
/// grow the rate when the loss decreased, otherwise shrink it (and keep the
/// old point when rolling back).
OptimizerState bold_driver_step(const OptimizerState& state, const ThetaPoint& candidate,
                                const LossValue& candidate_loss, const OptimizerConfig& cfg);

enum class Termination { Converged, MaxIters, Diverged, Aborted };
std::string to_string(Termination t);

struct TrajectoryRecord {
  int iteration = 0;
  ThetaPoint theta;
  double loss = 0.0;
  Tangent gradient{0.0, 0.0};
  double learning_rate = 0.0;
  double distance = 0.0;  ///< param_distance to the target
  bool accepted = true;
};

struct Trajectory {
  ThetaPoint target;
  ThetaPoint init;
  LossKind loss = LossKind::Jtfs;
  long tau_pred = 0;
  std::vector<TrajectoryRecord> records;  ///< initial point first
  Termination termination = Termination::MaxIters;
  std::string diagnostic;

  int iterations() const { return static_cast<int>(records.size()) - 1; }
  /// Euclidean (not squared) parameter distances.
  double initial_norm() const;
  double final_norm() const;
};

/// Runs gradient descent from `init` against the objective's target.
Trajectory sound_match(const Objective& objective, const ThetaPoint& init, const OptimizerConfig& cfg = {});

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t,
                          const std::string& header_comment = {});
std::string trajectory_json(const Trajectory& t);

}  // namespace meso
