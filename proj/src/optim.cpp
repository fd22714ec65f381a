#include "meso/optim.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace meso {

void OptimizerConfig::validate() const {
  if (max_iters < 1) throw ConfigurationError("optim: max_iters must be >= 1");
  if (!(tol >= 0.0)) throw ConfigurationError("optim: tol must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigurationError("optim: learning_rate must be positive");
  if (!(lr_scale[0] > 0.0) || !(lr_scale[1] > 0.0)) throw ConfigurationError("optim: lr_scale must be positive");
  if (!(increase >= 1.0) || !(decrease > 0.0 && decrease < 1.0))
    throw ConfigurationError("optim: need increase >= 1 and 0 < decrease < 1");
  if (!(theta_floor > 0.0)) throw ConfigurationError("optim: theta_floor must be positive");
}

ThetaPoint propose_step(const OptimizerState& state, const OptimizerConfig& cfg) {
  const auto& g = state.gradient;
  if (!std::isfinite(g[0]) || !std::isfinite(g[1])) throw NumericDomainError("gradient (non-finite)");
  const auto step = [&](double x, std::size_t k) {
    return std::max(cfg.theta_floor, x - state.learning_rate * cfg.lr_scale[k] * g[k]);
  };
  return {step(state.theta_pred.f_m, 0), step(state.theta_pred.gamma, 1)};
}

OptimizerState bold_driver_step(const OptimizerState& state, const ThetaPoint& candidate,
                                const LossValue& candidate_loss, const OptimizerConfig& cfg) {
  OptimizerState next = state;
  next.iteration = state.iteration + 1;
  const bool improved = candidate_loss.value < state.last_loss;
  if (improved || !cfg.rollback) {
    next.theta_pred = candidate;
    next.last_loss = candidate_loss.value;
    next.gradient = candidate_loss.gradient;
  }
  next.learning_rate = state.learning_rate * (improved ? cfg.increase : cfg.decrease);
  return next;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIters: return "max_iters";
    case Termination::Diverged: return "diverged";
    case Termination::Aborted: return "aborted";
  }
  return "unknown";
}

double Trajectory::initial_norm() const { return std::sqrt(records.front().distance); }
double Trajectory::final_norm() const { return std::sqrt(records.back().distance); }

Trajectory sound_match(const Objective& objective, const ThetaPoint& init, const OptimizerConfig& cfg) {
  cfg.validate();
  if (!init.valid()) throw NumericDomainError("sound_match: invalid init");
  Trajectory traj;
  traj.target = objective.target();
  traj.init = init;
  traj.loss = objective.kind();
  traj.tau_pred = objective.tau_pred();

  OptimizerState state;
  state.theta_pred = init;
  state.learning_rate = cfg.learning_rate;
  const auto first = objective.evaluate(init, true);
  state.last_loss = first.value;
  state.gradient = first.gradient;
  const auto record = [&](bool accepted) {
    traj.records.push_back({state.iteration, state.theta_pred, state.last_loss, state.gradient,
                            state.learning_rate, param_distance(state.theta_pred, traj.target), accepted});
  };
  record(true);

  int floor_hits = 0;
  while (state.iteration < cfg.max_iters) {
    ThetaPoint candidate;
    try {
      candidate = propose_step(state, cfg);
    } catch (const NumericDomainError& e) {
      traj.termination = Termination::Aborted;
      traj.diagnostic = e.what();
      return traj;
    }
    const double moved = std::hypot(candidate.f_m - state.theta_pred.f_m, candidate.gamma - state.theta_pred.gamma);
    if (moved < cfg.tol) {
      // A point held on the floor by the gradient has not converged.
      const bool pinned = (candidate.f_m == cfg.theta_floor && state.gradient[0] > 0.0) ||
                          (candidate.gamma == cfg.theta_floor && state.gradient[1] > 0.0);
      traj.termination = pinned ? Termination::Diverged : Termination::Converged;
      if (pinned) traj.diagnostic = "held at the parameter floor";
      return traj;
    }
    LossValue value;
    try {
      value = objective.evaluate(candidate, true);
    } catch (const std::exception& e) {
      // Treat an unrenderable candidate as a failed step.
      value.value = std::numeric_limits<double>::infinity();
      traj.diagnostic = e.what();
    }
    const bool improved = value.value < state.last_loss;
    state = bold_driver_step(state, candidate, value, cfg);
    record(improved);
    if (improved) {
      const bool at_floor = candidate.f_m == cfg.theta_floor || candidate.gamma == cfg.theta_floor;
      floor_hits = at_floor ? floor_hits + 1 : 0;
    }
    if (floor_hits >= cfg.divergence_hits) {
      traj.termination = Termination::Diverged;
      traj.diagnostic = "parameter floor reached repeatedly";
      return traj;
    }
  }
  traj.termination = Termination::MaxIters;
  return traj;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t,
                          const std::string& header_comment) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os.precision(17);
  if (!header_comment.empty()) os << "# " << header_comment << '\n';
  os << "iteration,f_m,gamma,loss,grad_f_m,grad_gamma,learning_rate,param_distance,accepted\n";
  for (const auto& r : t.records)
    os << r.iteration << ',' << r.theta.f_m << ',' << r.theta.gamma << ',' << r.loss << ',' << r.gradient[0]
       << ',' << r.gradient[1] << ',' << r.learning_rate << ',' << r.distance << ',' << (r.accepted ? 1 : 0)
       << '\n';
}

std::string trajectory_json(const Trajectory& t) {
  nlohmann::json j;
  j["target"] = {t.target.f_m, t.target.gamma};
  j["init"] = {t.init.f_m, t.init.gamma};
  j["loss"] = to_string(t.loss);
  j["tau_pred"] = t.tau_pred;
  j["termination"] = to_string(t.termination);
  j["diagnostic"] = t.diagnostic;
  auto& recs = j["records"] = nlohmann::json::array();
  for (const auto& r : t.records)
    recs.push_back({{"iteration", r.iteration},
                    {"theta", {r.theta.f_m, r.theta.gamma}},
                    {"loss", r.loss},
                    {"gradient", {r.gradient[0], r.gradient[1]}},
                    {"learning_rate", r.learning_rate},
                    {"param_distance", r.distance},
                    {"accepted", r.accepted}});
  return j.dump();
}

}  // namespace meso
