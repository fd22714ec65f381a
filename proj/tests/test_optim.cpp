#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "meso/optim.hpp"

using namespace meso;

namespace {

// L = a (f - f0)^2 + b (g - g0)^2, optionally with a poisoned gradient.
class Quadratic : public Objective {
 public:
  Quadratic(ThetaPoint minimum, double a = 1.0, double b = 1.0)
      : Objective(minimum, 0, 0, SynthConfig{}), a_(a), b_(b) {}
  LossValue evaluate(const ThetaPoint& p, bool with_gradient) const override {
    ++calls;
    const double df = p.f_m - target_.f_m, dg = p.gamma - target_.gamma;
    LossValue v{a_ * df * df + b_ * dg * dg, {0.0, 0.0}};
    if (with_gradient) v.gradient = {2 * a_ * df, 2 * b_ * dg};
    if (poison && calls > 3) v.gradient[0] = std::numeric_limits<double>::quiet_NaN();
    return v;
  }
  LossKind kind() const override { return LossKind::Jtfs; }
  bool poison = false;
  mutable int calls = 0;

 private:
  double a_, b_;
};

}  // namespace

TEST_CASE("bold driver grows on success and rolls back on failure") {
  const OptimizerConfig cfg;
  OptimizerState s;
  s.theta_pred = {5, 1};
  s.learning_rate = 0.01;
  s.last_loss = 2.0;
  s.gradient = {1.0, 1.0};
  const auto good = bold_driver_step(s, {4.9, 0.9}, {1.0, {0.5, 0.5}}, cfg);
  CHECK(good.learning_rate == doctest::Approx(0.012));
  CHECK(good.theta_pred == ThetaPoint{4.9, 0.9});
  CHECK(good.last_loss == 1.0);
  CHECK(good.iteration == 1);

  const auto bad = bold_driver_step(s, {4.9, 0.9}, {3.0, {0.5, 0.5}}, cfg);
  CHECK(bad.learning_rate == doctest::Approx(0.005));
  CHECK(bad.theta_pred == s.theta_pred);
  CHECK(bad.last_loss == 2.0);
  CHECK(bad.gradient == s.gradient);

  OptimizerConfig keep = cfg;
  keep.rollback = false;
  const auto kept = bold_driver_step(s, {4.9, 0.9}, {3.0, {0.5, 0.5}}, keep);
  CHECK(kept.learning_rate == doctest::Approx(0.005));
  CHECK(kept.theta_pred == ThetaPoint{4.9, 0.9});
}

TEST_CASE("proposals") {
  OptimizerConfig cfg;
  OptimizerState s;
  s.theta_pred = {5, 1};
  s.learning_rate = 1e-3;
  CHECK(propose_step(s, cfg) == s.theta_pred);
  s.gradient = {1.0, 2.0};
  const auto p = propose_step(s, cfg);
  CHECK(p.f_m == doctest::Approx(5 - 1e-3 * 144));
  CHECK(p.gamma == doctest::Approx(1 - 1e-3 * 12.25 * 2));
  s.gradient = {1e6, 0.0};
  CHECK(propose_step(s, cfg).f_m == cfg.theta_floor);
  s.gradient = {std::numeric_limits<double>::infinity(), 0.0};
  CHECK_THROWS_AS(propose_step(s, cfg), NumericDomainError);
}

TEST_CASE("starting at the target stops immediately") {
  const Quadratic q({8.49, 1.49});
  const auto t = sound_match(q, {8.49, 1.49});
  CHECK(t.termination == Termination::Converged);
  CHECK(t.iterations() == 0);
  CHECK(t.records.size() == 1);
  CHECK(t.final_norm() == 0.0);
}

TEST_CASE("quadratic bowl converges and the rate replays") {
  const Quadratic q({8.49, 1.49}, 0.01, 0.1);
  OptimizerConfig cfg;
  const auto t = sound_match(q, {4, 0.5}, cfg);
  CHECK(t.records.size() == static_cast<std::size_t>(t.iterations()) + 1);
  CHECK(t.final_norm() < 0.01 * t.initial_norm());
  for (std::size_t k = 1; k < t.records.size(); ++k) {
    const auto& prev = t.records[k - 1];
    const auto& cur = t.records[k];
    CHECK(cur.iteration == prev.iteration + 1);
    const double factor = cur.accepted ? cfg.increase : cfg.decrease;
    CHECK(cur.learning_rate == doctest::Approx(prev.learning_rate * factor).epsilon(1e-14));
    CHECK(cur.loss <= prev.loss);
    if (!cur.accepted) CHECK(cur.theta == prev.theta);
  }
}

TEST_CASE("iteration cap") {
  const Quadratic q({8.49, 1.49}, 0.01, 0.1);
  OptimizerConfig cfg;
  cfg.max_iters = 3;
  const auto t = sound_match(q, {4, 0.5}, cfg);
  CHECK(t.termination == Termination::MaxIters);
  CHECK(t.records.size() == 4);
}

TEST_CASE("a minimum outside the domain is reported as divergence") {
  const Quadratic q({-5.0, 1.0}, 1.0, 1.0);
  OptimizerConfig cfg;
  cfg.learning_rate = 0.1;
  const auto t = sound_match(q, {2.0, 1.0}, cfg);
  CHECK(t.termination == Termination::Diverged);
  CHECK(t.records.back().theta.f_m == cfg.theta_floor);
  CHECK_FALSE(t.diagnostic.empty());
}

TEST_CASE("non-finite gradient aborts with a diagnostic") {
  Quadratic q({8.49, 1.49}, 0.01, 0.1);
  q.poison = true;
  const auto t = sound_match(q, {4, 0.5});
  CHECK(t.termination == Termination::Aborted);
  CHECK(t.diagnostic.find("gradient") != std::string::npos);
  CHECK(t.records.size() == 4);
}

TEST_CASE("invalid settings") {
  OptimizerConfig cfg;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigurationError);
  const Quadratic q({8.49, 1.49});
  CHECK_THROWS_AS(sound_match(q, {0.0, 1.0}), NumericDomainError);
}

TEST_CASE("trajectory export") {
  const Quadratic q({8.49, 1.49}, 0.01, 0.1);
  OptimizerConfig cfg;
  cfg.max_iters = 5;
  const auto t = sound_match(q, {4, 0.5}, cfg);
  const auto path = std::filesystem::temp_directory_path() / "meso_traj_test.csv";
  write_trajectory_csv(path, t, "test");
  std::ifstream is(path);
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 2 + static_cast<int>(t.records.size()));
  std::filesystem::remove(path);

  const auto j = nlohmann::json::parse(trajectory_json(t));
  CHECK(j["records"].size() == t.records.size());
  CHECK(j["termination"] == "max_iters");
  CHECK(j["records"][0]["param_distance"].get<double>() == doctest::Approx(21.14).epsilon(1e-3));
}
