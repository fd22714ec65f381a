#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <set>

#include "meso/experiment.hpp"

using namespace meso;

namespace {

class Bowl : public Objective {
 public:
  explicit Bowl(ThetaPoint target) : Objective(target, 0, 0, SynthConfig{}) {}
  LossValue evaluate(const ThetaPoint& p, bool with_gradient) const override {
    const double a = std::log(p.f_m / target_.f_m), b = std::log(p.gamma / target_.gamma);
    LossValue v{a * a + b * b, {0.0, 0.0}};
    if (with_gradient) v.gradient = {2 * a / p.f_m, 2 * b / p.gamma};
    return v;
  }
  LossKind kind() const override { return LossKind::Jtfs; }
};

}  // namespace

TEST_CASE("grid") {
  const GridSpec g;
  CHECK(g.size() == 400);
  const auto f = g.f_m_values(), y = g.gamma_values();
  CHECK(f.front() == doctest::Approx(4.0));
  CHECK(f.back() == doctest::Approx(16.0));
  CHECK(y.front() == doctest::Approx(0.5));
  CHECK(y.back() == doctest::Approx(4.0));
  for (std::size_t k = 2; k < f.size(); ++k) {
    CHECK(f[k] / f[k - 1] == doctest::Approx(f[1] / f[0]).epsilon(1e-12));
    CHECK(y[k] / y[k - 1] == doctest::Approx(y[1] / y[0]).epsilon(1e-12));
  }
  CHECK(g.nearest_cell({8.49, 1.49}) == std::pair{10, 10});
  CHECK(g.point(10, 10).f_m == doctest::Approx(f[10]));
  GridSpec bad;
  bad.points = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigurationError);
}

TEST_CASE("initialisation scenarios") {
  const GridSpec g;
  const ThetaPoint target{8.49, 1.49};
  const auto near = sample_inits(InitScenario::Near, 50, target, g, 1);
  for (const auto& p : near) {
    CHECK(std::abs(p.f_m / target.f_m - 1.0) <= 0.15);
    CHECK(std::abs(p.gamma / target.gamma - 1.0) <= 0.15);
  }
  const double qf = std::pow(4.0, 0.25), qg = std::pow(8.0, 0.25);
  for (const auto& p : sample_inits(InitScenario::Far, 50, target, g, 2)) {
    CHECK((p.f_m <= 4.0 * qf || p.f_m >= 16.0 / qf));
    CHECK((p.gamma <= 0.5 * qg || p.gamma >= 4.0 / qg));
  }
  for (const auto& p : sample_inits(InitScenario::Anywhere, 50, target, g, 3)) {
    CHECK((p.f_m >= 4.0 && p.f_m <= 16.0));
    CHECK((p.gamma >= 0.5 && p.gamma <= 4.0));
  }
  CHECK(sample_inits(InitScenario::Anywhere, 5, target, g, 9) == sample_inits(InitScenario::Anywhere, 5, target, g, 9));
  CHECK(sample_inits(InitScenario::Anywhere, 5, target, g, 9) != sample_inits(InitScenario::Anywhere, 5, target, g, 10));
  CHECK(parse_init_scenario("far") == InitScenario::Far);
  CHECK_THROWS_AS(parse_init_scenario("close"), ConfigurationError);
}

TEST_CASE("config set and snapshot round trip") {
  ExperimentConfig c;
  c.set("loss", "mss");
  c.set("target", "8.29, 1.49");
  c.set("tau", "0,16,1024");
  c.set("optim.lr_scale", "100,10");
  c.set("synth.am_shape", "sine_squared");
  c.set("optim.tol", "0.1");
  CHECK(c.loss == LossKind::Mss);
  CHECK(c.target == ThetaPoint{8.29, 1.49});
  CHECK(c.taus == std::vector<long>{0, 16, 1024});
  CHECK(c.synth.am_shape == AmShape::SineSquared);
  ExperimentConfig d;
  for (const auto& [k, v] : c.snapshot()) d.set(k, v);
  CHECK(d.snapshot() == c.snapshot());
  CHECK(d.optim.tol == 0.1);
  CHECK_THROWS_AS(c.set("nope", "1"), ConfigurationError);
  CHECK_THROWS_AS(c.set("optim.tol", "abc"), ConfigurationError);
  CHECK_THROWS_AS(c.set("target", "1"), ConfigurationError);
  CHECK_THROWS_AS(c.set("jtfs.prune_paths", "maybe"), ConfigurationError);
}

TEST_CASE("exported csv reloads as the same config") {
  ExperimentConfig c;
  c.loss = LossKind::Mss;
  c.grid.points = 3;
  c.target = {7.25, 1.125};
  const Bowl bowl(c.target);
  const auto field = evaluate_grid(bowl, c.grid, true, 1);
  const auto path = std::filesystem::temp_directory_path() / "meso_field_test.csv";
  write_field_csv(path, c, field, true);
  const auto back = load_config(path);
  CHECK(back.snapshot() == c.snapshot());
  std::filesystem::remove(path);
}

TEST_CASE("parallel_for visits every index once and forwards errors") {
  std::vector<std::atomic<int>> hits(97);
  parallel_for(hits.size(), 4, [&](std::size_t k) { ++hits[k]; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t k) { if (k == 7) throw std::runtime_error("x"); }),
                  std::runtime_error);
}

TEST_CASE("grid evaluation is deterministic across worker counts") {
  const GridSpec g;
  const Bowl bowl({8.49, 1.49});
  const auto a = evaluate_grid(bowl, g, true, 1), b = evaluate_grid(bowl, g, true, 4);
  REQUIRE(a.size() == 400);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].loss == b[k].loss);
    CHECK(a[k].gradient == b[k].gradient);
  }
  const auto s = summarize(a);
  CHECK(a[s.argmin].i == 10);
  CHECK(a[s.argmin].j == 10);
  CHECK(orientation_fraction(a, {8.49, 1.49}) == 1.0);
  auto flipped = a;
  for (auto& p : flipped) p.gradient = {-p.gradient[0], -p.gradient[1]};
  CHECK(orientation_fraction(flipped, {8.49, 1.49}) == 0.0);
}

TEST_CASE("shift sweep values") {
  ExperimentConfig c;
  const auto taus = shift_sweep_taus(c);
  REQUIRE(taus.size() == 15);
  CHECK(taus.front() == 0);
  CHECK(taus[1] == 1);
  CHECK(taus.back() == 8192);
  c.random_shift = true;
  c.random_runs = 40;
  c.seed = 5;
  const auto r = shift_sweep_taus(c);
  CHECK(r == shift_sweep_taus(c));
  std::set<long> seen(r.begin() + 1, r.end());
  for (long t : seen) CHECK((t == 256 || t == 512 || t == 1024 || t == 2048 || t == 4096));
  CHECK(seen.size() == 5);
}

TEST_CASE("matching runs keep job order") {
  ExperimentConfig c;
  c.loss = LossKind::Mss;
  c.optim.max_iters = 2;
  c.jobs = 2;
  const auto runs = run_matches(c, {{{4, 0.5}, 0}, {{5, 1}, 16}});
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].init == ThetaPoint{4, 0.5});
  CHECK(runs[1].tau_pred == 16);
  CHECK(runs[1].loss == LossKind::Mss);
}
