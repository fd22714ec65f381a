#pragma once

// Experiment drivers shared by the command-line tool and the acceptance run:
// parameter grids, loss surfaces and gradient fields, batches of matching
// runs, and the flat key=value configuration they are reproduced from.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "meso/loss.hpp"
#include "meso/optim.hpp"

namespace meso {

/// Log-spaced (f_m, gamma) grid.
struct GridSpec {
  double f_m_min = 4.0, f_m_max = 16.0;
  double gamma_min = 0.5, gamma_max = 4.0;
  int points = 20;

  void validate() const;
  std::vector<double> f_m_values() const;
  std::vector<double> gamma_values() const;
  ThetaPoint point(int i, int j) const;  ///< i indexes f_m, j indexes gamma
  std::size_t size() const { return static_cast<std::size_t>(points) * static_cast<std::size_t>(points); }
  /// Cell nearest to theta in log coordinates, as (i, j).
  std::pair<int, int> nearest_cell(const ThetaPoint& theta) const;
};

enum class InitScenario { Far, Near, Anywhere };
InitScenario parse_init_scenario(const std::string& s);
std::string to_string(InitScenario s);

/// Seeded initial points for one scenario.
///   far:      each coordinate log-uniform in the outer quarter of its axis,
///             low or high side chosen at random;
///   near:     each coordinate uniform within +-15% of the target;
///   anywhere: log-uniform over the whole grid.
std::vector<ThetaPoint> sample_inits(InitScenario scenario, int count, const ThetaPoint& target,
                                     const GridSpec& grid, std::uint64_t seed);

struct ExperimentConfig {
  LossKind loss = LossKind::Jtfs;
  ThetaPoint target{8.49, 1.49};
  ThetaPoint init{4.0, 0.5};
  long tau_target = 0;
  std::vector<long> taus{4, 16, 128, 1024};
  GridSpec grid;
  SynthConfig synth;
  ScatteringConfig scattering;
  MssConfig mss;
  OptimizerConfig optim;
  std::uint64_t seed = 0;
  unsigned jobs = 0;  ///< 0 uses the hardware concurrency
  std::string scenario;  ///< empty, far, near or anywhere
  int inits = 5;
  /// Shift sweep: draw each tau as 2^n, n uniform in [8, 12], instead of
  /// walking 2^0 .. 2^13.
  bool random_shift = false;
  int random_runs = 8;

  void validate() const;
  /// Applies one key=value setting; throws ConfigurationError on an unknown key
  /// or malformed value.
  void set(const std::string& key, const std::string& value);
  /// Every key with its current value, in a stable order.
  std::vector<std::pair<std::string, std::string>> snapshot() const;
  unsigned worker_count() const;
};

/// Reads key=value lines. '#' starts a comment, except that lines of the form
/// "#cfg key=value" (as embedded in exported CSV files) are read as settings.
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Runs fn(0) .. fn(n-1) on `jobs` threads. The first exception is rethrown
/// after all workers stop.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

struct FieldPoint {
  int i = 0, j = 0;
  ThetaPoint theta;
  double loss = 0.0;
  Tangent gradient{0.0, 0.0};
};

/// Loss (and optionally gradient) at every grid point against the objective's
/// target. Points are ordered row-major in (i, j).
std::vector<FieldPoint> evaluate_grid(const Objective& objective, const GridSpec& grid, bool with_gradient,
                                      unsigned jobs);

struct SurfaceSummary {
  std::size_t argmin = 0;
  double min = 0.0;
  double max = 0.0;
};
SurfaceSummary summarize(const std::vector<FieldPoint>& field);

/// Fraction of points where -grad L points towards the target in log
/// coordinates: -(theta_pred * grad) . (log target - log theta_pred) > 0.
double orientation_fraction(const std::vector<FieldPoint>& field, const ThetaPoint& target);

/// Shared transform plan for JTFS objectives (null for MSS).
std::shared_ptr<const JtfsPlan> make_plan(const ExperimentConfig& cfg);

std::unique_ptr<Objective> make_objective(const ExperimentConfig& cfg, long tau_pred,
                                          std::shared_ptr<const JtfsPlan> plan);

struct MatchJob {
  ThetaPoint init;
  long tau_pred = 0;
};

/// Independent matching runs, executed concurrently; results keep job order.
std::vector<Trajectory> run_matches(const ExperimentConfig& cfg, const std::vector<MatchJob>& jobs);

/// Shift values for the sweep: 0 then 2^0 .. 2^13, or seeded random powers.
std::vector<long> shift_sweep_taus(const ExperimentConfig& cfg);

/// "#cfg key=value" lines followed by a "# created=..." timestamp line.
std::string csv_preamble(const ExperimentConfig& cfg);
std::string config_json(const ExperimentConfig& cfg);

void write_field_csv(const std::filesystem::path& path, const ExperimentConfig& cfg,
                     const std::vector<FieldPoint>& field, bool with_gradient);

}  // namespace meso
