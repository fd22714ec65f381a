#include "meso/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace meso {

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto s = trim(v);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || !std::isfinite(out))
    throw ConfigurationError("config: " + key + ": expected a number, got '" + v + "'");
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto s = trim(v);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw ConfigurationError("config: " + key + ": expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto s = trim(v);
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  throw ConfigurationError("config: " + key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(trim(item));
  return out;
}

ThetaPoint to_point(const std::string& key, const std::string& v) {
  const auto parts = split(v, ',');
  if (parts.size() != 2) throw ConfigurationError("config: " + key + ": expected 'f_m,gamma', got '" + v + "'");
  return {to_double(key, parts[0]), to_double(key, parts[1])};
}

std::string join_taus(const std::vector<long>& taus) {
  std::string out;
  for (std::size_t i = 0; i < taus.size(); ++i) out += (i ? "," : "") + std::to_string(taus[i]);
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

#define MESO_DOUBLE(name, member)                                                              \
  Field {                                                                                      \
    name, [](const ExperimentConfig& c) { return fmt(c.member); },                             \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); } \
  }
#define MESO_INT(name, member, type)                                                           \
  Field {                                                                                      \
    name, [](const ExperimentConfig& c) { return std::to_string(c.member); },                  \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {                  \
          c.member = static_cast<type>(to_long(k, v));                                         \
        }                                                                                      \
  }
#define MESO_BOOL(name, member)                                                                \
  Field {                                                                                      \
    name, [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); },  \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_bool(k, v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"loss", [](const ExperimentConfig& c) { return to_string(c.loss); },
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.loss = parse_loss_kind(trim(v)); }},
      {"target", [](const ExperimentConfig& c) { return fmt(c.target.f_m) + "," + fmt(c.target.gamma); },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.target = to_point(k, v); }},
      {"init", [](const ExperimentConfig& c) { return fmt(c.init.f_m) + "," + fmt(c.init.gamma); },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.init = to_point(k, v); }},
      MESO_INT("tau_target", tau_target, long),
      {"tau", [](const ExperimentConfig& c) { return join_taus(c.taus); },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.taus.clear();
         for (const auto& p : split(v, ',')) c.taus.push_back(to_long(k, p));
       }},
      MESO_INT("seed", seed, std::uint64_t),
      MESO_INT("jobs", jobs, unsigned),
      {"scenario", [](const ExperimentConfig& c) { return c.scenario; },
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.scenario = trim(v);
         if (!c.scenario.empty()) parse_init_scenario(c.scenario);
       }},
      MESO_INT("inits", inits, int),
      MESO_BOOL("random_shift", random_shift),
      MESO_INT("random_runs", random_runs, int),
      MESO_DOUBLE("grid.f_m_min", grid.f_m_min),
      MESO_DOUBLE("grid.f_m_max", grid.f_m_max),
      MESO_DOUBLE("grid.gamma_min", grid.gamma_min),
      MESO_DOUBLE("grid.gamma_max", grid.gamma_max),
      MESO_INT("grid.points", grid.points, int),
      MESO_DOUBLE("synth.f_c", synth.f_c),
      MESO_DOUBLE("synth.w", synth.w),
      MESO_DOUBLE("synth.sample_rate", synth.sample_rate),
      MESO_INT("synth.num_samples", synth.num_samples, std::size_t),
      MESO_INT("synth.event_range", synth.event_range, long),
      {"synth.normalization",
       [](const ExperimentConfig& c) {
         return std::string(c.synth.normalization == Normalization::Peak ? "peak" : "energy");
       },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const auto s = trim(v);
         if (s == "peak") c.synth.normalization = Normalization::Peak;
         else if (s == "energy") c.synth.normalization = Normalization::Energy;
         else throw ConfigurationError("config: " + k + ": expected peak or energy");
       }},
      {"synth.am_shape",
       [](const ExperimentConfig& c) {
         return std::string(c.synth.am_shape == AmShape::HalfSine ? "half_sine" : "sine_squared");
       },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const auto s = trim(v);
         if (s == "half_sine") c.synth.am_shape = AmShape::HalfSine;
         else if (s == "sine_squared") c.synth.am_shape = AmShape::SineSquared;
         else throw ConfigurationError("config: " + k + ": expected half_sine or sine_squared");
       }},
      MESO_DOUBLE("synth.antialias_lo", synth.antialias_lo),
      MESO_DOUBLE("synth.antialias_hi", synth.antialias_hi),
      MESO_DOUBLE("synth.edge_taper", synth.edge_taper),
      MESO_INT("jtfs.J", scattering.J, int),
      MESO_INT("jtfs.Q1", scattering.Q1, int),
      MESO_INT("jtfs.Q2", scattering.Q2, int),
      MESO_INT("jtfs.J_fr", scattering.J_fr, int),
      MESO_INT("jtfs.Q_fr", scattering.Q_fr, int),
      MESO_DOUBLE("jtfs.T", scattering.T),
      MESO_DOUBLE("jtfs.F", scattering.F),
      MESO_INT("jtfs.oversampling", scattering.oversampling, int),
      MESO_BOOL("jtfs.prune_paths", scattering.prune_paths),
      MESO_INT("mss.min_exponent", mss.min_exponent, int),
      MESO_INT("mss.max_exponent", mss.max_exponent, int),
      MESO_INT("mss.hop_divisor", mss.hop_divisor, int),
      {"mss.reduction",
       [](const ExperimentConfig& c) { return std::string(c.mss.reduction == L1Reduction::Mean ? "mean" : "sum"); },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const auto s = trim(v);
         if (s == "mean") c.mss.reduction = L1Reduction::Mean;
         else if (s == "sum") c.mss.reduction = L1Reduction::Sum;
         else throw ConfigurationError("config: " + k + ": expected mean or sum");
       }},
      MESO_INT("optim.max_iters", optim.max_iters, int),
      MESO_DOUBLE("optim.tol", optim.tol),
      MESO_DOUBLE("optim.learning_rate", optim.learning_rate),
      {"optim.lr_scale",
       [](const ExperimentConfig& c) { return fmt(c.optim.lr_scale[0]) + "," + fmt(c.optim.lr_scale[1]); },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const auto p = to_point(k, v);
         c.optim.lr_scale = {p.f_m, p.gamma};
       }},
      MESO_DOUBLE("optim.increase", optim.increase),
      MESO_DOUBLE("optim.decrease", optim.decrease),
      MESO_BOOL("optim.rollback", optim.rollback),
      MESO_DOUBLE("optim.theta_floor", optim.theta_floor),
      MESO_INT("optim.divergence_hits", optim.divergence_hits, int),
  };
  return table;
}

#undef MESO_DOUBLE
#undef MESO_INT
#undef MESO_BOOL

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

}  // namespace

void GridSpec::validate() const {
  if (!(f_m_min > 0.0 && f_m_max > f_m_min && gamma_min > 0.0 && gamma_max > gamma_min))
    throw ConfigurationError("grid: need 0 < min < max on both axes");
  if (points < 2) throw ConfigurationError("grid: points must be >= 2");
}

static std::vector<double> log_axis(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = lo * std::pow(hi / lo, k / double(n - 1));
  return out;
}

std::vector<double> GridSpec::f_m_values() const { return log_axis(f_m_min, f_m_max, points); }
std::vector<double> GridSpec::gamma_values() const { return log_axis(gamma_min, gamma_max, points); }

ThetaPoint GridSpec::point(int i, int j) const {
  return {f_m_min * std::pow(f_m_max / f_m_min, i / double(points - 1)),
          gamma_min * std::pow(gamma_max / gamma_min, j / double(points - 1))};
}

std::pair<int, int> GridSpec::nearest_cell(const ThetaPoint& theta) const {
  const auto index = [&](double x, double lo, double hi) {
    const double k = std::round(std::log(x / lo) / std::log(hi / lo) * (points - 1));
    return static_cast<int>(std::clamp(k, 0.0, double(points - 1)));
  };
  return {index(theta.f_m, f_m_min, f_m_max), index(theta.gamma, gamma_min, gamma_max)};
}

InitScenario parse_init_scenario(const std::string& s) {
  if (s == "far") return InitScenario::Far;
  if (s == "near") return InitScenario::Near;
  if (s == "anywhere") return InitScenario::Anywhere;
  throw ConfigurationError("unknown scenario '" + s + "' (expected far, near or anywhere)");
}

std::string to_string(InitScenario s) {
  switch (s) {
    case InitScenario::Far: return "far";
    case InitScenario::Near: return "near";
    case InitScenario::Anywhere: return "anywhere";
  }
  return "unknown";
}

std::vector<ThetaPoint> sample_inits(InitScenario scenario, int count, const ThetaPoint& target,
                                     const GridSpec& grid, std::uint64_t seed) {
  grid.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> near(0.85, 1.15);
  std::bernoulli_distribution side(0.5);
  // Outer quarter of a log axis, on a random side.
  const auto edge = [&](double lo, double hi) {
    const double q = std::pow(hi / lo, 0.25);
    return side(rng) ? log_uniform(rng, lo, lo * q) : log_uniform(rng, hi / q, hi);
  };
  std::vector<ThetaPoint> out;
  for (int k = 0; k < count; ++k) {
    switch (scenario) {
      case InitScenario::Far: {
        const double f = edge(grid.f_m_min, grid.f_m_max);
        out.push_back({f, edge(grid.gamma_min, grid.gamma_max)});
        break;
      }
      case InitScenario::Near: {
        const double f = target.f_m * near(rng);
        out.push_back({f, target.gamma * near(rng)});
        break;
      }
      case InitScenario::Anywhere: {
        const double f = log_uniform(rng, grid.f_m_min, grid.f_m_max);
        out.push_back({f, log_uniform(rng, grid.gamma_min, grid.gamma_max)});
        break;
      }
    }
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (!target.valid() || !init.valid()) throw NumericDomainError("theta (f_m and gamma must be positive)");
  if (taus.empty()) throw ConfigurationError("config: tau list is empty");
  if (inits < 1) throw ConfigurationError("config: inits must be >= 1");
  if (random_runs < 1) throw ConfigurationError("config: random_runs must be >= 1");
  grid.validate();
  synth.validate();
  scattering.validate();
  mss.validate();
  optim.validate();
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (key == f.key) {
      f.set(*this, key, value);
      return;
    }
  throw ConfigurationError("config: unknown key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::snapshot() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

unsigned ExperimentConfig::worker_count() const {
  return jobs ? jobs : std::max(1u, std::thread::hardware_concurrency());
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream is(path);
  if (!is) throw ConfigurationError("config: cannot open " + path.string());
  std::string line;
  for (int n = 1; std::getline(is, line); ++n) {
    auto s = trim(line);
    if (s.rfind("#cfg ", 0) == 0) s = trim(s.substr(5));
    else if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      // Data rows of an exported CSV follow its preamble.
      if (s.find(',') != std::string::npos) break;
      throw ConfigurationError("config: " + path.string() + ":" + std::to_string(n) + ": expected key=value");
    }
    base.set(trim(s.substr(0, eq)), s.substr(eq + 1));
  }
  return base;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), n));
  if (jobs <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto worker = [&] {
    for (std::size_t k; !failed && (k = next++) < n;) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

std::vector<FieldPoint> evaluate_grid(const Objective& objective, const GridSpec& grid, bool with_gradient,
                                      unsigned jobs) {
  grid.validate();
  std::vector<FieldPoint> out(grid.size());
  parallel_for(out.size(), jobs, [&](std::size_t k) {
    auto& p = out[k];
    p.i = static_cast<int>(k) / grid.points;
    p.j = static_cast<int>(k) % grid.points;
    p.theta = grid.point(p.i, p.j);
    const auto v = objective.evaluate(p.theta, with_gradient);
    p.loss = v.value;
    p.gradient = v.gradient;
  });
  return out;
}

SurfaceSummary summarize(const std::vector<FieldPoint>& field) {
  if (field.empty()) throw std::invalid_argument("summarize: empty field");
  SurfaceSummary s{0, field[0].loss, field[0].loss};
  for (std::size_t k = 1; k < field.size(); ++k) {
    if (field[k].loss < s.min) s = {k, field[k].loss, s.max};
    s.max = std::max(s.max, field[k].loss);
  }
  return s;
}

double orientation_fraction(const std::vector<FieldPoint>& field, const ThetaPoint& target) {
  std::size_t good = 0, counted = 0;
  for (const auto& p : field) {
    const double dl0 = std::log(target.f_m) - std::log(p.theta.f_m);
    const double dl1 = std::log(target.gamma) - std::log(p.theta.gamma);
    if (dl0 == 0.0 && dl1 == 0.0) continue;
    ++counted;
    const double inner = -(p.theta.f_m * p.gradient[0] * dl0 + p.theta.gamma * p.gradient[1] * dl1);
    if (inner > 0.0) ++good;
  }
  return counted ? static_cast<double>(good) / static_cast<double>(counted) : 0.0;
}

std::shared_ptr<const JtfsPlan> make_plan(const ExperimentConfig& cfg) {
  if (cfg.loss != LossKind::Jtfs) return nullptr;
  return std::make_shared<const JtfsPlan>(cfg.scattering, cfg.synth.num_samples, cfg.synth.sample_rate);
}

std::unique_ptr<Objective> make_objective(const ExperimentConfig& cfg, long tau_pred,
                                          std::shared_ptr<const JtfsPlan> plan) {
  if (cfg.loss == LossKind::Jtfs && !plan) plan = make_plan(cfg);
  return make_objective(cfg.loss, cfg.target, cfg.tau_target, tau_pred, cfg.synth, std::move(plan), cfg.mss);
}

std::vector<Trajectory> run_matches(const ExperimentConfig& cfg, const std::vector<MatchJob>& jobs) {
  cfg.validate();
  const auto plan = make_plan(cfg);
  std::vector<Trajectory> out(jobs.size());
  parallel_for(jobs.size(), cfg.worker_count(), [&](std::size_t k) {
    const auto objective = make_objective(cfg, jobs[k].tau_pred, plan);
    out[k] = sound_match(*objective, jobs[k].init, cfg.optim);
  });
  return out;
}

std::vector<long> shift_sweep_taus(const ExperimentConfig& cfg) {
  std::vector<long> out{0};
  if (cfg.random_shift) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> n(8, 12);
    for (int k = 0; k < cfg.random_runs; ++k) out.push_back(1L << n(rng));
  } else {
    for (int n = 0; n <= 13; ++n) out.push_back(1L << n);
  }
  return out;
}

std::string csv_preamble(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg.snapshot()) out += "#cfg " + k + "=" + v + "\n";
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  out += std::string("# created=") + stamp + "\n";
  return out;
}

std::string config_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : cfg.snapshot()) j[k] = v;
  return j.dump();
}

void write_field_csv(const std::filesystem::path& path, const ExperimentConfig& cfg,
                     const std::vector<FieldPoint>& field, bool with_gradient) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << csv_preamble(cfg);
  os.precision(17);
  os << (with_gradient ? "i,j,f_m,gamma,loss,grad_f_m,grad_gamma\n" : "i,j,f_m,gamma,loss\n");
  for (const auto& p : field) {
    os << p.i << ',' << p.j << ',' << p.theta.f_m << ',' << p.theta.gamma << ',' << p.loss;
    if (with_gradient) os << ',' << p.gradient[0] << ',' << p.gradient[1];
    os << '\n';
  }
}

}  // namespace meso
