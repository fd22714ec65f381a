// Command-line driver: synth | surface | field | match | shift-sweep.
//
// Every subcommand reads an optional key=value config, applies flag
// overrides on top, and writes CSV (with the config embedded as "#cfg"
// lines) or JSON. Failures print one JSON line to stderr and exit nonzero.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "meso/experiment.hpp"
#include "meso/wav.hpp"

namespace fs = std::filesystem;
using namespace meso;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kDomain = 3, kIo = 4 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string loss, target, init, tau, grid;
  std::string out;
  std::string format = "csv";
  std::string scenario;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int max_iters = 0;
  unsigned jobs = 0;
  bool random_shift = false;
  std::string wav_format = "pcm16";
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "key=value config file (or an exported CSV)");
  cmd->add_option("--set", o.overrides, "extra key=value override, repeatable");
  cmd->add_option("--loss", o.loss, "jtfs or mss");
  cmd->add_option("--target", o.target, "target f_m,gamma");
  cmd->add_option("--out", o.out, "output path");
  cmd->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
}

ExperimentConfig build_config(const Options& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = load_config(o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigurationError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.loss.empty()) cfg.set("loss", o.loss);
  if (!o.target.empty()) cfg.set("target", o.target);
  if (!o.init.empty()) cfg.set("init", o.init);
  if (!o.tau.empty()) cfg.set("tau", o.tau);
  if (!o.scenario.empty()) cfg.set("scenario", o.scenario);
  if (o.seed_set) cfg.seed = o.seed;
  if (o.max_iters > 0) cfg.optim.max_iters = o.max_iters;
  if (o.jobs) cfg.jobs = o.jobs;
  if (o.random_shift) cfg.random_shift = true;
  if (!o.grid.empty()) {
    // Either a point count or f_min,f_max,gamma_min,gamma_max,points.
    if (o.grid.find(',') == std::string::npos) {
      cfg.set("grid.points", o.grid);
    } else {
      std::vector<std::string> parts;
      std::stringstream ss(o.grid);
      for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
      if (parts.size() != 5) throw ConfigurationError("--grid expects N or f_min,f_max,gamma_min,gamma_max,N");
      cfg.set("grid.f_m_min", parts[0]);
      cfg.set("grid.f_m_max", parts[1]);
      cfg.set("grid.gamma_min", parts[2]);
      cfg.set("grid.gamma_max", parts[3]);
      cfg.set("grid.points", parts[4]);
    }
  }
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  return os;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    auto os = open_out(out);
    os << text;
  }
}

int cmd_synth(const Options& o) {
  auto cfg = build_config(o);
  const auto theta = cfg.target;
  // The export is rescaled so its largest sample is exactly 1.
  const auto x = normalize(arpeggio(DualTheta::constant(theta), cfg.synth));
  const auto v = x.samples.value();
  double peak = 0.0;
  for (double s : v) peak = std::max(peak, std::abs(s));
  if (o.out.empty()) throw ConfigurationError("synth: --out is required");
  const fs::path path(o.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  try {
    write_wav(path, v, static_cast<unsigned>(cfg.synth.sample_rate),
              o.wav_format == "float32" ? WavFormat::Float32 : WavFormat::Pcm16);
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
  nlohmann::ordered_json j;
  j["out"] = path.string();
  j["theta"] = {theta.f_m, theta.gamma};
  j["samples"] = v.size();
  j["duration_s"] = static_cast<double>(v.size()) / cfg.synth.sample_rate;
  j["events"] = event_count(theta, cfg.synth.w);
  j["peak"] = peak;
  std::cout << j.dump() << '\n';
  return kOk;
}

int cmd_grid(const Options& o, bool with_gradient) {
  auto cfg = build_config(o);
  const long tau = o.tau.empty() ? 1024 : cfg.taus.front();
  const auto objective = make_objective(cfg, tau, make_plan(cfg));
  const auto field = evaluate_grid(*objective, cfg.grid, with_gradient, cfg.worker_count());
  const auto s = summarize(field);
  nlohmann::ordered_json summary;
  summary["loss"] = to_string(cfg.loss);
  summary["tau_pred"] = tau;
  summary["argmin"] = {field[s.argmin].i, field[s.argmin].j};
  summary["argmin_theta"] = {field[s.argmin].theta.f_m, field[s.argmin].theta.gamma};
  const auto cell = cfg.grid.nearest_cell(cfg.target);
  summary["target_cell"] = {cell.first, cell.second};
  summary["min"] = s.min;
  summary["max"] = s.max;
  if (with_gradient) summary["orientation_fraction"] = orientation_fraction(field, cfg.target);

  if (o.format == "json") {
    nlohmann::ordered_json j;
    j["config"] = nlohmann::json::parse(config_json(cfg));
    j["summary"] = summary;
    auto& pts = j["points"] = nlohmann::json::array();
    for (const auto& p : field) {
      nlohmann::ordered_json q{{"i", p.i}, {"j", p.j}, {"f_m", p.theta.f_m}, {"gamma", p.theta.gamma}, {"loss", p.loss}};
      if (with_gradient) q["gradient"] = {p.gradient[0], p.gradient[1]};
      pts.push_back(q);
    }
    emit(j.dump() + "\n", o.out);
  } else if (o.out.empty()) {
    std::cout << csv_preamble(cfg);
    std::cout.precision(17);
    std::cout << (with_gradient ? "i,j,f_m,gamma,loss,grad_f_m,grad_gamma\n" : "i,j,f_m,gamma,loss\n");
    for (const auto& p : field) {
      std::cout << p.i << ',' << p.j << ',' << p.theta.f_m << ',' << p.theta.gamma << ',' << p.loss;
      if (with_gradient) std::cout << ',' << p.gradient[0] << ',' << p.gradient[1];
      std::cout << '\n';
    }
  } else {
    open_out(o.out);
    write_field_csv(o.out, cfg, field, with_gradient);
  }
  if (!o.out.empty()) std::cout << summary.dump() << '\n';
  return kOk;
}

nlohmann::ordered_json run_summary(const Trajectory& t) {
  return {{"init", {t.init.f_m, t.init.gamma}},
          {"tau_pred", t.tau_pred},
          {"iterations", t.iterations()},
          {"termination", to_string(t.termination)},
          {"initial_distance", t.initial_norm()},
          {"final_distance", t.final_norm()},
          {"final_theta", {t.records.back().theta.f_m, t.records.back().theta.gamma}},
          {"diagnostic", t.diagnostic}};
}

// Writes one trajectory file per run plus a summary, under `dir`.
void write_runs(const fs::path& dir, const std::string& stem, const ExperimentConfig& cfg,
                const std::vector<Trajectory>& runs, const std::string& format) {
  fs::create_directories(dir);
  nlohmann::ordered_json summary;
  summary["config"] = nlohmann::json::parse(config_json(cfg));
  auto& rs = summary["runs"] = nlohmann::json::array();
  std::string csv = csv_preamble(cfg) +
                    "run,init_f_m,init_gamma,tau_pred,iterations,termination,initial_distance,final_distance,"
                    "final_f_m,final_gamma\n";
  char line[512];
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& t = runs[k];
    const auto name = stem + "_" + std::to_string(k);
    if (format == "json") {
      auto os = open_out(dir / (name + ".json"));
      nlohmann::ordered_json j;
      j["config"] = nlohmann::json::parse(config_json(cfg));
      j["trajectory"] = nlohmann::json::parse(trajectory_json(t));
      os << j.dump() << '\n';
    } else {
      try {
        write_trajectory_csv(dir / (name + ".csv"), t);
      } catch (const std::runtime_error& e) {
        throw IoError(e.what());
      }
    }
    rs.push_back(run_summary(t));
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%ld,%d,%s,%.17g,%.17g,%.17g,%.17g\n", k, t.init.f_m,
                  t.init.gamma, t.tau_pred, t.iterations(), to_string(t.termination).c_str(), t.initial_norm(),
                  t.final_norm(), t.records.back().theta.f_m, t.records.back().theta.gamma);
    csv += line;
  }
  if (format == "json") {
    auto os = open_out(dir / (stem + "_summary.json"));
    os << summary.dump() << '\n';
  } else {
    auto os = open_out(dir / (stem + "_summary.csv"));
    os << csv;
  }
  std::cout << summary["runs"].dump() << '\n';
}

int cmd_match(const Options& o) {
  auto cfg = build_config(o);
  std::vector<MatchJob> jobs;
  std::string stem = "match_" + to_string(cfg.loss);
  if (!cfg.scenario.empty()) {
    // Initialization study: no shift.
    for (const auto& init : sample_inits(parse_init_scenario(cfg.scenario), cfg.inits, cfg.target, cfg.grid, cfg.seed))
      jobs.push_back({init, 0});
    stem += "_" + cfg.scenario;
  } else {
    for (long tau : cfg.taus) jobs.push_back({cfg.init, tau});
  }
  const auto runs = run_matches(cfg, jobs);
  write_runs(o.out.empty() ? fs::path("out") : fs::path(o.out), stem, cfg, runs, o.format);
  return kOk;
}

int cmd_shift_sweep(const Options& o) {
  auto cfg = build_config(o);
  std::vector<MatchJob> jobs;
  for (long tau : shift_sweep_taus(cfg)) jobs.push_back({cfg.init, tau});
  const auto runs = run_matches(cfg, jobs);
  write_runs(o.out.empty() ? fs::path("out") : fs::path(o.out), "shift_" + to_string(cfg.loss), cfg, runs,
             o.format);
  return kOk;
}

void fail_line(const char* kind, const std::string& message) {
  nlohmann::ordered_json j{{"error", kind}, {"message", message}};
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mesostructure sound matching experiments"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "render an arpeggio to WAV");
  add_common(synth, o);
  synth->add_option("--theta", o.target, "f_m,gamma to render (alias of --target)");
  synth->add_option("--wav-format", o.wav_format, "pcm16 or float32")->check(CLI::IsMember({"pcm16", "float32"}));

  auto* surface = app.add_subcommand("surface", "loss over the parameter grid");
  auto* field = app.add_subcommand("field", "loss and gradient over the parameter grid");
  for (auto* c : {surface, field}) {
    add_common(c, o);
    c->add_option("--tau", o.tau, "prediction shift in samples (default 1024)");
    c->add_option("--grid", o.grid, "N or f_min,f_max,gamma_min,gamma_max,N");
  }

  auto* match = app.add_subcommand("match", "gradient-descent sound matching");
  auto* sweep = app.add_subcommand("shift-sweep", "matching under a range of time shifts");
  for (auto* c : {match, sweep}) {
    add_common(c, o);
    c->add_option("--init", o.init, "initial f_m,gamma");
    c->add_option("--max-iters", o.max_iters, "iteration cap");
    c->add_option("--grid", o.grid, "N or f_min,f_max,gamma_min,gamma_max,N");
    c->add_option("--seed", o.seed, "random seed")->each([&](const std::string&) { o.seed_set = true; });
  }
  match->add_option("--tau", o.tau, "comma-separated prediction shifts");
  match->add_option("--scenario", o.scenario, "init study: far, near or anywhere")
      ->check(CLI::IsMember({"far", "near", "anywhere"}));
  sweep->add_flag("--random", o.random_shift, "random shifts 2^n, n uniform in [8, 12]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    fail_line("usage", e.what());
    return kConfig;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*surface) return cmd_grid(o, false);
    if (*field) return cmd_grid(o, true);
    if (*match) return cmd_match(o);
    if (*sweep) return cmd_shift_sweep(o);
  } catch (const ConfigurationError& e) {
    fail_line("config", e.what());
    return kConfig;
  } catch (const std::invalid_argument& e) {
    fail_line("config", e.what());
    return kConfig;
  } catch (const NumericDomainError& e) {
    fail_line("domain", e.what());
    return kDomain;
  } catch (const IoError& e) {
    fail_line("io", e.what());
    return kIo;
  } catch (const fs::filesystem_error& e) {
    fail_line("io", e.what());
    return kIo;
  } catch (const std::exception& e) {
    fail_line("failure", e.what());
    return kFailure;
  }
  return kFailure;
}
