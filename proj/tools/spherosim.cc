// Batch front end: run, campaign, certify, synthesize-gains, equilibrium,
// plot. Exit codes: 0 success, 1 bad input, 2 numerical failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "sphero/certification.h"
#include "sphero/config.h"
#include "sphero/errors.h"
#include "sphero/simulation.h"
#include "sphero/svg.h"

namespace fs = std::filesystem;
using namespace sphero;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> h, duration, perturb;
  int parallel{1};
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v == 0.0 ? 0.0 : v);
  return buf;
}

void apply(const Overrides& o, ScenarioConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.h) c.h = *o.h;
  if (o.duration) c.duration = *o.duration;
  if (o.perturb) c.perturb = *o.perturb;
  validate(c);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError(p.string(), "cannot write");
  out << text;
}

// Writes trajectory.csv, summary.txt and config.json for one run.
void write_run(const fs::path& dir, const Scenario& s,
               const TrajectoryLog& log) {
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "trajectory.csv", std::ios::binary);
    if (!csv) throw ValidationError((dir / "trajectory.csv").string(), "cannot write");
    write_csv(log, csv);
  }
  write_text(dir / "summary.txt", summary_text(log.summary));
  const Simulator sim(s.config);  // only for the perturbation draws
  write_text(dir / "config.json", resolved_json(s, sim.nominal()).dump(2) + "\n");
}

int cmd_run(const std::string& config, const std::string& out,
            const Overrides& o) {
  Scenario s = load_scenario(config);
  apply(o, s.config);
  const TrajectoryLog log = run(s.config);
  write_run(out, s, log);
  std::cout << summary_text(log.summary);
  if (!log.summary.ok) {
    std::cerr << "run failed: " << log.summary.error << "\n";
    return 2;
  }
  return 0;
}

int cmd_campaign(const std::string& config, const std::string& out,
                 const Overrides& o) {
  std::vector<Scenario> list = load_campaign(config);
  std::vector<ScenarioConfig> configs;
  for (Scenario& s : list) {
    apply(o, s.config);
    configs.push_back(s.config);
  }
  const std::vector<TrajectoryLog> logs = campaign(configs, o.parallel);
  std::ostringstream table;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %-7s %14s %14s %12s %8s %8s\n",
                "name", "status", "terminal_oe", "max_wi", "fit_slope",
                "fit_r2", "contact");
  table << line;
  bool failed = false;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const RunSummary& r = logs[i].summary;
    failed = failed || !r.ok;
    if (!logs[i].rows.empty()) write_run(fs::path(out) / r.name, list[i], logs[i]);
    std::snprintf(line, sizeof line, "%-28s %-7s %14.6g %14.6g %12.5g %8.4f %8s\n",
                  r.name.c_str(), r.ok ? "ok" : "failed", r.terminal_error,
                  r.max_actuator_speed, r.fit_slope, r.fit_r2,
                  r.contact_lost ? "lost" : "kept");
    table << line;
    if (!r.ok) table << "  error: " << r.error << "\n";
  }
  fs::create_directories(out);
  write_text(fs::path(out) / "summary.txt", table.str());
  std::cout << table.str();
  return failed ? 2 : 0;
}

void print_check(const GainCheck& c) {
  std::cout << "gain_check = " << (c.pass ? "PASS" : "FAIL") << "\n"
            << "  kI_upper = " << fmt(c.kI_upper) << "  (kI slack " << fmt(c.kI_slack) << ")\n"
            << "  k1 = " << fmt(c.k1) << "  k2 = " << fmt(c.k2)
            << "  kp_floor = " << fmt(c.kp_floor) << "  (kp slack " << fmt(c.kp_slack) << ")\n";
}

void print_bounds(const MorseBounds& b) {
  std::cout << "mu_min = " << fmt(b.mu_min) << "  mu_max = " << fmt(b.mu_max)
            << "  theta = " << fmt(b.theta) << "  delta = " << fmt(b.delta()) << "\n";
}

void print_equilibrium(const Scenario& s) {
  const RobotParams& p = s.config.params;
  if (p.barycentric()) {
    const EquilibriumReport r = relative_equilibrium(
        p, s.config.incline, Vec3::Zero(), s.config.disturbance);
    std::cout << "equilibrium at " << fmt(s.config.incline / kDeg) << " deg: "
              << (r.exists ? "exists" : "none") << "\n"
              << "  beta_max = " << fmt(r.beta_max / kDeg) << " deg\n";
    if (r.exists) {
      std::cout << "  actuator axis = " << fmt(r.attitude.x()) << " "
                << fmt(r.attitude.y()) << " " << fmt(r.attitude.z())
                << "  residual = " << fmt(r.residual) << "\n";
    }
    return;
  }
  const WitnessReport w = momentum_unboundedness_witness(
      p, s.config.incline, Vec3::Zero(), s.config.disturbance);
  std::cout << "momentum actuators: constant moment to absorb = "
            << fmt(w.magnitude) << " N m\n";
  if (w.unbounded) {
    std::cout << "  warning: actuator momentum grows without bound while the "
                 "output is held\n";
  }
  for (std::size_t i = 0; i < w.spin_rate_slopes.size(); ++i) {
    std::cout << "  wheel " << i + 1 << " spin-rate slope = "
              << fmt(w.spin_rate_slopes[i]) << " rad/s^2\n";
  }
}

int cmd_certify(const std::string& config, const Overrides& o) {
  Scenario s = load_scenario(config);
  apply(o, s.config);
  const Simulator sim(s.config);
  const RobotParams& p = sim.truth();
  const MorseBounds b = morse_bounds(p, s.cert.k_s);
  print_bounds(b);
  print_check(gain_check(s.config.gains, b));
  SamplingOptions opt;
  opt.k_s = s.cert.k_s;
  opt.k_a = s.cert.k_a;
  opt.samples = s.cert.samples;
  opt.parallel = o.parallel;
  opt.nominal = &sim.nominal();
  opt.disturbance = s.config.disturbance;
  const LyapunovCertificate c = certificate(p, s.config.gains, b, opt);
  std::cout << "certificate = " << (c.pass ? "PASS" : "FAIL") << "\n"
            << "  lambda_min(P_l) = " << fmt(c.lmin_P_l)
            << "  lambda_max(P_u) = " << fmt(c.lmax_P_u) << "\n"
            << "  lambda_min(Q_l) = " << fmt(c.lmin_Q_l)
            << "  lambda_min(Q_u) = " << fmt(c.lmin_Q_u)
            << "  lambda_max(Q_u) = " << fmt(c.lmax_Q_u) << "\n"
            << "  design_ratio = " << fmt(c.design_ratio)
            << "  p_ratio = " << fmt(c.p_ratio)
            << "  q_ratio = " << fmt(c.q_ratio) << "\n";
  for (const std::string& r : c.reasons) std::cout << "  reason: " << r << "\n";
  std::cout << "constants:\n";
  for (const auto& [name, k] : c.constants) {
    std::cout << "  " << name << " = " << fmt(k.value) << " ("
              << to_string(k.provenance) << ")\n";
  }
  print_equilibrium(s);
  return 0;
}

int cmd_synthesize(const std::string& config, const Overrides& o) {
  Scenario s = load_scenario(config);
  apply(o, s.config);
  const MorseBounds b = morse_bounds(s.config.params, s.cert.k_s);
  print_bounds(b);
  const ControllerGains k = gain_synthesize(b, s.cert.target);
  std::cout << "kp = " << fmt(k.kp) << "  kd = " << fmt(k.kd)
            << "  kI = " << fmt(k.kI) << "\n";
  print_check(gain_check(k, b));
  return 0;
}

int cmd_equilibrium(const std::string& config) {
  const Scenario s = load_scenario(config);
  print_equilibrium(s);
  const RobotParams& p = s.config.params;
  if (p.barycentric()) {
    throw_if_missing(relative_equilibrium(p, s.config.incline, Vec3::Zero(),
                                          s.config.disturbance));
  }
  return 0;
}

int cmd_plot(const std::string& log, const std::string& out) {
  const CsvTable t = read_csv(log);
  const std::string dir = out.empty() ? fs::path(log).parent_path().string() : out;
  for (const std::string& f : plot_log(t, dir.empty() ? "." : dir)) {
    std::cout << f << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rolling-sphere simulation, certification and plotting"};
  // --h is the step size, so help is long-form only.
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1, 1);
  std::string config, out = "out", log;
  Overrides o;
  std::uint64_t seed = 0;
  double h = 0, duration = 0, perturb = 0;

  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", config, "scenario file or shipped scenario name")
        ->required();
  };
  auto add_overrides = [&](CLI::App* c) {
    c->add_option("--seed", seed, "perturbation seed");
    c->add_option("--h", h, "step size [s]");
    c->add_option("--duration", duration, "duration [s]");
    c->add_option("--perturb", perturb, "parameter perturbation fraction");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "simulate one scenario");
  add_config(run_cmd);
  add_overrides(run_cmd);
  run_cmd->add_option("--out", out, "output directory");

  CLI::App* camp = app.add_subcommand("campaign", "simulate a list of scenarios");
  add_config(camp);
  add_overrides(camp);
  camp->add_option("--out", out, "output directory");
  camp->add_option("--parallel", o.parallel, "concurrent runs")
      ->check(CLI::PositiveNumber);

  CLI::App* cert = app.add_subcommand("certify", "gain check, certificate and equilibrium report");
  add_config(cert);
  add_overrides(cert);
  cert->add_option("--parallel", o.parallel, "sampling threads")
      ->check(CLI::PositiveNumber);

  CLI::App* synth = app.add_subcommand("synthesize-gains", "smallest k_d gains that pass");
  add_config(synth);

  CLI::App* eq = app.add_subcommand("equilibrium", "relative equilibrium at the configured incline");
  add_config(eq);

  CLI::App* plot = app.add_subcommand("plot", "SVG plots from a trajectory CSV");
  plot->add_option("--log,log", log, "trajectory.csv written by run")->required();
  plot->add_option("--out", out, "output directory (default: next to the log)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) std::cerr << app.help();
    return code == 0 ? 0 : 1;
  }

  for (CLI::App* c : {run_cmd, camp, cert}) {
    if (!c->parsed()) continue;
    if (c->count("--seed")) o.seed = seed;
    if (c->count("--h")) o.h = h;
    if (c->count("--duration")) o.duration = duration;
    if (c->count("--perturb")) o.perturb = perturb;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(config, out, o);
    if (camp->parsed()) return cmd_campaign(config, out, o);
    if (cert->parsed()) return cmd_certify(config, o);
    if (synth->parsed()) return cmd_synthesize(config, o);
    if (eq->parsed()) return cmd_equilibrium(config);
    if (plot->parsed()) return cmd_plot(log, plot->count("--out") ? out : "");
  } catch (const ValidationError& e) {
    std::cerr << "error: " << (config.empty() ? log : config) << ": " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
