#include "sphero/simulation.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "sphero/errors.h"

namespace sphero {
namespace {

// Increment of the flattened state. Rotations are carried as exponential
// coordinates relative to the start of the step.
struct Delta {
  Vec3 th{Vec3::Zero()};
  std::vector<Vec3> th_i;
  Vec3 w{Vec3::Zero()};
  std::vector<Vec3> w_i;
  Vec3 o{Vec3::Zero()};
  Vec3 o_I{Vec3::Zero()};

  explicit Delta(std::size_t n) : th_i(n, Vec3::Zero()), w_i(n, Vec3::Zero()) {}

  void axpy(double a, const Delta& d) {
    th += a * d.th;
    w += a * d.w;
    o += a * d.o;
    o_I += a * d.o_I;
    for (std::size_t i = 0; i < th_i.size(); ++i) {
      th_i[i] += a * d.th_i[i];
      w_i[i] += a * d.w_i[i];
    }
  }
};

// Wheel velocities leave their axes at O(h^2) inside a step; every stage is
// returned to the constraint manifold before the dynamics see it.
void project_wheels(SystemState& s, const RobotParams& p, double tol) {
  for (std::size_t i = 0; i < s.actuators.size(); ++i) {
    if (p.actuators[i].kind != ActuatorClass::kReactionWheelPair) continue;
    ActuatorState& a = s.actuators[i];
    const Vec3 axis = s.R * p.actuators[i].axis;
    const Vec3 rel = a.w - s.w;
    if (rel.cross(axis).norm() > tol) a.w = s.w + rel.dot(axis) * axis;
    if (a.R.col(2).cross(axis).norm() > tol) {
      a.R = Eigen::Quaterniond::FromTwoVectors(a.R.col(2), axis)
                .toRotationMatrix() *
            a.R;
    }
  }
}

SystemState apply(const SystemState& base, const Delta& d,
                  const RobotParams& p) {
  SystemState s = base;
  s.R = exp_so3(d.th) * base.R;
  s.w = base.w + d.w;
  s.o = base.o + d.o;
  s.o_I = base.o_I + d.o_I;
  for (std::size_t i = 0; i < s.actuators.size(); ++i) {
    s.actuators[i].R = exp_so3(d.th_i[i]) * base.actuators[i].R;
    s.actuators[i].w = base.actuators[i].w + d.w_i[i];
  }
  project_wheels(s, p, 0.0);
  return s;
}

// Rates at a stage whose rotations sit at exponential coordinates `at`.
Delta rates(const SystemState& s, const StageEval& ev, const Delta& at,
            double r) {
  Delta k(s.actuators.size());
  k.th = dexp_inv(at.th, s.w);
  k.w = ev.acc.w_dot;
  k.o = noslip_velocity(s.w, r);
  k.o_I = ev.o_I_dot;
  for (std::size_t i = 0; i < s.actuators.size(); ++i) {
    k.th_i[i] = dexp_inv(at.th_i[i], s.actuators[i].w);
    k.w_i[i] = ev.acc.w_dot_actuators[i];
  }
  return k;
}

bool finite(const SystemState& s) {
  if (!(s.o.allFinite() && s.R.allFinite() && s.w.allFinite() &&
        s.o_I.allFinite())) {
    return false;
  }
  for (const auto& a : s.actuators) {
    if (!(a.R.allFinite() && a.w.allFinite())) return false;
  }
  return true;
}

void check_positive(double v, const char* field) {
  if (!(std::isfinite(v) && v > 0.0)) {
    throw ValidationError(field, "must be positive");
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void validate(const ScenarioConfig& c) {
  validate(c.params);
  check_positive(c.h, "h");
  check_positive(c.duration, "duration");
  if (c.decimation < 1) {
    throw ValidationError("decimation", "must be at least 1");
  }
  if (!(c.perturb >= 0.0 && c.perturb < 1.0)) {
    throw ValidationError("perturb", "must lie in [0, 1)");
  }
  check_positive(c.gains.kp, "gains.kp");
  check_positive(c.gains.kd, "gains.kd");
  check_positive(c.gains.kI, "gains.kI");
  const ReferenceTrajectory& r = c.reference;
  switch (r.kind) {
    case ReferenceKind::kCircle:
      check_positive(r.radius, "reference.radius");
      check_positive(r.period, "reference.period");
      break;
    case ReferenceKind::kSinusoid:
      check_positive(r.wavelength, "reference.wavelength");
      check_positive(r.speed, "reference.speed");
      if (!std::isfinite(r.amplitude)) {
        throw ValidationError("reference.amplitude", "must be finite");
      }
      break;
    case ReferenceKind::kCustom:
      if (!r.path) throw ValidationError("reference.path", "not loaded");
      break;
    case ReferenceKind::kFixedPoint:
      break;
  }
  if (c.params.reaction_wheels() &&
      c.initial.wheel_spin.size() != c.params.actuators.size()) {
    throw ValidationError("initial.wheel_spin", "one rate per wheel pair");
  }
}

RobotParams perturbed(const RobotParams& p, double fraction,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-fraction, fraction);
  auto scale = [&](double v) { return v * (1.0 + dist(rng)); };
  RobotParams q = p;
  q.shell_mass = scale(p.shell_mass);
  for (int j = 0; j < 3; ++j) q.shell_inertia(j, j) = scale(p.shell_inertia(j, j));
  for (ActuatorParams& a : q.actuators) {
    a.mass = scale(a.mass);
    if (a.kind == ActuatorClass::kReactionWheelPair) {
      const double ip = scale(a.inertia(0, 0));
      a.inertia(0, 0) = ip;
      a.inertia(1, 1) = ip;
      a.inertia(2, 2) = scale(a.inertia(2, 2));
    } else {
      for (int j = 0; j < 3; ++j) a.inertia(j, j) = scale(a.inertia(j, j));
    }
  }
  q.shell_inertia = 0.5 * (q.shell_inertia + q.shell_inertia.transpose());
  validate(q);
  return q;
}

Simulator::Simulator(const ScenarioConfig& config) : config_(config) {
  config_.params.e_g = incline_direction(config.incline);
  config_.params.e_g0 = incline_direction(config.nominal_incline);
  config_.reference.height = config_.params.radius;
  validate(config_);
  truth_ = config_.params;
  nominal_ = perturbed(truth_, config_.perturb, config_.seed);
}

SystemState Simulator::initial_state() const {
  const InitialConditions& ic = config_.initial;
  SystemState s;
  s.o = Vec3(ic.o.x(), ic.o.y(), truth_.radius);
  s.w = ic.w;
  s.actuators.resize(truth_.actuators.size());
  for (std::size_t i = 0; i < truth_.actuators.size(); ++i) {
    const ActuatorParams& a = truth_.actuators[i];
    if (a.kind == ActuatorClass::kReactionWheelPair) {
      const Vec3 axis = s.R * a.axis;
      s.actuators[i].R = s.R * align_e3_to(a.axis);
      s.actuators[i].w = s.w - axis.dot(s.w) * axis + ic.wheel_spin[i] * axis;
    } else {
      s.actuators[i].w = ic.actuator_w;
    }
  }
  return s;
}

StageEval Simulator::evaluate(const SystemState& s, double t) const {
  StageEval ev;
  const double r = truth_.radius;
  ev.ref = sample(config_.reference, t);
  ev.w_ref = omega_ref(ev.ref.o_dot, 0.0, r);
  ev.err = error_state(s, ev.ref.o, ev.w_ref);
  const std::size_t n = truth_.actuators.size();
  if (config_.controller_enabled) {
    const SphereTerms nt = sphere_terms(s, nominal_, nominal_.e_g0);
    ev.control = pid_control(ev.err, s, nominal_, config_.gains, nt);
    ev.o_I_dot = integrator_rate(ev.err, s, nt);
  } else {
    ev.control.tau.assign(n, Vec3::Zero());
    if (truth_.reaction_wheels()) ev.control.u.assign(n, 0.0);
  }
  ev.acc = accelerations(s, truth_, ev.control.tau, config_.disturbance);
  return ev;
}

SystemState Simulator::step(const SystemState& s, double t) const {
  return step(s, t, evaluate(s, t));
}

SystemState Simulator::step(const SystemState& s, double t,
                            const StageEval& first) const {
  const double h = config_.h;
  const double r = truth_.radius;
  const std::size_t n = s.actuators.size();
  const Delta zero(n);

  const Delta k1 = rates(s, first, zero, r);
  Delta d2(n);
  d2.axpy(0.5 * h, k1);
  SystemState y2 = apply(s, d2, truth_);
  const Delta k2 = rates(y2, evaluate(y2, t + 0.5 * h), d2, r);
  Delta d3(n);
  d3.axpy(0.5 * h, k2);
  SystemState y3 = apply(s, d3, truth_);
  const Delta k3 = rates(y3, evaluate(y3, t + 0.5 * h), d3, r);
  Delta d4(n);
  d4.axpy(h, k3);
  SystemState y4 = apply(s, d4, truth_);
  const Delta k4 = rates(y4, evaluate(y4, t + h), d4, r);

  Delta d(n);
  d.axpy(h / 6.0, k1);
  d.axpy(h / 3.0, k2);
  d.axpy(h / 3.0, k3);
  d.axpy(h / 6.0, k4);
  SystemState out = s;
  out.R = exp_so3(d.th) * s.R;
  out.w = s.w + d.w;
  out.o = s.o + d.o;
  out.o_I = s.o_I + d.o_I;
  for (std::size_t i = 0; i < n; ++i) {
    out.actuators[i].R = exp_so3(d.th_i[i]) * s.actuators[i].R;
    out.actuators[i].w = s.actuators[i].w + d.w_i[i];
  }
  out.o.z() = r;
  if (!finite(out)) {
    throw NumericalError(NumericalErrorKind::kNonFinite,
                         "state became non-finite at t = " + fmt(t + h));
  }
  if (orthonormality_error(out.R) > 1e-9) out.R = project_so3(out.R);
  for (std::size_t i = 0; i < n; ++i) {
    ActuatorState& a = out.actuators[i];
    if (orthonormality_error(a.R) > 1e-9) a.R = project_so3(a.R);
  }
  project_wheels(out, truth_, 1e-10);
  return out;
}

SystemState step(const SystemState& s, const ScenarioConfig& config,
                 double t) {
  return Simulator(config).step(s, t);
}

namespace {

LogRow make_row(const Simulator& sim, const SystemState& s, double t,
                const StageEval& ev) {
  LogRow row;
  row.t = t;
  row.o = s.o;
  row.o_ref = ev.ref.o;
  row.o_e = ev.err.o_e;
  row.w_e = ev.err.w_e;
  row.o_I = s.o_I;
  const RobotParams& p = sim.truth();
  for (std::size_t i = 0; i < s.actuators.size(); ++i) {
    row.w_i.push_back(s.actuators[i].w);
    if (p.reaction_wheels()) row.spin.push_back(wheel_spin_rate(s, p, i));
  }
  row.tau = ev.control.tau;
  row.u = ev.control.u;
  row.f_n = constraint_wrench(s, p, ev.acc).normal;
  return row;
}

void summarise(TrajectoryLog& log, double t_end) {
  RunSummary& s = log.summary;
  s.rows = log.rows.size();
  if (log.rows.empty()) return;
  s.terminal_error = log.rows.back().o_e.norm();
  s.terminal_o_I = log.rows.back().o_I;
  for (const LogRow& row : log.rows) {
    for (const Vec3& w : row.w_i) {
      s.max_actuator_speed = std::max(s.max_actuator_speed, w.norm());
    }
    for (double w : row.spin) {
      s.max_wheel_spin = std::max(s.max_wheel_spin, std::abs(w));
    }
    if (!(row.f_n > 0.0)) s.contact_lost = true;
  }
  fit_exponential(log, t_end, 0.6, &s.fit_slope, &s.fit_r2);
}

}  // namespace

void fit_exponential(const TrajectoryLog& log, double t_end, double fraction,
                     double* slope, double* r2) {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const LogRow& row : log.rows) {
    const double e = row.o_e.norm();
    if (row.t > fraction * t_end || !(e > 0.0)) continue;
    const double y = std::log(e);
    n += 1;
    sx += row.t;
    sy += y;
    sxx += row.t * row.t;
    sxy += row.t * y;
    syy += y * y;
  }
  *slope = 0.0;
  *r2 = 0.0;
  if (n < 3) return;
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  const double cxy = sxy - sx * sy / n;
  if (!(vx > 0.0)) return;
  *slope = cxy / vx;
  *r2 = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
}

TrajectoryLog run(const ScenarioConfig& config) {
  TrajectoryLog log;
  log.summary.name = config.name;
  log.kind = config.params.actuators.empty() ? ActuatorClass::kBarycentricCart
                                             : config.params.actuators[0].kind;
  log.actuators = config.params.actuators.size();
  const Simulator sim(config);
  const double h = sim.config().h;
  const double t_end = sim.config().duration;
  const long steps = std::lround(t_end / h);
  const int dec = sim.config().decimation;
  SystemState s = sim.initial_state();
  double t = 0.0;
  try {
    for (long k = 0; k <= steps; ++k) {
      t = k * h;
      const StageEval ev = sim.evaluate(s, t);
      if (k % dec == 0) log.rows.push_back(make_row(sim, s, t, ev));
      if (k == steps) break;
      s = sim.step(s, t, ev);
    }
  } catch (const NumericalError& e) {
    log.summary.ok = false;
    log.summary.error = std::string(e.what()) + " (t = " + fmt(t) + ")";
  }
  summarise(log, t_end);
  return log;
}

std::vector<std::string> csv_header(const TrajectoryLog& log) {
  std::vector<std::string> h = {"t",   "ox",  "oy",  "orefx", "orefy",
                                "oex", "oey", "wex", "wey",   "wez"};
  const bool wheels = log.kind == ActuatorClass::kReactionWheelPair;
  for (std::size_t i = 1; i <= log.actuators; ++i) {
    const std::string k = std::to_string(i);
    if (wheels) {
      h.push_back("psidot_" + k);
    } else {
      for (const char* c : {"_x", "_y", "_z"}) h.push_back("w" + k + c);
    }
  }
  for (std::size_t i = 1; i <= log.actuators; ++i) {
    const std::string k = std::to_string(i);
    if (wheels) {
      h.push_back("u_" + k);
    } else {
      for (const char* c : {"_x", "_y", "_z"}) h.push_back("tau" + k + c);
    }
  }
  for (const char* c : {"oIx", "oIy", "fN"}) h.push_back(c);
  return h;
}

void write_csv(const TrajectoryLog& log, std::ostream& out) {
  const std::vector<std::string> header = csv_header(log);
  for (std::size_t j = 0; j < header.size(); ++j) {
    out << (j ? "," : "") << header[j];
  }
  out << '\n';
  const bool wheels = log.kind == ActuatorClass::kReactionWheelPair;
  for (const LogRow& r : log.rows) {
    std::vector<double> v = {r.t,      r.o.x(),   r.o.y(),   r.o_ref.x(),
                             r.o_ref.y(), r.o_e.x(), r.o_e.y(), r.w_e.x(),
                             r.w_e.y(), r.w_e.z()};
    for (std::size_t i = 0; i < log.actuators; ++i) {
      if (wheels) {
        v.push_back(r.spin[i]);
      } else {
        v.insert(v.end(), r.w_i[i].data(), r.w_i[i].data() + 3);
      }
    }
    for (std::size_t i = 0; i < log.actuators; ++i) {
      if (wheels) {
        v.push_back(r.u.empty() ? 0.0 : r.u[i]);
      } else {
        v.insert(v.end(), r.tau[i].data(), r.tau[i].data() + 3);
      }
    }
    v.push_back(r.o_I.x());
    v.push_back(r.o_I.y());
    v.push_back(r.f_n);
    for (std::size_t j = 0; j < v.size(); ++j) {
      out << (j ? "," : "") << fmt(v[j]);
    }
    out << '\n';
  }
}

std::string summary_text(const RunSummary& s) {
  std::ostringstream o;
  o << "name = " << s.name << '\n'
    << "status = " << (s.ok ? "ok" : "failed") << '\n';
  if (!s.ok) o << "error = " << s.error << '\n';
  o << "rows = " << s.rows << '\n'
    << "terminal_position_error = " << fmt(s.terminal_error) << '\n'
    << "max_actuator_speed = " << fmt(s.max_actuator_speed) << '\n'
    << "max_wheel_spin = " << fmt(s.max_wheel_spin) << '\n'
    << "fit_slope = " << fmt(s.fit_slope) << '\n'
    << "fit_r2 = " << fmt(s.fit_r2) << '\n'
    << "contact_lost = " << (s.contact_lost ? "true" : "false") << '\n'
    << "terminal_oI = " << fmt(s.terminal_o_I.x()) << ' '
    << fmt(s.terminal_o_I.y()) << ' ' << fmt(s.terminal_o_I.z()) << '\n';
  return o.str();
}

std::vector<TrajectoryLog> campaign(const std::vector<ScenarioConfig>& configs,
                                    int parallel) {
  if (configs.empty()) {
    throw ValidationError("scenarios", "campaign needs at least one scenario");
  }
  std::vector<TrajectoryLog> out(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        out[i] = run(configs[i]);
      } catch (const std::exception& e) {
        out[i].summary.name = configs[i].name;
        out[i].summary.ok = false;
        out[i].summary.error = e.what();
      }
    }
  };
  const int threads =
      std::max(1, std::min<int>(parallel, static_cast<int>(configs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace sphero
