// Acceptance checks AC1..AC10. Prints one PASS/FAIL line per criterion and
// exits non-zero if any failed. `acceptance AC6` runs a single criterion.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.h"
#include "sphero/certification.h"
#include "sphero/config.h"
#include "sphero/controller.h"
#include "sphero/simulation.h"
#include "sphero/svg.h"

using namespace sphero;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string format(const char* f, double a = 0, double b = 0, double c = 0,
                   double d = 0, double e = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d, e);
  return buf;
}

// AC1 ----------------------------------------------------------------------

Outcome geometry() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  auto track = [&](double v) { worst = std::max(worst, v); };
  for (int i = 0; i < 1000; ++i) {
    const Vec3 u = oracle::rand_vec(rng, 3.0);
    const Vec3 v = oracle::rand_vec(rng, 3.0);
    track((vee(hat(u)) - u).norm());
    track((hat(u) * v - u.cross(v)).norm());
    const Mat3 r = exp_so3(u);
    track((r.transpose() * r - Mat3::Identity()).norm());
    track(std::abs(r.determinant() - 1.0));
    track((exp_so3(0.4 * u) * exp_so3(0.6 * u) - r).norm());
    track((exp_so3(-u) - r.transpose()).norm());
    const Mat3 q = oracle::rand_rot(rng);
    track((q * r * q.transpose() - exp_so3(q * u)).norm());

    const Mat3 inertia = q * (Vec3(0.1, 0.1, 0.1) + oracle::rand_vec(rng, 1.0).cwiseAbs())
                                 .asDiagonal() * q.transpose();
    const Vec3 w = oracle::rand_vec(rng, 2.0);
    const Vec3 dv = oracle::rand_vec(rng, 1.0);
    const Vec3 dw = oracle::rand_vec(rng, 1.0);
    const Vec3 z = Vec3::Zero();
    const ConnectionKind left{Invariance::kLeft, Frame::kBody};
    const ConnectionKind right{Invariance::kRight, Frame::kSpatial};
    const ConnectionKind bi{Invariance::kBi, Frame::kBody};
    // Torsion: nabla_u v - nabla_v u = [u, v] in the matching frame.
    track((inertia.ldlt().solve(covariant_derivative(left, inertia, u, v, z) -
                                covariant_derivative(left, inertia, v, u, z)) -
           u.cross(v)).norm() / std::max(1.0, u.cross(v).norm()));
    track((inertia.ldlt().solve(covariant_derivative(right, inertia, u, v, z) -
                                covariant_derivative(right, inertia, v, u, z)) +
           u.cross(v)).norm() / std::max(1.0, u.cross(v).norm()));
    track((covariant_derivative(bi, inertia, u, v, z) -
           covariant_derivative(bi, inertia, v, u, z) - u.cross(v)).norm());
    // Metric compatibility along u for the fields v and w.
    for (const ConnectionKind& k : {left, right}) {
      const double lhs = w.dot(covariant_derivative(k, inertia, u, v, dv)) +
                         v.dot(covariant_derivative(k, inertia, u, w, dw));
      const double rhs = dv.dot(inertia * w) + v.dot(inertia * dw);
      track(std::abs(lhs - rhs));
    }
    track(std::abs(w.dot(covariant_derivative(bi, inertia, u, v, dv)) +
                   v.dot(covariant_derivative(bi, inertia, u, w, dw)) -
                   dv.dot(w) - v.dot(dw)));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst < 1e-10 && secs < 1.0,
          format("max residual %.2e over 1000 cases per property, %.3f s", worst, secs)};
}

// AC2 ----------------------------------------------------------------------

// Free asymmetric body integrated with a Munthe-Kaas RK4 loop around the
// left-invariant connection: I Omega_dot = -nabla_Omega Omega at d = 0.
Outcome free_body() {
  const auto t0 = std::chrono::steady_clock::now();
  const Mat3 inertia = oracle::diag(0.0213, 0.0305, 0.0428);
  const ConnectionKind left{Invariance::kLeft, Frame::kBody};
  auto omega_dot = [&](const Vec3& w) {
    return Vec3(-inertia.ldlt().solve(
        covariant_derivative(left, inertia, w, w, Vec3::Zero())));
  };
  Mat3 R = exp_so3(Vec3(0.3, -0.2, 0.5));
  Vec3 W(1.2, -3.0, 0.7);
  const Vec3 pi0 = R * inertia * W;
  const double h = 1e-4;
  double worst = 0.0;
  for (int k = 0; k < 100000; ++k) {
    // Stage quantities: theta, Omega; rates (dexp_inv(theta, R Omega), Omega_dot).
    auto rate = [&](const Vec3& theta, const Vec3& w) {
      const Mat3 rs = exp_so3(theta) * R;
      return std::make_pair(dexp_inv(theta, rs * w), omega_dot(w));
    };
    const auto k1 = rate(Vec3::Zero(), W);
    const auto k2 = rate(0.5 * h * k1.first, W + 0.5 * h * k1.second);
    const auto k3 = rate(0.5 * h * k2.first, W + 0.5 * h * k2.second);
    const auto k4 = rate(h * k3.first, W + h * k3.second);
    const Vec3 theta = h / 6 * (k1.first + 2 * k2.first + 2 * k3.first + k4.first);
    W += h / 6 * (k1.second + 2 * k2.second + 2 * k3.second + k4.second);
    R = exp_so3(theta) * R;
    worst = std::max(worst, (R * inertia * W - pi0).norm());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst < 1e-8 && secs < 5.0,
          format("max |R I W - pi0| = %.2e over 10 s at h = 1e-4, %.2f s", worst, secs)};
}

// AC3 ----------------------------------------------------------------------

Outcome conservation() {
  std::string detail;
  bool ok = true;
  const std::pair<const char*, RobotParams> robots[] = {
      {"cart", oracle::cart()}, {"gyro", oracle::gyro()}, {"wheels", oracle::wheels()}};
  for (const auto& [name, p] : robots) {
    ScenarioConfig c;
    c.params = p;
    c.controller_enabled = false;
    c.h = 1e-4;
    c.initial.w = Vec3(-0.4, 0.6, 1.0);
    c.initial.actuator_w = Vec3(0.8, -0.5, 0.3);
    c.initial.wheel_spin = {6.0, -4.0, 3.0};
    const Simulator sim(c);
    SystemState s = sim.initial_state();
    const double e0 = oracle::energy(s, p);
    double drift = 0.0, mismatch = 0.0;
    for (int k = 1; k <= 100000; ++k) {
      s = sim.step(s, (k - 1) * c.h);
      if (k % 100 == 0) {
        const double e = oracle::energy(s, p);
        drift = std::max(drift, std::abs(e - e0) / std::abs(e0));
        mismatch = std::max(mismatch, std::abs(mechanical_energy(s, p) - e) / std::abs(e0));
      }
    }
    ok = ok && drift < 1e-5 && mismatch < 1e-10;
    detail += std::string(name) +
              format(" drift %.2e, oracle gap %.1e; ", drift, mismatch);
  }
  return {ok, detail + "relative, 10 s at h = 1e-4"};
}

// AC4 ----------------------------------------------------------------------

Outcome split_identity() {
  std::mt19937_64 rng(104);
  double worst = 0.0;
  for (RobotParams p : {oracle::cart(), oracle::gyro(), oracle::wheels()}) {
    for (int i = 0; i < 1000; ++i) {
      const SystemState s = oracle::rand_state(rng, p);
      Vec3 o_ref = s.o + oracle::rand_vec(rng, 2.0);
      o_ref.z() = s.o.z();
      const ErrorState e = error_state(s, o_ref, oracle::rand_vec(rng, 2.0));
      const SphereTerms t = sphere_terms(s, p, p.e_g);
      const Vec3 wd = oracle::rand_vec(rng, 5.0);
      worst = std::max(worst, (split_lhs(e, wd, s, t) - raw_lhs(e, wd, t) -
                               tau_e_split(e, s, t)).norm());
    }
  }
  return {worst < 1e-9,
          format("max residual %.2e over 1000 states per actuator class", worst)};
}

// AC5 ----------------------------------------------------------------------

Outcome equilibrium() {
  const RobotParams p = oracle::cart();
  const double beta = max_inclination(p);
  const double deg = beta / oracle::kDeg;
  const bool below = relative_equilibrium(p, beta - 0.5 * oracle::kDeg, Vec3::Zero(),
                                          Vec3::Zero()).exists;
  const bool above = relative_equilibrium(p, beta + 0.5 * oracle::kDeg, Vec3::Zero(),
                                          Vec3::Zero()).exists;
  return {std::abs(deg - 25.0) <= 0.1 && below && !above,
          format("beta_max = %.3f deg; exists at -0.5 deg: %g, at +0.5 deg: %g", deg,
                 below, above)};
}

// AC6 / AC7 -----------------------------------------------------------------

struct Metrics {
  RunSummary summary;
  double secs;
  double early_peak;  // max actuator speed over the first two thirds
  double late_peak;   // and over the final third
};

Metrics run_scenario(const std::string& name) {
  const Scenario sc = load_scenario(name);
  const auto t0 = std::chrono::steady_clock::now();
  const TrajectoryLog log = run(sc.config);
  Metrics m{log.summary,
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
            0.0, 0.0};
  const double split = sc.config.duration * 2.0 / 3.0;
  for (const LogRow& r : log.rows) {
    double speed = 0.0;
    if (log.kind == ActuatorClass::kReactionWheelPair) {
      for (double v : r.spin) speed = std::max(speed, std::abs(v));
    } else {
      for (const Vec3& w : r.w_i) speed = std::max(speed, w.norm());
    }
    (r.t <= split ? m.early_peak : m.late_peak) =
        std::max(r.t <= split ? m.early_peak : m.late_peak, speed);
  }
  return m;
}

Outcome cart_reproduction() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"cart_fixed_point", "cart_sinusoid", "cart_circle"}) {
    const Metrics m = run_scenario(name);
    const double bound = std::string(name) == "cart_fixed_point" ? 0.05 : 0.1;
    const bool pass = m.summary.ok && m.summary.terminal_error < bound &&
                      m.summary.max_actuator_speed < 20.0 && m.summary.fit_slope < 0.0 &&
                      m.summary.fit_r2 > 0.9 && m.secs < 10.0;
    ok = ok && pass;
    detail += std::string(name) +
              format(": |o_e(T)| %.3f m (< %.2f), max |w_i| %.1f rad/s, slope %.3f, "
                     "R2 %.2f",
                     m.summary.terminal_error, bound, m.summary.max_actuator_speed,
                     m.summary.fit_slope, m.summary.fit_r2) +
              format(", %.1f s", m.secs) +
              (m.summary.contact_lost ? ", contact lost; " : "; ");
  }
  return {ok, detail};
}

Outcome balanced_reproduction() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"gyro_sinusoid", "gyro_circle", "reaction_wheels_sinusoid",
                           "reaction_wheels_circle"}) {
    const Metrics m = run_scenario(name);
    const bool bounded = std::isfinite(m.late_peak) && m.late_peak <= 1.1 * m.early_peak;
    const bool pass = m.summary.ok && m.summary.terminal_error < 0.1 && bounded;
    ok = ok && pass;
    detail += std::string(name) +
              format(": |o_e(T)| %.3f m, actuator peak %.1f then %.1f rad/s; ",
                     m.summary.terminal_error, m.early_peak, m.late_peak);
  }
  return {ok, detail};
}

// AC8 ----------------------------------------------------------------------

// While the output is held the wheels must absorb a constant moment, so the
// spin vector grows like t times the witness slope at the current attitude.
Outcome witness() {
  const Scenario sc = load_scenario("rw_incline5");
  const ScenarioConfig& c = sc.config;
  const Simulator sim(c);
  SystemState s = sim.initial_state();
  auto spin_norm = [&](const SystemState& x) {
    double v = 0.0;
    for (std::size_t i = 0; i < x.actuators.size(); ++i) {
      v += std::pow(wheel_spin_rate(x, sim.truth(), i), 2);
    }
    return std::sqrt(v);
  };
  const double initial = spin_norm(s);
  double crossed = -1.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0, predicted = 0;
  const int steps = static_cast<int>(std::lround(c.duration / c.h));
  for (int k = 0; k <= steps; ++k) {
    const double t = k * c.h;
    if (k % 100 == 0) {
      const double v = spin_norm(s);
      if (crossed < 0 && v > 3.0 * initial) crossed = t;
      if (t >= 20.0) {
        const WitnessReport w = momentum_unboundedness_witness(
            sim.truth(), c.incline, Vec3::Zero(), c.disturbance, s.R);
        double slope = 0.0;
        for (double x : w.spin_rate_slopes) slope += x * x;
        predicted += std::sqrt(slope);
        n += 1;
        sx += t;
        sy += v;
        sxx += t * t;
        sxy += t * v;
      }
    }
    if (k < steps) s = sim.step(s, t);
  }
  const double fit = (sxy - sx * sy / n) / (sxx - sx * sx / n);
  predicted /= n;
  const WitnessReport at_rest = momentum_unboundedness_witness(
      sim.truth(), c.incline, Vec3::Zero(), c.disturbance);
  const double ratio = fit / predicted;
  return {crossed >= 0 && crossed <= 30.0 && std::abs(ratio - 1.0) <= 0.2,
          format("|spin| passes 3x its initial %.3f rad/s at t = %.1f s; fitted growth "
                 "%.4f rad/s^2 vs predicted %.4f (ratio %.3f); |forcing| = ",
                 initial, crossed, fit, predicted, ratio) +
              format("%.3f N m", at_rest.magnitude)};
}

// AC9 ----------------------------------------------------------------------

bool pd(const Mat3& m) {
  return Eigen::SelfAdjointEigenSolver<Mat3>(m).eigenvalues().minCoeff() > 0.0;
}

Outcome certificate_suite() {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&](double max_delta, MorseBounds* b, double* kd) {
    b->mu_max = std::pow(10.0, -2.0 + 2.0 * u(rng));
    b->mu_min = b->mu_max * (1.0 - max_delta * u(rng));
    b->theta = 1.0;
    *kd = std::pow(10.0, -1.0 + 3.0 * u(rng));
  };
  const int n = 2000;
  // Root identities against independently coded quadratics.
  double root_res = 0.0;
  // Bracketing: Q_l across the k_I bound, then both lower matrices across
  // the k_p boundary max(k1, k2, 2 kd^2 / mu_max).
  int ki_flips = 0, kp_flips = 0;
  for (int i = 0; i < n; ++i) {
    MorseBounds b;
    double kd;
    draw(0.95, &b, &kd);
    const double upper = gain_check({1, kd, 1}, b).kI_upper;
    ControllerGains k{0, kd, upper * (0.01 + 0.98 * u(rng))};
    const double mu = b.mu_max, kd3 = kd * kd * kd;
    const double k1 = gain_k1(k, b), k2 = gain_k2(k, b);
    const double c1 = 4 * b.theta * kd * k.kI / (mu * mu);
    const double c2 = b.theta * k.kI * (mu * mu * k.kI * k.kI + 4 * kd3 * (mu + kd3)) /
                      (kd * mu * mu);
    root_res = std::max(root_res, std::abs(kd * k1 * k1 + k.kI * k1 - c1) /
                                      (kd * k1 * k1 + k.kI * k1 + c1));
    root_res = std::max(root_res,
                        std::abs(kd * kd3 * k2 * k2 - b.theta * k.kI * k.kI * k2 - c2) /
                            (kd * kd3 * k2 * k2 + b.theta * k.kI * k.kI * k2 + c2));

    const double big = 4.0 * kd * kd / b.mu_min;
    const bool q_below = pd(certificate_matrices({big, kd, upper * (1 - 1e-3)}, b).Q_l);
    const bool q_above = pd(certificate_matrices({big, kd, upper * (1 + 1e-3)}, b).Q_l);
    ki_flips += q_below && !q_above;

    const GainCheck g = gain_check(k, b);
    const double edge = std::max({g.k1, g.k2, g.kp_floor});
    k.kp = edge * (1 + 1e-6);
    const CertificateMatrices hi = certificate_matrices(k, b);
    k.kp = edge * (1 - 1e-6);
    const CertificateMatrices lo = certificate_matrices(k, b);
    kp_flips += (pd(hi.P_l) && pd(hi.Q_l)) && !(pd(lo.P_l) && pd(lo.Q_l));
  }
  // Synthesised gains re-pass.
  int synth_ok = 0;
  const int n_synth = 300;
  for (int i = 0; i < n_synth; ++i) {
    MorseBounds b;
    double kd;
    draw(0.45, &b, &kd);
    const double target = std::pow(10.0, -4.0 + 3.0 * u(rng));
    const ControllerGains k = gain_synthesize(b, target);
    const CertificateMatrices m = certificate_matrices(k, b);
    synth_ok += gain_check(k, b).pass &&
                Eigen::SelfAdjointEigenSolver<Mat3>(m.Q_l).eigenvalues().minCoeff() >=
                    target * (1 - 1e-9);
  }
  // Contraction equality at the extremal eigenvectors.
  double tight = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double a = 0.01 + 3 * u(rng), c = 0.01 + 3 * u(rng);
    const double off = (2 * u(rng) - 1) * 0.99 * std::sqrt(a * c);
    Eigen::Matrix2d m;
    m << a, off, off, c;
    const double lmin = 0.5 * (a + c) - std::hypot(0.5 * (a - c), off);
    Eigen::Vector2d v = std::abs(off) > 1e-14 ? Eigen::Vector2d(off, lmin - a)
                                              : Eigen::Vector2d(a < c ? 1 : 0, a < c ? 0 : 1);
    v.normalize();
    const Contraction k = morse_contraction_check(m);
    const Eigen::Matrix2d d = k.kappa * m - Eigen::Matrix2d::Identity();
    tight = std::max(tight, std::abs((d * v).norm() - k.delta));
    tight = std::max(tight, (d * Eigen::Vector2d(-v.y(), v.x())).norm());
    tight = std::max(tight, std::abs(k.norm - k.delta));
  }
  const bool ok = root_res < 1e-9 && ki_flips == n && kp_flips == n &&
                  synth_ok == n_synth && tight < 1e-12;
  return {ok, format("root residual %.1e; Q_l flips at the k_I bound in %g/%g; "
                     "P_l and Q_l flip at the k_p bound in %g/%g; ",
                     root_res, ki_flips, n, kp_flips, n) +
                  format("synthesised gains re-pass %g/%g; contraction gap %.1e",
                         synth_ok, n_synth, tight)};
}

// AC10 ---------------------------------------------------------------------

Outcome determinism() {
  bool ok = true;
  std::string detail;
  const fs::path root = fs::temp_directory_path() / "sphero_acceptance_ac10";
  fs::remove_all(root);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  for (const char* name : {"cart_circle", "reaction_wheels_sinusoid"}) {
    std::string files[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / name / std::to_string(rep);
      fs::create_directories(dir);
      Scenario sc = load_scenario(name);
      sc.config.duration = std::min(sc.config.duration, 20.0);
      {
        std::ofstream out(dir / "trajectory.csv", std::ios::binary);
        write_csv(run(sc.config), out);
      }
      for (const std::string& f :
           plot_log(read_csv((dir / "trajectory.csv").string()), dir.string())) {
        files[rep] += slurp(f);
      }
      files[rep] += slurp(dir / "trajectory.csv");
    }
    const bool same = !files[0].empty() && files[0] == files[1];
    ok = ok && same;
    detail += std::string(name) + (same ? ": identical" : ": differs") +
              format(" (%g bytes); ", static_cast<double>(files[0].size()));
  }
  return {ok, detail + "CSV and four SVG files compared"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::pair<const char*, std::function<Outcome()>> checks[] = {
      {"AC1", geometry},          {"AC2", free_body},
      {"AC3", conservation},      {"AC4", split_identity},
      {"AC5", equilibrium},       {"AC6", cart_reproduction},
      {"AC7", balanced_reproduction}, {"AC8", witness},
      {"AC9", certificate_suite}, {"AC10", determinism}};
  const std::string only = argc > 1 ? argv[1] : "";
  int failed = 0;
  for (const auto& [id, fn] : checks) {
    if (!only.empty() && only != id) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%-4s %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
