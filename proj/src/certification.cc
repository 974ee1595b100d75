#include "sphero/certification.h"

#include <algorithm>
#include <array>
#include <boost/random/sobol.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "sphero/errors.h"

namespace sphero {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lmin(const Mat3& m) {
  return Eigen::SelfAdjointEigenSolver<Mat3>(m).eigenvalues().minCoeff();
}
double lmax(const Mat3& m) {
  return Eigen::SelfAdjointEigenSolver<Mat3>(m).eigenvalues().maxCoeff();
}

SystemState reference_state(const RobotParams& p) {
  SystemState s;
  s.o = Vec3(0.0, 0.0, p.radius);
  s.actuators.resize(p.actuators.size());
  return s;
}

struct SynthesisPoint {
  ControllerGains k;
  bool ok;
};

SynthesisPoint synthesis_point(const MorseBounds& b, double kd,
                               double target) {
  ControllerGains k;
  k.kd = kd;
  k.kI = 0.5 * kd * kd * kd * (1.0 - b.delta() * b.delta()) / b.mu_max;
  k.kp = 1.0;
  k.kp = 2.0 * std::max({gain_k1(k, b), gain_k2(k, b),
                         2.0 * kd * kd / b.mu_max});
  const bool ok = gain_check(k, b).pass &&
                  lmin(certificate_matrices(k, b).Q_l) >= target;
  return {k, ok};
}

// Unit-cube point to a vector in the box [-scale, scale]^3.
Vec3 box3(const double* u, double scale) {
  return scale * Vec3(2.0 * u[0] - 1.0, 2.0 * u[1] - 1.0, 2.0 * u[2] - 1.0);
}

enum Slot { kEpsI, kG1, kG2, kG3, kDeltaG, kSlots };

}  // namespace

Eigen::Matrix2d plane_block(const Mat3& inertia) {
  return inertia.topLeftCorner<2, 2>();
}

MorseBounds bounds_from_mu(const std::vector<double>& mu) {
  MorseBounds b;
  b.mu_min = *std::min_element(mu.begin(), mu.end());
  b.mu_max = *std::max_element(mu.begin(), mu.end());
  b.theta = 1.0;
  return b;
}

MorseBounds morse_bounds(const RobotParams& p, double /*k_s*/) {
  // With quadratic potentials the bounds do not depend on the set size.
  const SphereTerms t = sphere_terms(reference_state(p), p, p.e_g);
  std::vector<double> mu;
  auto add = [&](const Mat3& m) {
    const Eigen::Matrix2d blk = plane_block(0.5 * (m + m.transpose()));
    if (blk.norm() < 1e-14) return;
    mu.push_back(
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(blk).eigenvalues()(1));
  };
  add(t.inertia_s);
  add(t.inertia_alpha);
  for (const Mat3& m : t.inertia_a_tilde) add(m);
  return bounds_from_mu(mu);
}

double gain_k1(const ControllerGains& k, const MorseBounds& b) {
  const double mu = b.mu_max;
  return k.kI / (2.0 * k.kd) *
         (std::sqrt(1.0 + 16.0 * b.theta * k.kd * k.kd / (mu * mu * k.kI)) -
          1.0);
}

double gain_k2(const ControllerGains& k, const MorseBounds& b) {
  const double mu = b.mu_max;
  const double kd3 = k.kd * k.kd * k.kd;
  const double inner = 4.0 * kd3 *
                       (mu * mu * k.kI * k.kI + 4.0 * kd3 * (mu + kd3)) /
                       (b.theta * mu * mu * k.kI * k.kI * k.kI);
  return b.theta * k.kI * k.kI / (2.0 * kd3 * k.kd) *
         (1.0 + std::sqrt(1.0 + inner));
}

GainCheck gain_check(const ControllerGains& k, const MorseBounds& b) {
  GainCheck c;
  const double d = b.delta();
  c.kI_upper = k.kd * k.kd * k.kd * (1.0 - d * d) / b.mu_max;
  c.k1 = gain_k1(k, b);
  c.k2 = gain_k2(k, b);
  c.kp_floor = 2.0 * k.kd * k.kd / b.mu_max;
  c.kI_slack = c.kI_upper - k.kI;
  c.kp_slack = k.kp - std::max({c.k1, c.k2, c.kp_floor});
  c.pass = k.kp > 0.0 && k.kd > 0.0 && k.kI > 0.0 && c.kI_slack > 0.0 &&
           c.kp_slack > 0.0;
  return c;
}

ControllerGains gain_synthesize(const MorseBounds& b, double target,
                                double kd_cap) {
  if (!(b.delta() < 1.0)) {
    throw NumericalError(NumericalErrorKind::kInfeasible, "delta >= 1");
  }
  double lo = 1e-3;
  SynthesisPoint first = synthesis_point(b, lo, target);
  if (first.ok) return first.k;
  double hi = lo;
  SynthesisPoint best{};
  while (true) {
    hi *= 2.0;
    if (hi > kd_cap) {
      throw NumericalError(NumericalErrorKind::kInfeasible,
                           "no k_d below the cap reaches the target");
    }
    best = synthesis_point(b, hi, target);
    if (best.ok) break;
    lo = hi;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    SynthesisPoint pt = synthesis_point(b, mid, target);
    if (pt.ok) {
      hi = mid;
      best = pt;
    } else {
      lo = mid;
    }
  }
  return best.k;
}

CertificateMatrices certificate_matrices(const ControllerGains& k,
                                         const MorseBounds& b) {
  const double a = k.alpha();
  const double be = k.beta();
  const double g = k.gamma();
  const double s = k.sigma(b.mu_max);
  const double d = b.delta();
  const double kI = k.kI;
  const double kd = k.kd;
  const double off = (kI - a * kd * kd) / (2.0 * kd);
  CertificateMatrices m;
  // clang-format off
  m.P_u <<  g,   s,             be,
            s,   k.kp / b.theta, a,
            be,  a,             1.0;
  m.P_l <<  g,  -s,            -be,
           -s,   k.kp / b.theta, -a,
           -be, -a,             1.0;
  m.Q_l <<  kI * kI / kd, 0.0,                           -d * kI,
            0.0,          a * k.kp - 2.0 * kI / b.mu_min, off,
           -d * kI,       off,                            kd - a * b.mu_max;
  m.Q_u <<  kI * kI / kd, 0.0,                            d * kI,
            0.0,          a * k.kp - 2.0 * kI / b.mu_max, -off,
            d * kI,      -off,                            kd - a * b.mu_min;
  // clang-format on
  return m;
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::kAnalytic: return "analytic";
    case Provenance::kEmpirical: return "empirical";
    case Provenance::kUnset: return "unset";
  }
  return "unset";
}

std::map<std::string, Constant> empirical_constants(
    const RobotParams& p, const ControllerGains& k, const MorseBounds& b,
    const CertificateMatrices& m, const SamplingOptions& opt) {
  const RobotParams& q = opt.nominal ? *opt.nominal : p;
  const std::size_t n = p.actuators.size();
  const unsigned dim = static_cast<unsigned>(3 + 2 + 3 + 3 + 6 * n);
  const int count = std::max(1, opt.samples);

  // The whole sequence is drawn up front so that the result does not depend
  // on how the work is split.
  std::vector<double> pts(static_cast<std::size_t>(count) * dim);
  boost::random::sobol engine(dim);
  engine.discard(dim);  // skip the origin
  const double span = static_cast<double>(engine.max() - engine.min()) + 1.0;
  for (double& u : pts) u = static_cast<double>(engine() - engine.min()) / span;

  const double al = k.alpha();
  const double be = k.beta();
  auto eval = [&](int idx, std::array<double, kSlots>& best) {
    const double* u = &pts[static_cast<std::size_t>(idx) * dim];
    SystemState s;
    s.o = Vec3(0.0, 0.0, p.radius);
    s.R = exp_so3(box3(u, std::numbers::pi));
    Vec3 eta = opt.k_s * Vec3(2.0 * u[3] - 1.0, 2.0 * u[4] - 1.0, 0.0);
    Vec3 w_e = box3(u + 5, opt.k_s);
    Vec3 o_I = box3(u + 8, opt.k_s);
    double z = std::sqrt(eta.squaredNorm() + w_e.squaredNorm() +
                         o_I.squaredNorm());
    if (z < 1e-9) return;
    const double zs = std::min(1.0, opt.k_s / z);
    eta *= zs;
    w_e *= zs;
    o_I *= zs;
    z *= zs;
    s.w = w_e;
    s.actuators.resize(n);
    double wi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* ui = u + 11 + 6 * i;
      Vec3 wi = box3(ui + 3, opt.k_a);
      if (p.actuators[i].kind == ActuatorClass::kReactionWheelPair) {
        const Vec3 a = s.R * p.actuators[i].axis;
        s.actuators[i].R = s.R * align_e3_to(p.actuators[i].axis);
        wi = w_e - a.dot(w_e) * a + wi.z() * a;
      } else {
        s.actuators[i].R = exp_so3(box3(ui, std::numbers::pi));
      }
      s.actuators[i].w = wi;
      wi2 += wi.squaredNorm();
    }
    const double wn = std::sqrt(wi2);
    const SphereTerms tt = sphere_terms(s, p, p.e_g);
    const SphereTerms tn = sphere_terms(s, q, q.e_g0);

    const Mat3 ie_inv = inverse3(tt.inertia_e, "I_e");
    best[kEpsI] = std::max(
        best[kEpsI],
        Eigen::JacobiSVD<Mat3>((tn.inertia_e - tt.inertia_e) * ie_inv)
            .singularValues()(0));

    ErrorState err;
    err.w_e = w_e;
    err.eta_e = eta;
    err.o_I = o_I;
    const Vec3 v = w_e + al * eta + be * o_I;
    const Vec3 quad_s = (tt.inertia_s * w_e).cross(w_e);
    const Vec3 mixed = tau_e_split(err, s, tt) - quad_s;
    const bool wheels = p.reaction_wheels();
    const Vec3 act_quad = wheels ? Vec3::Zero() : tt.tau_alpha;
    const Vec3 act_mixed = wheels ? tt.tau_alpha : Vec3::Zero();
    best[kG3] = std::max(best[kG3], std::abs(quad_s.dot(v)) / (z * z * z));
    if (wn > 1e-9) {
      best[kG2] = std::max(best[kG2], std::abs((mixed + act_mixed).dot(v)) /
                                          (wn * z * z));
      best[kG1] = std::max(best[kG1],
                           std::abs(act_quad.dot(v)) / (wn * wn * z));
    }
    const Vec3 shaping = (q.gravity / q.radius) *
                         e3().cross(tn.inertia_a_sum * q.e_g0);
    best[kDeltaG] = std::max(best[kDeltaG], (tt.tau_g - shaping).norm());
  };

  const int threads = std::max(1, std::min(opt.parallel, count));
  std::vector<std::array<double, kSlots>> partial(threads);
  std::vector<std::exception_ptr> failures(threads);
  auto worker = [&](int id) {
    partial[id].fill(0.0);
    try {
      for (int i = id; i < count; i += threads) eval(i, partial[id]);
    } catch (...) {
      failures[id] = std::current_exception();
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int id = 0; id < threads; ++id) pool.emplace_back(worker, id);
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  std::array<double, kSlots> best{};
  for (const auto& part : partial) {
    for (int j = 0; j < kSlots; ++j) best[j] = std::max(best[j], part[j]);
  }

  std::map<std::string, Constant> c;
  const auto emp = Provenance::kEmpirical;
  const auto ana = Provenance::kAnalytic;
  const double g0 = std::max({k.kp, k.kd, k.kI}) * std::max({1.0, al, be});
  c["g0"] = {g0, ana};
  c["g1"] = {best[kG1], emp};
  c["g2"] = {best[kG2], emp};
  c["g3"] = {best[kG3], emp};
  c["eps_I"] = {best[kEpsI], emp};
  c["eps_ref"] = {0.0, Provenance::kUnset};
  c["kappa"] = {1.0 / b.mu_max, ana};
  c["k_s"] = {opt.k_s, ana};
  c["k_a"] = {opt.k_a, ana};
  const double g4 =
      3.0 * (opt.disturbance.norm() + best[kDeltaG]) + best[kG1] * opt.k_a *
                                                           opt.k_a;
  c["g4"] = {g4, emp};

  const double chi_l = lmin(m.Q_l) - g0 * best[kEpsI];
  const double chi_u = lmax(m.Q_u) + g0 * best[kEpsI];
  const double lb = Eigen::SelfAdjointEigenSolver<Mat3>(p.shell_inertia)
                        .eigenvalues()
                        .minCoeff();
  const double r = p.radius;
  const double r4 = r * r * r * r;
  double mi = p.actuator_mass();
  double cart = 0.0;
  for (const ActuatorParams& a : p.actuators) {
    if (a.kind != ActuatorClass::kBarycentricCart) continue;
    const double li =
        Eigen::SelfAdjointEigenSolver<Mat3>(a.inertia).eigenvalues()
            .minCoeff();
    const double ml = a.mass * a.offset;
    cart = std::max(cart, ml * ml * ml * ml * r4 / (li * li));
  }
  const double mt = p.shell_mass + mi;
  const double xi = chi_l * lb * lb + r4 * (chi_l * mt * mt - chi_u * cart) -
                    best[kG2] - best[kG3] * opt.k_s;
  c["Xi"] = {xi, emp};
  c["eps_c"] = {xi > 0.0 ? g4 / xi : kInf, emp};
  return c;
}

LyapunovCertificate certificate(const RobotParams& p,
                                const ControllerGains& k,
                                const MorseBounds& b,
                                const SamplingOptions& opt) {
  LyapunovCertificate c;
  c.m = certificate_matrices(k, b);
  c.lmin_P_l = lmin(c.m.P_l);
  c.lmax_P_u = lmax(c.m.P_u);
  c.lmin_Q_l = lmin(c.m.Q_l);
  c.lmin_Q_u = lmin(c.m.Q_u);
  c.lmax_Q_u = lmax(c.m.Q_u);
  c.constants = empirical_constants(p, k, b, c.m, opt);

  const double lb = Eigen::SelfAdjointEigenSolver<Mat3>(p.shell_inertia)
                        .eigenvalues()
                        .minCoeff();
  c.design_ratio = kInf;
  for (const ActuatorParams& a : p.actuators) {
    if (a.kind != ActuatorClass::kBarycentricCart || a.offset == 0.0) continue;
    const double li =
        Eigen::SelfAdjointEigenSolver<Mat3>(a.inertia).eigenvalues()
            .minCoeff();
    const double r = p.radius;
    const double ratio = li * (lb + r * r * (p.shell_mass + a.mass)) /
                         (a.mass * a.mass * a.offset * a.offset * r * r);
    c.design_ratio = std::min(c.design_ratio, ratio);
  }
  const double ge = c.constants["g0"].value * c.constants["eps_I"].value;
  c.p_ratio = c.lmax_P_u / c.lmin_P_l;
  c.q_ratio = (c.lmin_Q_u + ge) / (c.lmin_Q_l - ge);

  const GainCheck gc = gain_check(k, b);
  if (!gc.pass) c.reasons.push_back("gain inequalities not satisfied");
  if (!(c.lmin_P_l > 0.0)) c.reasons.push_back("P_l not positive definite");
  if (!(c.lmin_Q_l > 0.0)) c.reasons.push_back("Q_l not positive definite");
  if (c.lmin_P_l > 0.0 && !(c.design_ratio > c.p_ratio)) {
    c.reasons.push_back("design ratio below lambda_max(P_u)/lambda_min(P_l)");
  }
  if (c.lmin_Q_l - ge > 0.0 && !(c.design_ratio > c.q_ratio)) {
    c.reasons.push_back("design ratio below the Q ratio");
  }
  if (!(c.lmin_Q_l - ge > 0.0)) {
    c.reasons.push_back("lambda_min(Q_l) does not dominate g0 eps_I");
  }
  c.pass = c.reasons.empty();
  return c;
}

Contraction morse_contraction_check(const Eigen::Matrix2d& inertia) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(inertia);
  const double mu_min = es.eigenvalues()(0);
  const double mu_max = es.eigenvalues()(1);
  Contraction c;
  c.kappa = 1.0 / mu_max;
  c.delta = 1.0 - mu_min / mu_max;
  const Eigen::Matrix2d d = c.kappa * inertia - Eigen::Matrix2d::Identity();
  c.norm = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(d)
               .eigenvalues()
               .cwiseAbs()
               .maxCoeff();
  return c;
}

double max_inclination(const RobotParams& p) {
  double s = kInf;
  for (const ActuatorParams& a : p.actuators) {
    s = std::min(s, a.mass * a.offset /
                        ((p.shell_mass + a.mass) * p.radius));
  }
  return std::asin(std::min(1.0, s));
}

Vec3 equilibrium_residual(const RobotParams& p, const Vec3& e_g,
                          const Vec3& n, const Vec3& tau_ref,
                          const Vec3& disturbance) {
  double ml = 0.0;
  for (const ActuatorParams& a : p.actuators) ml += a.mass * a.offset;
  const double m = p.shell_mass + p.actuator_mass();
  return p.gravity * (ml * n.cross(e_g) - m * p.radius * e3().cross(e_g)) +
         tau_ref + disturbance;
}

EquilibriumReport relative_equilibrium(const RobotParams& p, double beta,
                                       const Vec3& w_ref,
                                       const Vec3& disturbance) {
  if (!p.barycentric()) {
    throw ValidationError("actuators", "relative equilibria need carts");
  }
  const Vec3 e_g = incline_direction(beta);
  const Vec3 tau_ref = (p.shell_inertia * w_ref).cross(w_ref);
  double ml = 0.0;
  for (const ActuatorParams& a : p.actuators) ml += a.mass * a.offset;

  auto residual = [&](const Vec3& n) {
    return equilibrium_residual(p, e_g, n, tau_ref, disturbance);
  };
  auto newton = [&](Vec3 n) {
    Vec3 f = residual(n);
    for (int it = 0; it < 100 && f.norm() >= 1e-14; ++it) {
      // d/dxi of g ml (exp(xi) n) x e_g at xi = 0.
      const Mat3 jac = p.gravity * ml * hat(e_g) * hat(n);
      const Vec3 step =
          -jac.jacobiSvd(Eigen::ComputeFullU | Eigen::ComputeFullV).solve(f);
      double scale = 1.0;
      Vec3 trial = exp_so3(step) * n;
      Vec3 ft = residual(trial);
      while (ft.norm() > f.norm() && scale > 1e-6) {
        scale *= 0.5;
        trial = exp_so3(scale * step) * n;
        ft = residual(trial);
      }
      if (ft.norm() > f.norm()) break;
      n = trial.normalized();
      f = ft;
    }
    return std::make_pair(n, f.norm());
  };

  EquilibriumReport rep;
  rep.beta_max = max_inclination(p);
  auto [n0, r0] = newton(e3());
  rep.attitude = n0;
  rep.residual = r0;
  // Fibonacci lattice of further starts.
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < 16 && rep.residual >= 1e-8; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / 16.0;
    const double rho = std::sqrt(1.0 - z * z);
    const Vec3 start(rho * std::cos(golden * i), rho * std::sin(golden * i),
                     z);
    auto [n, res] = newton(start);
    if (res < rep.residual) {
      rep.attitude = n;
      rep.residual = res;
    }
  }
  rep.exists = rep.residual < 1e-8;
  return rep;
}

void throw_if_missing(const EquilibriumReport& r) {
  if (!r.exists) {
    throw NumericalError(NumericalErrorKind::kNoEquilibrium,
                         "residual " + std::to_string(r.residual) +
                             " from all starts");
  }
}

WitnessReport momentum_unboundedness_witness(const RobotParams& p,
                                             double beta, const Vec3& w_ref,
                                             const Vec3& disturbance,
                                             const Mat3& R) {
  const Vec3 e_g = incline_direction(beta);
  const double m = p.shell_mass + p.actuator_mass();
  SystemState s = reference_state(p);
  s.R = R;
  const SphereTerms t = sphere_terms(s, p, e_g);
  WitnessReport w;
  w.forcing = (t.inertia_alpha * w_ref).cross(w_ref) + disturbance -
              p.radius * p.gravity * m * e3().cross(e_g);
  w.magnitude = w.forcing.norm();
  w.unbounded = w.magnitude > 1e-12;
  if (p.reaction_wheels()) {
    const std::size_t n = p.actuators.size();
    Eigen::Matrix<double, 3, Eigen::Dynamic> axes(3, n);
    for (std::size_t i = 0; i < n; ++i) axes.col(i) = R * p.actuators[i].axis;
    // Holding the output needs sum u_i a_i = -forcing; each wheel then
    // spins up at -u_i / J_z.
    const Eigen::VectorXd u =
        axes.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
            .solve(-w.forcing);
    for (std::size_t i = 0; i < n; ++i) {
      w.spin_rate_slopes.push_back(-u(i) / pair_axial_inertia(p.actuators[i]));
    }
  }
  return w;
}

}  // namespace sphero
