#include "sphero/dynamics.h"

#include <cmath>
#include <string>

#include "sphero/errors.h"

namespace sphero {
namespace {

bool finite(const Mat3& m) { return m.allFinite(); }

void check_inertia(const Mat3& m, const std::string& field) {
  if (!finite(m)) throw ValidationError(field, "non-finite entry");
  if ((m - m.transpose()).norm() > 1e-12) {
    throw ValidationError(field, "inertia tensor is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw ValidationError(field, "inertia tensor is not positive definite");
  }
}

void check_unit(const Vec3& v, const std::string& field) {
  if (!v.allFinite() || std::abs(v.norm() - 1.0) > 1e-9) {
    throw ValidationError(field, "must be a unit vector");
  }
}

// Wheel inertia about its own centre, expressed in the shell frame.
Mat3 wheel_body_inertia(const ActuatorParams& a) {
  const Mat3 q = align_e3_to(a.axis);
  return q * a.inertia * q.transpose();
}

// Inertia of a wheel pair about the shell centre, excluding the axial spin
// (shell frame). Both wheels sit at +-l Gamma.
Mat3 wheel_pair_transverse(const ActuatorParams& a) {
  const Mat3 perp = Mat3::Identity() - a.axis * a.axis.transpose();
  const Mat3 w = wheel_body_inertia(a);
  return 2.0 * (perp * w * perp + a.mass * a.offset * a.offset * perp);
}

struct SphereRhs {
  SphereTerms terms;
  Vec3 rhs;  // everything on the right of I_e wdot = ...
};

SphereRhs sphere_rhs(const SystemState& s, const RobotParams& p,
                     const std::vector<Vec3>& controls,
                     const Vec3& disturbance) {
  SphereRhs out{sphere_terms(s, p, p.e_g), Vec3::Zero()};
  const SphereTerms& t = out.terms;
  Vec3 rhs = (t.inertia_alpha * s.w).cross(s.w) + t.tau_alpha + t.tau_g +
             disturbance;
  for (std::size_t i = 0; i < p.actuators.size(); ++i) {
    if (p.actuators[i].kind == ActuatorClass::kReactionWheelPair) {
      const Vec3 a = s.R * p.actuators[i].axis;
      rhs += controls[i].dot(a) * a;
    } else {
      rhs += t.coupling[i] * controls[i];
    }
  }
  out.rhs = rhs;
  return out;
}

void check_controls(const RobotParams& p, const std::vector<Vec3>& controls) {
  if (controls.size() != p.actuators.size()) {
    throw ValidationError("controls", "one control moment per actuator");
  }
}

}  // namespace

const char* to_string(ActuatorClass kind) {
  switch (kind) {
    case ActuatorClass::kBarycentricCart: return "cart";
    case ActuatorClass::kBalancedGyroscopic: return "gyroscopic";
    case ActuatorClass::kReactionWheelPair: return "reaction_wheels";
  }
  return "unknown";
}

double total_mass(const ActuatorParams& a) {
  return a.kind == ActuatorClass::kReactionWheelPair ? 2.0 * a.mass : a.mass;
}

double pair_axial_inertia(const ActuatorParams& a) {
  return 2.0 * a.inertia(2, 2);
}

double RobotParams::actuator_mass() const {
  double m = 0.0;
  for (const auto& a : actuators) m += total_mass(a);
  return m;
}

bool RobotParams::barycentric() const {
  return !actuators.empty() &&
         actuators.front().kind == ActuatorClass::kBarycentricCart;
}

bool RobotParams::reaction_wheels() const {
  return !actuators.empty() &&
         actuators.front().kind == ActuatorClass::kReactionWheelPair;
}

void validate(const RobotParams& p) {
  if (!(std::isfinite(p.radius) && p.radius > 0.0)) {
    throw ValidationError("r", "radius must be positive");
  }
  if (!(std::isfinite(p.shell_mass) && p.shell_mass > 0.0)) {
    throw ValidationError("m_b", "shell mass must be positive");
  }
  if (!(std::isfinite(p.gravity) && p.gravity >= 0.0)) {
    throw ValidationError("g", "gravity must be non-negative");
  }
  check_inertia(p.shell_inertia, "I_b");
  check_unit(p.e_g, "e_g");
  check_unit(p.e_g0, "e_g0");
  if (p.actuators.empty()) {
    throw ValidationError("actuators", "at least one actuator is required");
  }
  const ActuatorClass kind = p.actuators.front().kind;
  for (std::size_t i = 0; i < p.actuators.size(); ++i) {
    const ActuatorParams& a = p.actuators[i];
    const std::string f = "actuators[" + std::to_string(i) + "]";
    if (a.kind != kind) {
      throw ValidationError(f + ".class", "actuator classes cannot be mixed");
    }
    if (!(std::isfinite(a.mass) && a.mass > 0.0)) {
      throw ValidationError(f + ".m", "mass must be positive");
    }
    check_inertia(a.inertia, f + ".I");
    if (!(std::isfinite(a.offset) && a.offset >= 0.0)) {
      throw ValidationError(f + ".l", "offset must be non-negative");
    }
    switch (a.kind) {
      case ActuatorClass::kBarycentricCart:
        if (a.offset >= p.radius) {
          throw ValidationError(f + ".l", "offset must be below the radius");
        }
        break;
      case ActuatorClass::kBalancedGyroscopic:
        if (a.offset != 0.0) {
          throw ValidationError(f + ".l", "balanced actuators have l = 0");
        }
        break;
      case ActuatorClass::kReactionWheelPair:
        check_unit(a.axis, f + ".axis");
        if (std::abs(a.inertia(0, 0) - a.inertia(1, 1)) > 1e-12 ||
            a.inertia(0, 1) != 0.0 || a.inertia(0, 2) != 0.0 ||
            a.inertia(1, 2) != 0.0) {
          throw ValidationError(f + ".I",
                                "wheel inertia must be diag(Ip, Ip, Iz)");
        }
        break;
    }
  }
}

Vec3 incline_direction(double beta) {
  return Vec3(0.0, -std::sin(beta), std::cos(beta));
}

Mat3 align_e3_to(const Vec3& axis) {
  const Vec3 u = axis.normalized();
  return Eigen::Quaterniond::FromTwoVectors(e3(), u).toRotationMatrix();
}

Vec3 noslip_velocity(const Vec3& w, double r) {
  Vec3 v = r * w.cross(e3());
  v.z() = 0.0;
  return v;
}

double wheel_spin_rate(const SystemState& s, const RobotParams& p,
                       std::size_t i) {
  if (p.actuators[i].kind != ActuatorClass::kReactionWheelPair) return 0.0;
  return (s.R * p.actuators[i].axis).dot(s.actuators[i].w);
}

Vec3 solve3(const Mat3& m, const Vec3& b, const char* what) {
  Eigen::FullPivLU<Mat3> lu(m);
  if (!(lu.matrixLU().diagonal().cwiseAbs().minCoeff() >= 1e-9)) {
    throw NumericalError(NumericalErrorKind::kSingularInertia, what);
  }
  return lu.solve(b);
}

Mat3 inverse3(const Mat3& m, const char* what) {
  Eigen::FullPivLU<Mat3> lu(m);
  if (!(lu.matrixLU().diagonal().cwiseAbs().minCoeff() >= 1e-9)) {
    throw NumericalError(NumericalErrorKind::kSingularInertia, what);
  }
  return lu.inverse();
}

Vec3 gravity_moment(const RobotParams& p, const Mat3& inertia_a_sum,
                    const Vec3& e_g) {
  const double m = p.shell_mass + p.actuator_mass();
  return -p.radius * m * p.gravity * e3().cross(e_g) +
         (p.gravity / p.radius) * e3().cross(inertia_a_sum * e_g);
}

SphereTerms sphere_terms(const SystemState& s, const RobotParams& p,
                         const Vec3& e_g) {
  const std::size_t n = p.actuators.size();
  const double r = p.radius;
  const Mat3 e3h = hat(e3());
  SphereTerms t;
  t.inertia_s = -(p.shell_mass + p.actuator_mass()) * r * r * e3h * e3h;
  t.inertia_a_sum.setZero();
  t.tau_alpha.setZero();
  t.inertia_act.resize(n);
  t.inertia_a_tilde.assign(n, Mat3::Zero());
  t.coupling.assign(n, Mat3::Identity());

  Mat3 body = p.shell_inertia;
  for (std::size_t i = 0; i < n; ++i) {
    const ActuatorParams& a = p.actuators[i];
    const ActuatorState& ai = s.actuators[i];
    switch (a.kind) {
      case ActuatorClass::kBarycentricCart: {
        const Vec3 nv = ai.R * e3();
        const Mat3 nh = hat(nv);
        const Mat3 ia = ai.R * a.inertia * ai.R.transpose() -
                        a.mass * a.offset * a.offset * nh * nh;
        const Mat3 ia_inv = inverse3(ia, "cart inertia about the centre");
        const double c = a.mass * a.offset * r;
        t.inertia_act[i] = ia;
        t.inertia_a_tilde[i] = -c * c * nh * ia_inv * nh;
        t.coupling[i] = Mat3::Identity() + c * e3h * nh * ia_inv;
        t.tau_alpha += c * e3h * nh * ia_inv * ai.w.cross(ia * ai.w) +
                       c * e3h * (ai.w.cross(ai.w.cross(nv)));
        break;
      }
      case ActuatorClass::kBalancedGyroscopic:
        t.inertia_act[i] = ai.R * a.inertia * ai.R.transpose();
        break;
      case ActuatorClass::kReactionWheelPair: {
        const Vec3 axis = s.R * a.axis;
        body += wheel_pair_transverse(a);
        t.inertia_act[i] = s.R *
                           (wheel_pair_transverse(a) +
                            pair_axial_inertia(a) * a.axis *
                                a.axis.transpose()) *
                           s.R.transpose();
        t.tau_alpha -=
            pair_axial_inertia(a) * ai.w.dot(axis) * s.w.cross(axis);
        break;
      }
    }
    t.inertia_a_sum += t.inertia_a_tilde[i];
  }
  t.inertia_alpha = s.R * body * s.R.transpose();
  t.inertia_e = t.inertia_alpha + t.inertia_s + e3h * t.inertia_a_sum * e3h;
  t.tau_g = gravity_moment(p, t.inertia_a_sum, e_g);
  return t;
}

Mat3 cart_coupling(const SystemState& s, const RobotParams& p,
                   const SphereTerms& terms, std::size_t i) {
  const ActuatorParams& a = p.actuators[i];
  const Mat3 nh = hat(s.actuators[i].R * e3());
  const Mat3 ie_inv = inverse3(terms.inertia_e, "sphere operator I_e");
  return -a.mass * a.offset * p.radius * nh * hat(e3()) * ie_inv;
}

namespace {

std::vector<Vec3> cart_accels(const SystemState& s, const RobotParams& p,
                              const std::vector<Vec3>& controls,
                              const SphereRhs& sr, const Vec3& w_dot) {
  std::vector<Vec3> out(p.actuators.size());
  for (std::size_t i = 0; i < p.actuators.size(); ++i) {
    const ActuatorParams& a = p.actuators[i];
    const ActuatorState& ai = s.actuators[i];
    const Vec3 nv = ai.R * e3();
    const Mat3& ia = sr.terms.inertia_act[i];
    const Vec3 tau_gi = a.mass * a.offset * p.gravity * nv.cross(p.e_g);
    // C_i applied to the sphere right-hand side equals -m l r n x (e3 x wdot).
    const Vec3 interaction =
        -a.mass * a.offset * p.radius * nv.cross(e3().cross(w_dot));
    const Vec3 rhs =
        interaction + tau_gi - controls[i] - ai.w.cross(ia * ai.w);
    out[i] = solve3(ia, rhs, "cart inertia about the centre");
  }
  return out;
}

std::vector<Vec3> momentum_accels(const SystemState& s, const RobotParams& p,
                                  const std::vector<Vec3>& controls,
                                  const Vec3& w_dot) {
  std::vector<Vec3> out(p.actuators.size());
  for (std::size_t i = 0; i < p.actuators.size(); ++i) {
    const ActuatorParams& a = p.actuators[i];
    const ActuatorState& ai = s.actuators[i];
    if (a.kind != ActuatorClass::kReactionWheelPair) {
      const Mat3 ii = ai.R * a.inertia * ai.R.transpose();
      out[i] = solve3(ii, -controls[i] - ai.w.cross(ii * ai.w),
                      "gyroscopic actuator inertia");
      continue;
    }
    const Vec3 axis = s.R * a.axis;
    const Vec3 rel = ai.w - s.w;
    if (rel.cross(axis).norm() > 1e-6 * std::max(1.0, rel.norm())) {
      throw NumericalError(NumericalErrorKind::kAxisViolation,
                           "wheel " + std::to_string(i) +
                               " velocity left its spin axis");
    }
    const double jz = pair_axial_inertia(a);
    if (!(jz >= 1e-9)) {
      throw NumericalError(NumericalErrorKind::kSingularInertia,
                           "wheel axial inertia");
    }
    const double u = controls[i].dot(axis);
    const double spin = rel.dot(axis);
    // The wheel turns with the shell off its axis; about the axis its rate
    // changes by -u / J_z.
    out[i] = w_dot - axis.dot(w_dot) * axis - (u / jz) * axis +
             spin * s.w.cross(axis);
  }
  return out;
}

}  // namespace

Vec3 barycentric_sphere_accel(const SystemState& s, const RobotParams& p,
                              const std::vector<Vec3>& controls,
                              const Vec3& disturbance) {
  check_controls(p, controls);
  const SphereRhs sr = sphere_rhs(s, p, controls, disturbance);
  return solve3(sr.terms.inertia_e, sr.rhs, "sphere operator I_e");
}

std::vector<Vec3> barycentric_actuator_accel(
    const SystemState& s, const RobotParams& p,
    const std::vector<Vec3>& controls, const Vec3& disturbance) {
  check_controls(p, controls);
  const SphereRhs sr = sphere_rhs(s, p, controls, disturbance);
  const Vec3 w_dot = solve3(sr.terms.inertia_e, sr.rhs, "sphere operator I_e");
  return cart_accels(s, p, controls, sr, w_dot);
}

Vec3 momentum_sphere_accel(const SystemState& s, const RobotParams& p,
                           const std::vector<Vec3>& controls,
                           const Vec3& disturbance) {
  return barycentric_sphere_accel(s, p, controls, disturbance);
}

std::vector<Vec3> momentum_actuator_accel(const SystemState& s,
                                          const RobotParams& p,
                                          const std::vector<Vec3>& controls,
                                          const Vec3& disturbance) {
  check_controls(p, controls);
  const Vec3 w_dot =
      p.reaction_wheels() ? momentum_sphere_accel(s, p, controls, disturbance)
                          : Vec3::Zero();
  return momentum_accels(s, p, controls, w_dot);
}

Accelerations accelerations(const SystemState& s, const RobotParams& p,
                            const std::vector<Vec3>& controls,
                            const Vec3& disturbance) {
  check_controls(p, controls);
  const SphereRhs sr = sphere_rhs(s, p, controls, disturbance);
  Accelerations acc;
  acc.w_dot = solve3(sr.terms.inertia_e, sr.rhs, "sphere operator I_e");
  acc.w_dot_actuators = p.barycentric()
                            ? cart_accels(s, p, controls, sr, acc.w_dot)
                            : momentum_accels(s, p, controls, acc.w_dot);
  return acc;
}

Wrench constraint_wrench(const SystemState& s, const RobotParams& p,
                         const Accelerations& acc) {
  const Vec3 o_ddot = p.radius * acc.w_dot.cross(e3());
  Vec3 f = p.shell_mass * (o_ddot + p.gravity * p.e_g);
  for (std::size_t i = 0; i < p.actuators.size(); ++i) {
    const ActuatorParams& a = p.actuators[i];
    Vec3 x_ddot = o_ddot;
    if (a.kind == ActuatorClass::kBarycentricCart) {
      const Vec3 nv = s.actuators[i].R * e3();
      const Vec3& wi = s.actuators[i].w;
      x_ddot -= a.offset * (acc.w_dot_actuators[i].cross(nv) +
                            wi.cross(wi.cross(nv)));
    }
    f += total_mass(a) * (x_ddot + p.gravity * p.e_g);
  }
  Wrench out;
  out.f = f;
  out.tau = (-p.radius * e3()).cross(f);
  out.normal = f.dot(e3());
  out.contact_lost = !(out.normal > 0.0);
  return out;
}

double mechanical_energy(const SystemState& s, const RobotParams& p) {
  const Vec3 o_dot = noslip_velocity(s.w, p.radius);
  const double g = p.gravity;
  double e = 0.5 * p.shell_mass * o_dot.squaredNorm() +
             0.5 * s.w.dot(s.R * p.shell_inertia * s.R.transpose() * s.w) +
             p.shell_mass * g * p.e_g.dot(s.o);
  for (std::size_t i = 0; i < p.actuators.size(); ++i) {
    const ActuatorParams& a = p.actuators[i];
    const ActuatorState& ai = s.actuators[i];
    switch (a.kind) {
      case ActuatorClass::kBarycentricCart: {
        const Vec3 nv = ai.R * e3();
        const Vec3 x = s.o - a.offset * nv;
        const Vec3 v = o_dot - a.offset * ai.w.cross(nv);
        e += 0.5 * a.mass * v.squaredNorm() +
             0.5 * ai.w.dot(ai.R * a.inertia * ai.R.transpose() * ai.w) +
             a.mass * g * p.e_g.dot(x);
        break;
      }
      case ActuatorClass::kBalancedGyroscopic:
        e += 0.5 * a.mass * o_dot.squaredNorm() +
             0.5 * ai.w.dot(ai.R * a.inertia * ai.R.transpose() * ai.w) +
             a.mass * g * p.e_g.dot(s.o);
        break;
      case ActuatorClass::kReactionWheelPair: {
        const Vec3 axis = s.R * a.axis;
        const Mat3 w = s.R * wheel_body_inertia(a) * s.R.transpose();
        e += a.mass * o_dot.squaredNorm() +
             a.mass * a.offset * a.offset * s.w.cross(axis).squaredNorm() +
             ai.w.dot(w * ai.w) + 2.0 * a.mass * g * p.e_g.dot(s.o);
        break;
      }
    }
  }
  return e;
}

}  // namespace sphero
