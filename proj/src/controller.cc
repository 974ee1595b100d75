#include "sphero/controller.h"

#include "sphero/errors.h"

namespace sphero {
namespace {

constexpr ConnectionKind kLeftSpatial{Invariance::kLeft, Frame::kSpatial};
constexpr ConnectionKind kRightSpatial{Invariance::kRight, Frame::kSpatial};

// Connection terms of the split operator acting on eta (velocity-dependent
// part only; the rate enters through I_e).
Vec3 split_connection(const Vec3& w_e, const Vec3& eta, const SystemState& s,
                      const SphereTerms& t) {
  const Vec3 zero = Vec3::Zero();
  Vec3 v = covariant_derivative(kRightSpatial, t.inertia_s, w_e, eta, zero) +
           covariant_derivative(kLeftSpatial, t.inertia_alpha, w_e, eta,
                                zero);
  const Vec3 e3_eta = e3().cross(eta);
  for (std::size_t i = 0; i < t.inertia_a_tilde.size(); ++i) {
    v += e3().cross(covariant_derivative(kLeftSpatial, t.inertia_a_tilde[i],
                                         s.actuators[i].w, e3_eta, zero));
  }
  return v;
}

}  // namespace

ErrorState error_state(const SystemState& s, const Vec3& o_ref,
                       const Vec3& w_ref) {
  ErrorState e;
  e.o_e = s.o - o_ref;
  e.w_e = s.w - w_ref;
  e.eta_e = e3().cross(e.o_e);
  e.o_I = s.o_I;
  return e;
}

Vec3 integrator_lhs(const ErrorState& err, const SystemState& s,
                    const RobotParams& nominal, const Vec3& o_I_dot) {
  const SphereTerms t = sphere_terms(s, nominal, nominal.e_g0);
  return t.inertia_e * o_I_dot + split_connection(err.w_e, err.o_I, s, t);
}

Vec3 integrator_rate(const ErrorState& err, const SystemState& s,
                     const RobotParams& nominal) {
  return integrator_rate(err, s, sphere_terms(s, nominal, nominal.e_g0));
}

Vec3 integrator_rate(const ErrorState& err, const SystemState& s,
                     const SphereTerms& t) {
  const Vec3 rhs =
      t.inertia_e * err.eta_e - split_connection(err.w_e, err.o_I, s, t);
  return solve3(t.inertia_e, rhs, "integrator operator I_e");
}

ControlOutput pid_control(const ErrorState& err, const SystemState& s,
                          const RobotParams& nominal,
                          const ControllerGains& k) {
  return pid_control(err, s, nominal, k,
                     sphere_terms(s, nominal, nominal.e_g0));
}

ControlOutput pid_control(const ErrorState& err, const SystemState& s,
                          const RobotParams& nominal,
                          const ControllerGains& k, const SphereTerms& t) {
  const double g = nominal.gravity;
  const double r = nominal.radius;
  ControlOutput out;
  out.aggregate =
      -((g / r) * e3().cross(t.inertia_a_sum * nominal.e_g0) +
        t.inertia_e * (k.kp * err.eta_e + k.kd * err.w_e + k.kI * err.o_I));

  const std::size_t n = nominal.actuators.size();
  out.tau.resize(n);
  if (nominal.reaction_wheels()) {
    Eigen::Matrix<double, 3, Eigen::Dynamic> axes(3, n);
    for (std::size_t i = 0; i < n; ++i) {
      axes.col(i) = s.R * nominal.actuators[i].axis;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        axes, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (n < 3 || !(sv(2) > 0.0) || sv(0) / sv(2) > 1e6) {
      throw NumericalError(NumericalErrorKind::kAxesDegenerate,
                           "wheel axes do not span space");
    }
    const Eigen::VectorXd u = svd.solve(out.aggregate);
    out.u.assign(u.data(), u.data() + n);
    for (std::size_t i = 0; i < n; ++i) out.tau[i] = u(i) * axes.col(i);
    return out;
  }
  // Several 3-DOF actuators share the aggregate equally.
  const Vec3 share = out.aggregate / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.tau[i] = solve3(t.coupling[i], share, "actuator coupling B_i");
  }
  return out;
}

Vec3 recompose(const ControlOutput& out, const SystemState& s,
               const RobotParams& nominal) {
  const SphereTerms t = sphere_terms(s, nominal, nominal.e_g0);
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < out.tau.size(); ++i) {
    sum += t.coupling[i] * out.tau[i];
  }
  return sum;
}

Vec3 tau_ref(const ErrorState& err, const Vec3& w_ref, const Vec3& w_ref_dot,
             const SphereTerms& t) {
  const Mat3& ia = t.inertia_alpha;
  return (ia * w_ref).cross(err.w_e) + (ia * err.w_e).cross(w_ref) +
         (ia * w_ref).cross(w_ref) - t.inertia_e * w_ref_dot;
}

Vec3 tau_e_split(const ErrorState& err, const SystemState& s,
                 const SphereTerms& t) {
  const Vec3 eta = e3().cross(err.w_e);
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < t.inertia_a_tilde.size(); ++i) {
    const Mat3& ia = t.inertia_a_tilde[i];
    const Vec3& wi = s.actuators[i].w;
    sum += e3().cross(ia * wi.cross(eta) + (ia * wi).cross(eta) +
                      (ia * eta).cross(wi));
  }
  return (t.inertia_s * err.w_e).cross(err.w_e) - 0.5 * sum;
}

Vec3 raw_lhs(const ErrorState& err, const Vec3& w_e_dot,
             const SphereTerms& t) {
  return t.inertia_e * w_e_dot - (t.inertia_alpha * err.w_e).cross(err.w_e);
}

Vec3 split_lhs(const ErrorState& err, const Vec3& w_e_dot,
               const SystemState& s, const SphereTerms& t) {
  Vec3 v = covariant_derivative(kRightSpatial, t.inertia_s, err.w_e, err.w_e,
                                w_e_dot) +
           covariant_derivative(kLeftSpatial, t.inertia_alpha, err.w_e,
                                err.w_e, w_e_dot);
  const Vec3 eta = e3().cross(err.w_e);
  const Vec3 eta_dot = e3().cross(w_e_dot);
  for (std::size_t i = 0; i < t.inertia_a_tilde.size(); ++i) {
    v += e3().cross(covariant_derivative(kLeftSpatial, t.inertia_a_tilde[i],
                                         s.actuators[i].w, eta, eta_dot));
  }
  return v;
}

}  // namespace sphero
