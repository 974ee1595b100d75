#pragma once

#include <vector>

#include "sphero/dynamics.h"

namespace sphero {

struct ErrorState {
  Vec3 o_e{Vec3::Zero()};
  Vec3 w_e{Vec3::Zero()};
  Vec3 eta_e{Vec3::Zero()};  // e3 x o_e
  Vec3 o_I{Vec3::Zero()};
};

ErrorState error_state(const SystemState& s, const Vec3& o_ref,
                       const Vec3& w_ref);

struct ControllerGains {
  double kp{100.0};
  double kd{60.0};
  double kI{10.0};

  double alpha() const { return kI / (kd * kd); }
  double beta() const { return kI / kd; }
  double gamma() const { return kI * (kI + kp * kd) / (kd * kd); }
  double sigma(double mu_max) const { return 2.0 * kI / mu_max; }
};

struct ControlOutput {
  /// sum_i B_i tau_i requested from the actuators.
  Vec3 aggregate{Vec3::Zero()};
  /// Per-actuator control moment tau_i (for wheels: u_i R Gamma_i).
  std::vector<Vec3> tau;
  /// Scalar wheel torques u_i (empty for other classes).
  std::vector<double> u;
};

/// Time derivative of the integrator state o_I. All inertia terms come from
/// `nominal` evaluated at the current attitudes of `s`.
Vec3 integrator_rate(const ErrorState& err, const SystemState& s,
                     const RobotParams& nominal);
/// Same, with the nominal sphere terms already evaluated at `s`.
Vec3 integrator_rate(const ErrorState& err, const SystemState& s,
                     const SphereTerms& nominal_terms);

/// Left side of the integrator equation for a given o_I rate. Used to check
/// integrator_rate against its defining equation.
Vec3 integrator_lhs(const ErrorState& err, const SystemState& s,
                    const RobotParams& nominal, const Vec3& o_I_dot);

/// Potential shaping plus split PID. Uses the nominal parameters and their
/// nominal gravity direction e_g0 only. Throws SingularInertia if a coupling
/// matrix B_i cannot be inverted and AxesDegenerate if the wheel axes do not
/// span space (condition number above 1e6).
ControlOutput pid_control(const ErrorState& err, const SystemState& s,
                          const RobotParams& nominal,
                          const ControllerGains& gains);
ControlOutput pid_control(const ErrorState& err, const SystemState& s,
                          const RobotParams& nominal,
                          const ControllerGains& gains,
                          const SphereTerms& nominal_terms);

/// sum_i B_i tau_i recomputed from the per-actuator outputs.
Vec3 recompose(const ControlOutput& out, const SystemState& s,
               const RobotParams& nominal);

/// Moment generated by the reference motion in the error equation.
Vec3 tau_ref(const ErrorState& err, const Vec3& w_ref, const Vec3& w_ref_dot,
             const SphereTerms& terms);

/// Quadratic velocity term that turns the error dynamics into the split form
///   split_lhs(w_e_dot) == raw_lhs(w_e_dot) + tau_e_split.
Vec3 tau_e_split(const ErrorState& err, const SystemState& s,
                 const SphereTerms& terms);

/// I_e w_e_dot - I_alpha w_e x w_e.
Vec3 raw_lhs(const ErrorState& err, const Vec3& w_e_dot,
             const SphereTerms& terms);

/// Sum of the left-invariant (I_alpha, I_atilde_i) and right-invariant (I_s)
/// covariant derivative terms of w_e.
Vec3 split_lhs(const ErrorState& err, const Vec3& w_e_dot,
               const SystemState& s, const SphereTerms& terms);

}  // namespace sphero
