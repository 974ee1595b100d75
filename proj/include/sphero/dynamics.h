#pragma once

#include <vector>

#include "sphero/lie.h"

namespace sphero {

enum class ActuatorClass {
  kBarycentricCart,
  kBalancedGyroscopic,
  kReactionWheelPair,
};

const char* to_string(ActuatorClass kind);

struct ActuatorParams {
  ActuatorClass kind{ActuatorClass::kBarycentricCart};
  /// Mass of the actuator. For a wheel pair this is the mass of one wheel.
  double mass{0.0};
  /// Inertia about the actuator's own centre of mass, in the actuator frame.
  /// Wheels spin about their frame's third axis: diag(Ip, Ip, Iz).
  Mat3 inertia{Mat3::Identity()};
  /// Distance of the centre of mass from the shell centre (cart), or of each
  /// wheel of a pair from the shell centre.
  double offset{0.0};
  /// Spin axis of a wheel pair in the shell frame.
  Vec3 axis{Vec3::UnitZ()};
};

/// Total mass carried by one actuator entry (a wheel pair counts twice).
double total_mass(const ActuatorParams& a);

/// Axial inertia of a wheel pair (both wheels spin together).
double pair_axial_inertia(const ActuatorParams& a);

struct RobotParams {
  double shell_mass{1.0};
  Mat3 shell_inertia{Mat3::Identity()};
  double radius{0.18};
  std::vector<ActuatorParams> actuators;
  double gravity{9.81};
  /// Gravity acts along -e_g.
  Vec3 e_g{Vec3::UnitZ()};
  /// Gravity direction assumed by the controller.
  Vec3 e_g0{Vec3::UnitZ()};

  double actuator_mass() const;
  /// True when every actuator is a cart; false when every actuator is a
  /// momentum device. Mixed sets are rejected by validate().
  bool barycentric() const;
  bool reaction_wheels() const;
};

/// Throws ValidationError naming the offending field.
void validate(const RobotParams& p);

/// Gravity direction for a plane tilted by `beta` radians in the y direction.
Vec3 incline_direction(double beta);

struct ActuatorState {
  Mat3 R{Mat3::Identity()};
  Vec3 w{Vec3::Zero()};
};

struct SystemState {
  Vec3 o{Vec3::Zero()};
  Mat3 R{Mat3::Identity()};
  Vec3 w{Vec3::Zero()};
  std::vector<ActuatorState> actuators;
  Vec3 o_I{Vec3::Zero()};
};

/// Rotation taking e3 to `axis` (shortest arc).
Mat3 align_e3_to(const Vec3& axis);

/// Velocity of the shell centre when rolling without slip: r * w x e3.
Vec3 noslip_velocity(const Vec3& w, double r);

/// Relative spin rate of each wheel pair about its axis (0 for other classes).
double wheel_spin_rate(const SystemState& s, const RobotParams& p,
                       std::size_t i);

/// Solves m x = b by full-pivot LU; throws SingularInertia when the smallest
/// pivot is below 1e-9.
Vec3 solve3(const Mat3& m, const Vec3& b, const char* what);
Mat3 inverse3(const Mat3& m, const char* what);

/// Terms of the reduced sphere equation
///   I_e wdot = I_alpha w x w + tau_alpha + tau_g + sum B_i tau_i + IDelta_d
/// evaluated at one state with the given parameters and gravity direction.
struct SphereTerms {
  Mat3 inertia_alpha;            // I_b^R (cart, gyro) or I_r^R (wheels)
  Mat3 inertia_s;                // -(m_b + m_a) r^2 hat(e3)^2
  Mat3 inertia_a_sum;            // sum of I_atilde_i^{R_i}
  Mat3 inertia_e;                // I_alpha + I_s + hat(e3) I_a_sum hat(e3)
  std::vector<Mat3> inertia_act;  // spatial actuator inertia about its pivot
  std::vector<Mat3> inertia_a_tilde;
  std::vector<Mat3> coupling;     // B_i
  Vec3 tau_alpha;                 // tau_b or tau_r
  Vec3 tau_g;
};

SphereTerms sphere_terms(const SystemState& s, const RobotParams& p,
                         const Vec3& e_g);

/// -r (m_b + m_a) g e3 x e_g + (g / r) e3 x (I_a_sum e_g).
Vec3 gravity_moment(const RobotParams& p, const Mat3& inertia_a_sum,
                    const Vec3& e_g);

/// C_i of the cart equation: maps the sphere right-hand side to the
/// interaction moment felt by cart i.
Mat3 cart_coupling(const SystemState& s, const RobotParams& p,
                   const SphereTerms& terms, std::size_t i);

struct Accelerations {
  Vec3 w_dot{Vec3::Zero()};
  std::vector<Vec3> w_dot_actuators;
};

Vec3 barycentric_sphere_accel(const SystemState& s, const RobotParams& p,
                              const std::vector<Vec3>& controls,
                              const Vec3& disturbance);
std::vector<Vec3> barycentric_actuator_accel(
    const SystemState& s, const RobotParams& p,
    const std::vector<Vec3>& controls, const Vec3& disturbance);

Vec3 momentum_sphere_accel(const SystemState& s, const RobotParams& p,
                           const std::vector<Vec3>& controls,
                           const Vec3& disturbance);
/// Wheel pairs use only the axial part u_i = tau_i . R Gamma_i of each
/// control moment. Throws AxisViolation when a wheel's relative velocity has
/// left its axis.
std::vector<Vec3> momentum_actuator_accel(const SystemState& s,
                                          const RobotParams& p,
                                          const std::vector<Vec3>& controls,
                                          const Vec3& disturbance);

/// Dispatches on the actuator class.
Accelerations accelerations(const SystemState& s, const RobotParams& p,
                            const std::vector<Vec3>& controls,
                            const Vec3& disturbance);

struct Wrench {
  Vec3 f{Vec3::Zero()};
  Vec3 tau{Vec3::Zero()};
  double normal{0.0};
  bool contact_lost{false};
};

/// Contact force on the shell and its moment about the shell centre.
Wrench constraint_wrench(const SystemState& s, const RobotParams& p,
                         const Accelerations& acc);

/// Kinetic plus potential energy of shell and actuators.
double mechanical_energy(const SystemState& s, const RobotParams& p);

}  // namespace sphero
