#pragma once

#include <map>
#include <string>
#include <vector>

#include "sphero/controller.h"
#include "sphero/dynamics.h"

namespace sphero {

struct MorseBounds {
  double mu_min{1.0};
  double mu_max{1.0};
  double theta{1.0};  // vartheta
  double delta() const { return 1.0 - mu_min / mu_max; }
};

/// Upper-left 2x2 block of an inertia tensor.
Eigen::Matrix2d plane_block(const Mat3& inertia);

/// mu_nu = lambda_max of the plane block of each metric I_s, I_alpha and
/// I_atilde_i, taken at the reference configuration R = R_i = I. Zero blocks
/// (balanced actuators) do not contribute.
MorseBounds morse_bounds(const RobotParams& p, double k_s);

/// Bounds from the individual mu values.
MorseBounds bounds_from_mu(const std::vector<double>& mu);

struct GainCheck {
  bool pass{false};
  double kI_upper{0.0};  // k_d^3 (1 - delta^2) / mu_max
  double k1{0.0};
  double k2{0.0};
  double kp_floor{0.0};  // 2 k_d^2 / mu_max
  double kI_slack{0.0};  // kI_upper - k_I (must be > 0)
  double kp_slack{0.0};  // k_p - max(k1, k2, kp_floor) (must be > 0)
};

double gain_k1(const ControllerGains& k, const MorseBounds& b);
double gain_k2(const ControllerGains& k, const MorseBounds& b);
GainCheck gain_check(const ControllerGains& k, const MorseBounds& b);

/// Smallest k_d (by bracketing and bisection) whose gains
/// k_I = kI_upper / 2, k_p = 2 max(k1, k2, kp_floor) pass gain_check with
/// lambda_min(Q_l) >= target. Throws Infeasible if k_d would exceed kd_cap.
ControllerGains gain_synthesize(const MorseBounds& b, double target,
                                double kd_cap = 1e4);

struct CertificateMatrices {
  Mat3 P_l, P_u, Q_l, Q_u;
};

CertificateMatrices certificate_matrices(const ControllerGains& k,
                                         const MorseBounds& b);

enum class Provenance { kAnalytic, kEmpirical, kUnset };
const char* to_string(Provenance p);

struct Constant {
  double value{0.0};
  Provenance provenance{Provenance::kUnset};
};

struct LyapunovCertificate {
  CertificateMatrices m;
  double lmin_P_l{0.0};
  double lmax_P_u{0.0};
  double lmin_Q_l{0.0};
  double lmin_Q_u{0.0};
  double lmax_Q_u{0.0};
  /// lambda_min(I_i)(lambda_min(I_b) + r^2 (m_b + m_i)) / (m_i l_i r)^2,
  /// minimised over barycentric actuators; infinite for balanced ones.
  double design_ratio{0.0};
  double p_ratio{0.0};  // lambda_max(P_u) / lambda_min(P_l)
  double q_ratio{0.0};  // (lambda_min(Q_u) + g0 eps_I) / (lambda_min(Q_l) - g0 eps_I)
  bool pass{false};
  std::vector<std::string> reasons;
  std::map<std::string, Constant> constants;
};

struct SamplingOptions {
  double k_s{1.0};
  double k_a{5.0};
  int samples{10000};
  int parallel{1};
  /// Parameters used by the controller; defaults to the true ones if empty.
  const RobotParams* nominal{nullptr};
  Vec3 disturbance{Vec3::Zero()};
};

/// Assembles P_l, P_u, Q_l, Q_u, their eigenvalues, the design ratio test and
/// the sampled constants of the convergence argument.
LyapunovCertificate certificate(const RobotParams& p,
                                const ControllerGains& k,
                                const MorseBounds& b,
                                const SamplingOptions& opt);

/// Sampled constants only (g0..g4, eps_I, eps_ref, kappa, k_a, k_s, Xi,
/// eps_c). Deterministic for any `parallel`.
std::map<std::string, Constant> empirical_constants(
    const RobotParams& p, const ControllerGains& k, const MorseBounds& b,
    const CertificateMatrices& m, const SamplingOptions& opt);

struct Contraction {
  double kappa{1.0};
  double delta{0.0};
  double norm{0.0};  // |kappa I - Id|_2
};

/// Contraction constants for the quadratic potential with the given 2x2
/// metric block: kappa = 1/mu_max, delta = 1 - mu_min/mu_max.
Contraction morse_contraction_check(const Eigen::Matrix2d& inertia);

struct EquilibriumReport {
  bool exists{false};
  double beta_max{0.0};
  Vec3 attitude{Vec3::UnitZ()};  // R_i e3 at the equilibrium
  double residual{0.0};
};

/// Residual g (sum m_i l_i n x e_g - (m_b + m_a) r e3 x e_g) + tau_ref
/// + IDelta for a common cart attitude n = R_i e3.
Vec3 equilibrium_residual(const RobotParams& p, const Vec3& e_g,
                          const Vec3& n, const Vec3& tau_ref,
                          const Vec3& disturbance);

/// Searches the unit sphere for an attitude that holds the shell at a
/// relative equilibrium on a plane inclined by beta. The returned report has
/// exists == false when no start converges; call throw_if_missing() to turn
/// that into NoEquilibrium.
EquilibriumReport relative_equilibrium(const RobotParams& p, double beta,
                                       const Vec3& w_ref,
                                       const Vec3& disturbance);
void throw_if_missing(const EquilibriumReport& r);

/// asin(min_i m_i l_i / ((m_b + m_i) r)).
double max_inclination(const RobotParams& p);

struct WitnessReport {
  Vec3 forcing{Vec3::Zero()};
  double magnitude{0.0};
  bool unbounded{false};
  /// Predicted d/dt of the wheel spin rates while the output is held (wheel
  /// pairs only; the shell attitude is taken as `R`).
  std::vector<double> spin_rate_slopes;
};

/// Constant moment that momentum actuators must absorb when the output is
/// held at a constant-velocity reference:
///   tau_ref + IDelta - r g (m_b + m_a) e3 x e_g.
WitnessReport momentum_unboundedness_witness(const RobotParams& p,
                                             double beta, const Vec3& w_ref,
                                             const Vec3& disturbance,
                                             const Mat3& R = Mat3::Identity());

}  // namespace sphero
