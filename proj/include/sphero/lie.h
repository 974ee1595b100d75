#pragma once

#include <Eigen/Dense>

namespace sphero {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline const Vec3& e3() {
  static const Vec3 kE3 = Vec3::UnitZ();
  return kE3;
}

/// Skew matrix with hat(v) * y == v.cross(y).
Mat3 hat(const Vec3& v);

/// Inverse of hat. Throws NumericalError(kNotSkew) when |M + M^T| >= 1e-9;
/// a smaller symmetric part is discarded.
Vec3 vee(const Mat3& m);

/// Rodrigues formula, with a second order series below |v| = 1e-8.
Mat3 exp_so3(const Vec3& v);

/// Inverse of the left Jacobian of exp_so3: if R(t) = exp(hat(theta(t))) R0
/// and dR/dt R^T = hat(w), then dtheta/dt = dexp_inv(theta, w).
Vec3 dexp_inv(const Vec3& theta, const Vec3& w);

/// Nearest rotation in the Frobenius norm (polar factor). Throws
/// NumericalError(kDegenerate) if det(m) <= 0 or a singular value is < 1e-9.
Mat3 project_so3(const Mat3& m);

/// |R^T R - I|_F, the drift measure used to trigger re-projection.
double orthonormality_error(const Mat3& r);

enum class Invariance { kLeft, kRight, kBi };
enum class Frame { kBody, kSpatial };

struct ConnectionKind {
  Invariance invariance{Invariance::kLeft};
  Frame frame{Frame::kBody};
};

/// Covariant derivative of eta along xi for the invariant metric induced by
/// `inertia`. The caller supplies d_eta, the ordinary derivative of eta along
/// the flow of xi (zero for constant fields).
///
/// Left and right invariant kinds return I * nabla_xi eta; the bi-invariant
/// kind returns nabla_xi eta itself and ignores `inertia`. Body frame uses the
/// + sign on the bracket term, spatial frame uses -.
Vec3 covariant_derivative(ConnectionKind kind, const Mat3& inertia,
                          const Vec3& xi, const Vec3& eta, const Vec3& d_eta);

}  // namespace sphero
