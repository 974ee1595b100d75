#include "sphero/lie.h"

#include <cmath>

#include "sphero/errors.h"

namespace sphero {

const char* to_string(NumericalErrorKind kind) {
  switch (kind) {
    case NumericalErrorKind::kNotSkew: return "NotSkew";
    case NumericalErrorKind::kDegenerate: return "Degenerate";
    case NumericalErrorKind::kSingularInertia: return "SingularInertia";
    case NumericalErrorKind::kAxesDegenerate: return "AxesDegenerate";
    case NumericalErrorKind::kAxisViolation: return "AxisViolation";
    case NumericalErrorKind::kInfeasible: return "Infeasible";
    case NumericalErrorKind::kNoEquilibrium: return "NoEquilibrium";
    case NumericalErrorKind::kNonFinite: return "NonFinite";
  }
  return "Unknown";
}

Mat3 hat(const Vec3& v) {
  Mat3 m;
  // clang-format off
  m <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return m;
}

Vec3 vee(const Mat3& m) {
  if ((m + m.transpose()).norm() >= 1e-9) {
    throw NumericalError(NumericalErrorKind::kNotSkew,
                         "matrix has a symmetric part above 1e-9");
  }
  const Mat3 s = 0.5 * (m - m.transpose());
  return Vec3(s(2, 1), s(0, 2), s(1, 0));
}

Mat3 exp_so3(const Vec3& v) {
  const double theta = v.norm();
  const Mat3 k = hat(v);
  if (theta < 1e-8) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 dexp_inv(const Vec3& theta, const Vec3& w) {
  const double t = theta.norm();
  // Coefficient of hat(theta)^2: (1 - (t/2) cot(t/2)) / t^2.
  double c;
  if (t < 1e-4) {
    const double t2 = t * t;
    c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    const double half = 0.5 * t;
    c = (1.0 - half * std::cos(half) / std::sin(half)) / (t * t);
  }
  const Vec3 tw = theta.cross(w);
  return w - 0.5 * tw + c * theta.cross(tw);
}

Mat3 project_so3(const Mat3& m) {
  if (!(m.determinant() > 0.0)) {
    throw NumericalError(NumericalErrorKind::kDegenerate,
                         "determinant is not positive");
  }
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues().minCoeff() < 1e-9) {
    throw NumericalError(NumericalErrorKind::kDegenerate,
                         "singular value below 1e-9");
  }
  return svd.matrixU() * svd.matrixV().transpose();
}

double orthonormality_error(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).norm();
}

Vec3 covariant_derivative(ConnectionKind kind, const Mat3& inertia,
                          const Vec3& xi, const Vec3& eta,
                          const Vec3& d_eta) {
  const double sign = kind.frame == Frame::kBody ? 1.0 : -1.0;
  if (kind.invariance == Invariance::kBi) {
    return d_eta + sign * 0.5 * xi.cross(eta);
  }
  const Vec3 momenta =
      (inertia * eta).cross(xi) + (inertia * xi).cross(eta);
  const double momenta_sign =
      kind.invariance == Invariance::kLeft ? -1.0 : 1.0;
  return inertia * d_eta +
         0.5 * (sign * inertia * xi.cross(eta) + momenta_sign * momenta);
}

}  // namespace sphero
