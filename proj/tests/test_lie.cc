#include <gtest/gtest.h>

#include <random>

#include "oracles.h"
#include "sphero/errors.h"
#include "sphero/lie.h"

using namespace sphero;

namespace {

constexpr int kCases = 1000;
constexpr double kTol = 1e-10;

Mat3 random_spd(std::mt19937_64& rng) {
  const Mat3 q = oracle::rand_rot(rng);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  return q * Vec3(u(rng), u(rng), u(rng)).asDiagonal() * q.transpose();
}

// Rodrigues-free reference: exp by scaling and squaring of the Taylor series.
Mat3 series_exp(const Mat3& a) {
  Mat3 x = a / 1024.0;
  Mat3 term = Mat3::Identity();
  Mat3 sum = Mat3::Identity();
  for (int k = 1; k < 20; ++k) {
    term = term * x / k;
    sum += term;
  }
  for (int k = 0; k < 10; ++k) sum = sum * sum;
  return sum;
}

}  // namespace

TEST(Hat, CrossProductAndRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < kCases; ++i) {
    const Vec3 u = oracle::rand_vec(rng, 5.0);
    const Vec3 v = oracle::rand_vec(rng, 5.0);
    EXPECT_LT((hat(u) * v - u.cross(v)).norm(), kTol);
    EXPECT_LT((vee(hat(u)) - u).norm(), kTol);
    EXPECT_LT((hat(u) + hat(u).transpose()).norm(), kTol);
  }
}

TEST(Hat, VeeRejectsSymmetricPart) {
  Mat3 m = hat(Vec3(1, 2, 3));
  m(0, 1) += 1e-3;
  try {
    vee(m);
    FAIL() << "expected NotSkew";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.kind(), NumericalErrorKind::kNotSkew);
  }
  m = hat(Vec3(1, 2, 3));
  m(0, 1) += 1e-12;
  EXPECT_LT((vee(m) - Vec3(1, 2, 3)).norm(), 1e-11);
}

TEST(ExpSO3, GroupProperties) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < kCases; ++i) {
    const Vec3 v = oracle::rand_vec(rng, 3.0);
    const Mat3 r = exp_so3(v);
    EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), kTol);
    EXPECT_NEAR(r.determinant(), 1.0, kTol);
    EXPECT_LT((exp_so3(-v) - r.transpose()).norm(), kTol);
    // One-parameter subgroup.
    EXPECT_LT((exp_so3(0.3 * v) * exp_so3(0.7 * v) - r).norm(), kTol);
    // Fixes its own axis.
    EXPECT_LT((r * v - v).norm(), kTol);
    // Conjugation: Q exp(v) Q^T = exp(Q v).
    const Mat3 q = oracle::rand_rot(rng);
    EXPECT_LT((q * r * q.transpose() - exp_so3(q * v)).norm(), kTol);
    EXPECT_LT((r - series_exp(hat(v))).norm(), 1e-9);
  }
}

TEST(ExpSO3, SmallAngleBranch) {
  for (double s : {1e-5, 1e-8, 1e-9, 1e-12, 0.0}) {
    const Vec3 v = s * Vec3(0.3, -0.5, 0.8);
    EXPECT_LT((exp_so3(v) - series_exp(hat(v))).norm(), 1e-13);
  }
}

TEST(DexpInv, MatchesFiniteDifference) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const Vec3 theta = oracle::rand_vec(rng, 2.0);
    const Vec3 theta_dot = oracle::rand_vec(rng, 1.0);
    const double eps = 1e-6;
    const Mat3 rp = exp_so3(theta + eps * theta_dot);
    const Mat3 rm = exp_so3(theta - eps * theta_dot);
    const Mat3 rdot = (rp - rm) / (2 * eps);
    const Vec3 w = vee(0.5 * (rdot * exp_so3(theta).transpose() -
                              (rdot * exp_so3(theta).transpose()).transpose()));
    EXPECT_LT((dexp_inv(theta, w) - theta_dot).norm(), 1e-7);
  }
}

TEST(ProjectSO3, NearestRotation) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 100; ++i) {
    const Mat3 r = oracle::rand_rot(rng);
    const Mat3 noisy = r + 1e-6 * Mat3::Random();
    const Mat3 p = project_so3(noisy);
    EXPECT_LT(orthonormality_error(p), 1e-12);
    EXPECT_LT((p - r).norm(), 1e-5);
  }
  EXPECT_THROW(project_so3(-Mat3::Identity()), NumericalError);
}

TEST(Connection, TorsionFree) {
  std::mt19937_64 rng(15);
  for (int i = 0; i < kCases; ++i) {
    const Mat3 inertia = random_spd(rng);
    const Vec3 xi = oracle::rand_vec(rng, 2.0);
    const Vec3 eta = oracle::rand_vec(rng, 2.0);
    const Vec3 zero = Vec3::Zero();
    for (Invariance inv : {Invariance::kLeft, Invariance::kRight}) {
      for (Frame f : {Frame::kBody, Frame::kSpatial}) {
        const ConnectionKind k{inv, f};
        const Vec3 torsion =
            inertia.inverse() * (covariant_derivative(k, inertia, xi, eta, zero) -
                                 covariant_derivative(k, inertia, eta, xi, zero));
        const double sign = f == Frame::kBody ? 1.0 : -1.0;
        EXPECT_LT((torsion - sign * xi.cross(eta)).norm(), 1e-9);
      }
    }
    for (Frame f : {Frame::kBody, Frame::kSpatial}) {
      const ConnectionKind k{Invariance::kBi, f};
      const double sign = f == Frame::kBody ? 1.0 : -1.0;
      EXPECT_LT((covariant_derivative(k, inertia, xi, eta, zero) -
                 covariant_derivative(k, inertia, eta, xi, zero) -
                 sign * xi.cross(eta))
                    .norm(),
                kTol);
    }
  }
}

// <nabla_xi eta, zeta> + <eta, nabla_xi zeta> equals the derivative of
// <eta, zeta> along xi, here <d_eta, zeta> + <eta, d_zeta>.
TEST(Connection, MetricCompatible) {
  std::mt19937_64 rng(16);
  const ConnectionKind kinds[] = {{Invariance::kLeft, Frame::kBody},
                                  {Invariance::kRight, Frame::kSpatial},
                                  {Invariance::kBi, Frame::kBody},
                                  {Invariance::kBi, Frame::kSpatial}};
  for (int i = 0; i < kCases; ++i) {
    const Mat3 inertia = random_spd(rng);
    const Vec3 xi = oracle::rand_vec(rng, 2.0);
    const Vec3 eta = oracle::rand_vec(rng, 2.0);
    const Vec3 zeta = oracle::rand_vec(rng, 2.0);
    const Vec3 d_eta = oracle::rand_vec(rng, 1.0);
    const Vec3 d_zeta = oracle::rand_vec(rng, 1.0);
    for (const ConnectionKind& k : kinds) {
      const bool bi = k.invariance == Invariance::kBi;
      const Mat3 metric = bi ? Mat3::Identity() : inertia;
      // Left and right kinds return the metric applied to nabla.
      const Vec3 a = covariant_derivative(k, inertia, xi, eta, d_eta);
      const Vec3 b = covariant_derivative(k, inertia, xi, zeta, d_zeta);
      const double lhs = zeta.dot(a) + eta.dot(b);
      const double rhs = d_eta.dot(metric * zeta) + eta.dot(metric * d_zeta);
      EXPECT_NEAR(lhs, rhs, kTol);
    }
  }
}

TEST(Connection, EulerEquationForm) {
  // Left-invariant body form with d_eta = Omega_dot gives
  // I Omega_dot - (I Omega) x Omega, the free rigid body operator.
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    const Mat3 inertia = random_spd(rng);
    const Vec3 w = oracle::rand_vec(rng, 2.0);
    const Vec3 wd = oracle::rand_vec(rng, 2.0);
    const Vec3 lhs = covariant_derivative({Invariance::kLeft, Frame::kBody},
                                          inertia, w, w, wd);
    EXPECT_LT((lhs - (inertia * wd - (inertia * w).cross(w))).norm(), kTol);
  }
}
