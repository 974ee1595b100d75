#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sphero/lie.h"

namespace sphero {

enum class ReferenceKind { kFixedPoint, kCircle, kSinusoid, kCustom };

const char* to_string(ReferenceKind kind);
/// Throws ValidationError for unknown or empty names.
ReferenceKind reference_kind_from_string(const std::string& name);

/// Planar path (t, x, y) interpolated by natural cubic splines. Outside the
/// sampled time range the endpoint is held with zero velocity.
class SampledPath {
 public:
  SampledPath(std::vector<double> t, std::vector<double> x,
              std::vector<double> y);
  ~SampledPath();
  SampledPath(const SampledPath&) = delete;
  SampledPath& operator=(const SampledPath&) = delete;

  /// Reads rows "t,x,y"; a non-numeric first row is treated as a header.
  static std::shared_ptr<const SampledPath> load_csv(const std::string& path);

  /// Position, velocity and acceleration in the plane at time t.
  void eval(double t, double out[3][2]) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ReferenceTrajectory {
  ReferenceKind kind{ReferenceKind::kFixedPoint};
  /// Fixed-point target, circle centre, or sinusoid start (x, y).
  double cx{3.0};
  double cy{0.0};
  double radius{2.0};
  double period{40.0};
  double amplitude{1.0};
  double wavelength{4.0};
  double speed{0.2};
  /// Height of the shell centre above the plane (the shell radius).
  double height{0.18};
  std::shared_ptr<const SampledPath> path;
};

struct ReferenceSample {
  Vec3 o;
  Vec3 o_dot;
  Vec3 o_ddot;
};

ReferenceSample sample(const ReferenceTrajectory& traj, double t);

/// Arc length of the sinusoid y = A sin(2 pi x / lambda) from 0 to x.
double sinusoid_arclength(double amplitude, double wavelength, double x);

/// Angular velocity that rolls the shell along o_dot without slip, plus a
/// twist beta about the normal: (1/r) e3 x o_dot + beta e3.
Vec3 omega_ref(const Vec3& o_dot, double beta, double r);
Vec3 omega_ref_dot(const Vec3& o_ddot, double beta_dot, double r);

}  // namespace sphero
