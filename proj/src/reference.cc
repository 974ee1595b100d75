#include "sphero/reference.h"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sphero/errors.h"

namespace sphero {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct SplineDeleter {
  void operator()(gsl_spline* s) const { gsl_spline_free(s); }
};
using SplinePtr = std::unique_ptr<gsl_spline, SplineDeleter>;

SplinePtr make_spline(const std::vector<double>& t,
                      const std::vector<double>& v) {
  SplinePtr s(gsl_spline_alloc(gsl_interp_cspline, t.size()));
  if (gsl_spline_init(s.get(), t.data(), v.data(), t.size()) != GSL_SUCCESS) {
    throw ValidationError("reference.path", "spline construction failed");
  }
  return s;
}

void sinusoid_sample(const ReferenceTrajectory& tr, double t,
                     double out[3][2]) {
  const double a = tr.amplitude;
  const double k = kTwoPi / tr.wavelength;
  const double v = tr.speed;
  const double target = v * t;
  // Arc length at the eight panel nodes of one period, cached per shape.
  struct Nodes {
    double a = 0.0, lambda = 0.0;
    std::array<double, 9> s{};
  };
  thread_local Nodes nodes;
  const double panel = tr.wavelength / 8.0;
  auto slope = [&](double u) {
    const double yp = a * k * std::cos(k * u);
    return std::sqrt(1.0 + yp * yp);
  };
  auto integrate = [&](double lo, double hi) {
    return boost::math::quadrature::gauss<double, 20>::integrate(slope, lo, hi);
  };
  if (nodes.a != a || nodes.lambda != tr.wavelength) {
    nodes.a = a;
    nodes.lambda = tr.wavelength;
    for (int i = 0; i < 8; ++i) {
      nodes.s[i + 1] = nodes.s[i] + integrate(i * panel, (i + 1) * panel);
    }
  }
  const double period_len = nodes.s[8];
  const double whole = std::floor(target / period_len);
  const double rest = target - whole * period_len;
  const int j = std::clamp(
      static_cast<int>(std::upper_bound(nodes.s.begin(), nodes.s.end(), rest) -
                       nodes.s.begin()) - 1,
      0, 7);
  // Newton on s(x) = v t inside panel j; ds/dx >= 1 keeps it well posed.
  const double x0 = j * panel;
  double x = x0 + (rest - nodes.s[j]);
  for (int it = 0; it < 50; ++it) {
    const double f = nodes.s[j] + integrate(x0, x) - rest;
    const double dx = f / slope(x);
    x -= dx;
    if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) break;
  }
  x += whole * tr.wavelength;
  const double yp = a * k * std::cos(k * x);
  const double ypp = -a * k * k * std::sin(k * x);
  const double q = 1.0 + yp * yp;
  const double xd = v / std::sqrt(q);
  const double xdd = -v * yp * ypp * xd / (q * std::sqrt(q));
  out[0][0] = tr.cx + x;
  out[0][1] = tr.cy + a * std::sin(k * x);
  out[1][0] = xd;
  out[1][1] = yp * xd;
  out[2][0] = xdd;
  out[2][1] = ypp * xd * xd + yp * xdd;
}

}  // namespace

struct SampledPath::Impl {
  double t0;
  double t1;
  SplinePtr x;
  SplinePtr y;
};

SampledPath::SampledPath(std::vector<double> t, std::vector<double> x,
                         std::vector<double> y) {
  if (t.size() < 3 || x.size() != t.size() || y.size() != t.size()) {
    throw ValidationError("reference.path",
                          "need at least 3 rows of (t, x, y)");
  }
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) {
      throw ValidationError("reference.path",
                            "time column must be strictly increasing");
    }
  }
  impl_ = std::make_unique<Impl>();
  impl_->t0 = t.front();
  impl_->t1 = t.back();
  impl_->x = make_spline(t, x);
  impl_->y = make_spline(t, y);
}

SampledPath::~SampledPath() = default;

std::shared_ptr<const SampledPath> SampledPath::load_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("reference.path", "cannot open " + path);
  std::vector<double> t, x, y;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream ls(line);
    double a, b, c;
    if (!(ls >> a >> b >> c)) {
      if (first) {
        first = false;
        continue;
      }
      throw ValidationError("reference.path", "bad row in " + path);
    }
    first = false;
    t.push_back(a);
    x.push_back(b);
    y.push_back(c);
  }
  return std::make_shared<const SampledPath>(t, x, y);
}

void SampledPath::eval(double t, double out[3][2]) const {
  const gsl_spline* s[2] = {impl_->x.get(), impl_->y.get()};
  const bool held = t <= impl_->t0 || t >= impl_->t1;
  const double tc = std::clamp(t, impl_->t0, impl_->t1);
  for (int k = 0; k < 2; ++k) {
    out[0][k] = gsl_spline_eval(s[k], tc, nullptr);
    out[1][k] = held ? 0.0 : gsl_spline_eval_deriv(s[k], tc, nullptr);
    out[2][k] = held ? 0.0 : gsl_spline_eval_deriv2(s[k], tc, nullptr);
  }
}

const char* to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::kFixedPoint: return "fixed_point";
    case ReferenceKind::kCircle: return "circle";
    case ReferenceKind::kSinusoid: return "sinusoid";
    case ReferenceKind::kCustom: return "custom";
  }
  return "unknown";
}

ReferenceKind reference_kind_from_string(const std::string& name) {
  for (ReferenceKind k : {ReferenceKind::kFixedPoint, ReferenceKind::kCircle,
                          ReferenceKind::kSinusoid, ReferenceKind::kCustom}) {
    if (name == to_string(k)) return k;
  }
  throw ValidationError("reference.kind",
                        name.empty() ? "missing" : "unknown kind '" + name + "'");
}

double sinusoid_arclength(double amplitude, double wavelength, double x) {
  const double k = kTwoPi / wavelength;
  auto f = [&](double u) {
    const double yp = amplitude * k * std::cos(k * u);
    return std::sqrt(1.0 + yp * yp);
  };
  // Panels of an eighth of a wavelength keep Gauss-Legendre at round-off.
  const double panel = wavelength / 8.0;
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(x) / panel)));
  const double h = x / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    s += boost::math::quadrature::gauss<double, 20>::integrate(f, i * h,
                                                               (i + 1) * h);
  }
  return s;
}

ReferenceSample sample(const ReferenceTrajectory& tr, double t) {
  double p[3][2] = {{tr.cx, tr.cy}, {0.0, 0.0}, {0.0, 0.0}};
  switch (tr.kind) {
    case ReferenceKind::kFixedPoint:
      break;
    case ReferenceKind::kCircle: {
      const double w = kTwoPi / tr.period;
      const double c = std::cos(w * t);
      const double s = std::sin(w * t);
      p[0][0] = tr.cx + tr.radius * c;
      p[0][1] = tr.cy + tr.radius * s;
      p[1][0] = -tr.radius * w * s;
      p[1][1] = tr.radius * w * c;
      p[2][0] = -tr.radius * w * w * c;
      p[2][1] = -tr.radius * w * w * s;
      break;
    }
    case ReferenceKind::kSinusoid:
      sinusoid_sample(tr, t, p);
      break;
    case ReferenceKind::kCustom:
      if (!tr.path) throw ValidationError("reference.path", "not loaded");
      tr.path->eval(t, p);
      break;
  }
  return {Vec3(p[0][0], p[0][1], tr.height), Vec3(p[1][0], p[1][1], 0.0),
          Vec3(p[2][0], p[2][1], 0.0)};
}

Vec3 omega_ref(const Vec3& o_dot, double beta, double r) {
  return e3().cross(o_dot) / r + beta * e3();
}

Vec3 omega_ref_dot(const Vec3& o_ddot, double beta_dot, double r) {
  return e3().cross(o_ddot) / r + beta_dot * e3();
}

}  // namespace sphero
