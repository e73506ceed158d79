#pragma once

#include <algorithm>
#include <cmath>

#include "mfglab/errors.hpp"
#include "mfglab/trajectory.hpp"
#include "mfglab/vec.hpp"

namespace mfglab {

// Analytic C^2 domain family. The signed boundary distance b is negative
// inside, zero on the boundary, positive outside, and is C^2 on the tube
// |b| < rho0. rho0 is derived from the shape parameters, never supplied by
// the caller.
class Domain {
 public:
  enum class Kind { Interval, Disk, Ellipse };

  static Domain interval(double a, double b) {
    if (!(a < b)) throw ConfigError("interval requires a < b");
    Domain d;
    d.kind_ = Kind::Interval;
    d.a_ = a;
    d.b_ = b;
    d.rho0_ = 0.5 * (b - a);
    return d;
  }

  static Domain disk(Vec center, double radius) {
    if (!(radius > 0.0)) throw ConfigError("disk requires radius > 0");
    Domain d;
    d.kind_ = Kind::Disk;
    d.center_ = center;
    d.radius_ = radius;
    d.rho0_ = radius;
    return d;
  }

  static Domain ellipse(Vec center, Vec semi_axes) {
    if (!(semi_axes[0] > 0.0 && semi_axes[1] > 0.0))
      throw ConfigError("ellipse requires positive semi-axes");
    Domain d;
    d.kind_ = Kind::Ellipse;
    d.center_ = center;
    d.semi_ = semi_axes;
    double lo = std::min(semi_axes[0], semi_axes[1]);
    double hi = std::max(semi_axes[0], semi_axes[1]);
    // Conservative focal bound: the minimal radius of curvature lo^2/hi
    // caps the width of the C^2 tube.
    d.rho0_ = lo * lo / hi;
    return d;
  }

  Kind kind() const { return kind_; }
  int dim() const { return kind_ == Kind::Interval ? 1 : 2; }
  double rho0() const { return rho0_; }
  double interval_a() const { return a_; }
  double interval_b() const { return b_; }
  Vec center() const { return center_; }
  double radius() const { return radius_; }
  Vec semi_axes() const { return semi_; }

  double diameter() const {
    switch (kind_) {
      case Kind::Interval: return b_ - a_;
      case Kind::Disk: return 2.0 * radius_;
      case Kind::Ellipse: return 2.0 * std::max(semi_[0], semi_[1]);
    }
    return 0.0;
  }

  // A reference interior point (used as fallback probe center).
  Vec interior_point() const {
    if (kind_ == Kind::Interval) return Vec(0.5 * (a_ + b_));
    return center_;
  }

 private:
  Kind kind_ = Kind::Interval;
  double a_ = -1.0, b_ = 1.0;  // interval
  Vec center_{0.0, 0.0};       // disk / ellipse
  double radius_ = 1.0;        // disk
  Vec semi_{1.0, 1.0};         // ellipse
  double rho0_ = 1.0;

  friend struct EllipseProjection;
};

namespace detail {

// Nearest boundary parameter of the ellipse for the offset q = x - center,
// by coarse scan plus Newton polish on the stationarity equation
// <e(theta) - q, e'(theta)> = 0. Unique in the rho0 tube.
inline double ellipse_boundary_parameter(const Vec& semi, const Vec& q) {
  const double A = semi[0], B = semi[1];
  auto dist_sq = [&](double th) {
    double dx = A * std::cos(th) - q[0];
    double dy = B * std::sin(th) - q[1];
    return dx * dx + dy * dy;
  };
  auto g = [&](double th) {
    double s = std::sin(th), c = std::cos(th);
    return (B * B - A * A) * s * c + q[0] * A * s - q[1] * B * c;
  };
  auto dg = [&](double th) {
    double s = std::sin(th), c = std::cos(th);
    return (B * B - A * A) * (c * c - s * s) + q[0] * A * c + q[1] * B * s;
  };
  const int kScan = 64;
  double best = 0.0, best_d = dist_sq(0.0);
  for (int i = 1; i < kScan; ++i) {
    double th = 2.0 * M_PI * i / kScan;
    double d = dist_sq(th);
    if (d < best_d) {
      best_d = d;
      best = th;
    }
  }
  double th = best;
  for (int it = 0; it < 50; ++it) {
    double gv = g(th);
    double dgv = dg(th);
    if (std::abs(dgv) < 1e-300) break;
    double step = gv / dgv;
    th -= step;
    if (std::abs(step) < 1e-12) break;
  }
  return th;
}

}  // namespace detail

inline double signed_distance(const Domain& dom, const Vec& x) {
  switch (dom.kind()) {
    case Domain::Kind::Interval:
      return std::max(dom.interval_a() - x[0], x[0] - dom.interval_b());
    case Domain::Kind::Disk:
      return norm(x - dom.center()) - dom.radius();
    case Domain::Kind::Ellipse: {
      Vec q = x - dom.center();
      Vec s = dom.semi_axes();
      double th = detail::ellipse_boundary_parameter(s, q);
      Vec e(s[0] * std::cos(th), s[1] * std::sin(th));
      double d = norm(q - e);
      double lvl = (q[0] / s[0]) * (q[0] / s[0]) + (q[1] / s[1]) * (q[1] / s[1]);
      return lvl < 1.0 ? -d : d;
    }
  }
  return 0.0;
}

inline double dist_outside(const Domain& dom, const Vec& x) {
  return std::max(signed_distance(dom, x), 0.0);
}

inline bool contains(const Domain& dom, const Vec& x, double tol = 1e-9) {
  return signed_distance(dom, x) <= tol;
}

inline Vec grad_b(const Domain& dom, const Vec& x) {
  double b = signed_distance(dom, x);
  if (std::abs(b) >= dom.rho0()) throw OutsideTube("grad_b outside the C^2 tube");
  switch (dom.kind()) {
    case Domain::Kind::Interval:
      return Vec(x[0] > 0.5 * (dom.interval_a() + dom.interval_b()) ? 1.0 : -1.0);
    case Domain::Kind::Disk:
      return normalized(x - dom.center());
    case Domain::Kind::Ellipse: {
      Vec q = x - dom.center();
      Vec s = dom.semi_axes();
      double th = detail::ellipse_boundary_parameter(s, q);
      Vec e(s[0] * std::cos(th), s[1] * std::sin(th));
      // Outward normal of the level set at the projection point.
      return normalized(Vec(e[0] / (s[0] * s[0]), e[1] / (s[1] * s[1])));
    }
  }
  return Vec(0.0);
}

inline Mat hess_b(const Domain& dom, const Vec& x) {
  double b = signed_distance(dom, x);
  if (std::abs(b) >= dom.rho0()) throw OutsideTube("hess_b outside the C^2 tube");
  switch (dom.kind()) {
    case Domain::Kind::Interval:
      return Mat::zero(1);
    case Domain::Kind::Disk: {
      Vec u = normalized(x - dom.center());
      double r = norm(x - dom.center());
      Mat m = Mat::identity(2);
      m += (-1.0) * Mat::outer(u, u);
      m *= 1.0 / r;
      return m;
    }
    case Domain::Kind::Ellipse: {
      Vec q = x - dom.center();
      Vec s = dom.semi_axes();
      double th = detail::ellipse_boundary_parameter(s, q);
      double si = std::sin(th), co = std::cos(th);
      double w = s[0] * s[0] * si * si + s[1] * s[1] * co * co;
      double kappa = s[0] * s[1] / (w * std::sqrt(w));
      Vec e(s[0] * co, s[1] * si);
      Vec nu = normalized(Vec(e[0] / (s[0] * s[0]), e[1] / (s[1] * s[1])));
      Vec tau = perp(nu);
      Mat m = Mat::outer(tau, tau);
      m *= kappa / (1.0 + b * kappa);
      return m;
    }
  }
  return Mat::zero(dom.dim());
}

// Nearest point of the closed domain; identity on the inside. Only defined
// on the tube d_Omega < rho0.
// Nearest boundary point; valid inside the C^2 tube on either side.
inline Vec boundary_projection(const Domain& dom, const Vec& x) {
  double b = signed_distance(dom, x);
  if (std::abs(b) >= dom.rho0()) throw OutsideTube("projection outside the tube");
  switch (dom.kind()) {
    case Domain::Kind::Interval: {
      double mid = 0.5 * (dom.interval_a() + dom.interval_b());
      return Vec(x[0] > mid ? dom.interval_b() : dom.interval_a());
    }
    case Domain::Kind::Disk:
      return dom.center() + dom.radius() * normalized(x - dom.center());
    case Domain::Kind::Ellipse: {
      Vec q = x - dom.center();
      Vec s = dom.semi_axes();
      double th = detail::ellipse_boundary_parameter(s, q);
      return dom.center() + Vec(s[0] * std::cos(th), s[1] * std::sin(th));
    }
  }
  return x;
}

inline Vec project(const Domain& dom, const Vec& x) {
  double b = signed_distance(dom, x);
  if (b >= dom.rho0()) throw OutsideTube("projection outside the tube");
  if (b <= 0.0) return x;
  return boundary_projection(dom, x);
}

inline Vec outward_normal(const Domain& dom, const Vec& x) { return grad_b(dom, x); }

inline bool on_boundary(const Domain& dom, const Vec& x, double tol = 1e-8) {
  return std::abs(signed_distance(dom, x)) <= tol;
}

// Unit tangent direction at a boundary point (2D only; the tangent space of
// an interval endpoint is trivial).
inline Vec boundary_tangent(const Domain& dom, const Vec& x) {
  if (dom.dim() == 1) return Vec(0.0);
  return perp(outward_normal(dom, x));
}

// The projected perturbation gamma_hat_h: shift the head of the trajectory
// by (1 + (t-s)/r)_+ h and push every node back onto the closed domain.
inline Trajectory perturbed_projected_path(const Domain& dom, const Trajectory& traj,
                                           const Vec& h, double r) {
  if (norm(h) > std::min(dom.rho0(), r) + 1e-15)
    throw PerturbationTooLarge("|h| must not exceed min(rho0, r)");
  Trajectory out = traj;
  double t = traj.t0;
  for (int k = 0; k <= traj.steps(); ++k) {
    double s = traj.time(k);
    double factor = std::max(1.0 + (t - s) / r, 0.0);
    Vec y = traj.nodes[k] + factor * h;
    out.nodes[k] = project(dom, y);
  }
  return out;
}

// Projected straight line through a boundary point with tangent velocity v;
// realizes the tangential admissible directions.
inline Trajectory tangential_line_path(const Domain& dom, double t, const Vec& x,
                                       const Vec& v, double R, int steps = 64) {
  if (!on_boundary(dom, x, 1e-8)) throw NotBoundary("base point must lie on the boundary");
  if (dom.dim() == 2) {
    Vec nu = outward_normal(dom, x);
    if (std::abs(dot(v, nu)) > 1e-10) throw NotTangent("velocity has a normal component");
  } else if (std::abs(v[0]) > 1e-10) {
    throw NotTangent("only v = 0 is tangent at an interval endpoint");
  }
  if (!(R < dom.rho0() / (1.0 + norm(v))))
    throw PerturbationTooLarge("horizon R too large for the tube");
  Trajectory out;
  out.t0 = t;
  out.T = t + R;
  out.nodes.resize(steps + 1);
  for (int k = 0; k <= steps; ++k) {
    double s = t + R * k / steps;
    out.nodes[k] = project(dom, x + (s - t) * v);
  }
  return out;
}

}  // namespace mfglab
