#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <utility>
#include <vector>

#include "mfglab/errors.hpp"
#include "mfglab/geometry.hpp"
#include "mfglab/model.hpp"
#include "mfglab/trajopt.hpp"
#include "mfglab/util.hpp"

namespace mfglab {

// Cached evaluator of the value function u(t, x). An injected closed-form
// evaluator replaces the trajectory solver (used to exercise the probing
// machinery against synthetic value functions).
class ValueSampler {
 public:
  explicit ValueSampler(OptimalControlProblem prob) : prob_(std::move(prob)) {}

  ValueSampler(OptimalControlProblem prob,
               std::function<double(double, const Vec&)> injected)
      : prob_(std::move(prob)), injected_(std::move(injected)) {}

  const OptimalControlProblem& problem() const { return prob_; }

  double value(double t, const Vec& x) const {
    if (injected_) return injected_(t, x);
    if (t >= prob_.T - 1e-12) return prob_.g(x);
    Key key = make_key(t, x);
    {
      std::shared_lock lock(mutex_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    double v = solve_trajectory_global(prob_, t, x).value;
    std::unique_lock lock(mutex_);
    cache_.emplace(key, v);
    return v;
  }

  // Full solve (uncached) when the dual arc is needed.
  TrajSolution solve(double t, const Vec& x) const {
    if (injected_) throw ConfigError("injected sampler has no trajectories");
    return solve_trajectory_global(prob_, t, x);
  }

  // Probes stay inside [0, T - eps]; the constants of the sensitivity
  // estimates degrade near the horizon.
  double window_end() const { return prob_.T * 0.9; }

  double fd_step_floor() const { return 1e-4 * prob_.dom.diameter(); }

  std::size_t cache_size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
  }

 private:
  using Key = std::pair<long long, std::pair<long long, long long>>;

  static long long quantize(double v) { return std::llround(v * 1e12); }

  Key make_key(double t, const Vec& x) const {
    return {quantize(t), {quantize(x[0]), x.n > 1 ? quantize(x[1]) : 0}};
  }

  OptimalControlProblem prob_;
  std::function<double(double, const Vec&)> injected_;
  mutable std::shared_mutex mutex_;
  mutable std::map<Key, double> cache_;
};

struct SuperdiffEstimate {
  double t = 0.0;
  Vec x;
  // Representative (p_t, p_x) covectors. Interior differentiable points give
  // a singleton; a detected 1D kink stores the two extreme slopes; boundary
  // points store samples of the ray {tangential_part + lambda nu}.
  std::vector<std::pair<double, Vec>> slopes;
  double defect_constant = 0.0;  // smallest C with defect <= C r^{3/2} on probes
  bool boundary = false;
  bool kink = false;
  Vec tangential_part;    // boundary only
  double lambda_max = 0;  // boundary only: slopes = {p^tau + lambda nu, lambda <= lambda_max}
};

namespace detail {

// Forward difference quotient toward a (projected) step, Richardson
// extrapolated to kill the O(r) term.
inline double one_sided_derivative(const ValueSampler& s, double t, const Vec& x,
                                   const Vec& dir, double r) {
  const Domain& dom = s.problem().dom;
  double base = s.value(t, x);
  auto quot = [&](double rr) {
    Vec y = project(dom, x + rr * dir);
    return (s.value(t, y) - base) / rr;
  };
  return 2.0 * quot(0.5 * r) - quot(r);
}

inline double time_derivative(const ValueSampler& s, double t, const Vec& x, double r,
                              double t_lo, double t_hi) {
  if (t - r >= t_lo && t + r <= t_hi)
    return (s.value(t + r, x) - s.value(t - r, x)) / (2.0 * r);
  if (t + r <= t_hi) {
    auto quot = [&](double rr) { return (s.value(t + rr, x) - s.value(t, x)) / rr; };
    return 2.0 * quot(0.5 * r) - quot(r);
  }
  auto quot = [&](double rr) { return (s.value(t, x) - s.value(t - rr, x)) / rr; };
  return 2.0 * quot(0.5 * r) - quot(r);
}

}  // namespace detail

// Superdifferential estimate at (t, x) by two-scale stencil probing with the
// fractional allowance C r^{3/2}.
inline SuperdiffEstimate superdifferential(const ValueSampler& s, double t, const Vec& x,
                                           int n_probe = 32) {
  const Domain& dom = s.problem().dom;
  const int dim = dom.dim();
  if (n_probe < (dim == 1 ? 6 : 10)) throw DegenerateProbeSet("too few probes to span");
  if (t >= s.problem().T) throw OutOfWindow("base time at the horizon");

  SuperdiffEstimate est;
  est.t = t;
  est.x = x;
  est.tangential_part = Vec::zero(dim);

  double r = std::max(1e-2 * dom.diameter(), s.fd_step_floor());
  // Keep the two-scale spatial stencil inside the tube.
  r = std::min(r, 0.45 * dom.rho0());
  const double t_hi = std::min(s.window_end(), s.problem().T - 1e-9);
  const double t_lo = 0.0;
  const double u0 = s.value(t, x);

  est.boundary = on_boundary(dom, x, 1e-8);
  double p_t = detail::time_derivative(s, t, x, r, t_lo, t_hi);

  if (est.boundary) {
    Vec nu = outward_normal(dom, x);
    if (dim == 2) {
      Vec tau = boundary_tangent(dom, x);
      // Central difference along the projected boundary curve.
      auto tval = [&](double rr) {
        return (s.value(t, project(dom, x + rr * tau)) -
                s.value(t, project(dom, x - rr * tau))) /
               (2.0 * rr);
      };
      double dtau = (4.0 * tval(0.5 * r) - tval(r)) / 3.0;
      est.tangential_part = dtau * tau;
    }
    double inward = detail::one_sided_derivative(s, t, x, -1.0 * nu, r);
    est.lambda_max = -inward;
    for (double lam : {est.lambda_max, est.lambda_max - 0.5, est.lambda_max - 1.0})
      est.slopes.push_back({p_t, est.tangential_part + lam * nu});
  } else {
    // Interior: central differences per axis, kink detection by comparing
    // one-sided slopes across the two stencil scales.
    double safe = std::min(r, 0.9 * (-signed_distance(dom, x)));
    safe = std::max(safe, 0.25 * s.fd_step_floor());
    Vec grad = Vec::zero(dim);
    double worst_gap_r = 0.0, worst_gap_r4 = 0.0;
    Vec fwd4 = Vec::zero(dim), bwd4 = Vec::zero(dim);
    for (int a = 0; a < dim; ++a) {
      Vec e = Vec::zero(dim);
      e[a] = 1.0;
      auto fq = [&](double rr) { return (s.value(t, project(dom, x + rr * e)) - u0) / rr; };
      auto bq = [&](double rr) { return (u0 - s.value(t, project(dom, x - rr * e))) / rr; };
      double f_r = fq(safe), b_r = bq(safe);
      double f_4 = fq(0.25 * safe), b_4 = bq(0.25 * safe);
      grad[a] = 0.5 * (f_4 + b_4);
      fwd4[a] = f_4;
      bwd4[a] = b_4;
      worst_gap_r = std::max(worst_gap_r, std::abs(b_r - f_r));
      worst_gap_r4 = std::max(worst_gap_r4, std::abs(b_4 - f_4));
    }
    // A kink keeps the forward/backward gap as the stencil shrinks.
    est.kink = worst_gap_r4 > 1e-4 && worst_gap_r4 > 0.5 * worst_gap_r;
    if (est.kink && dim == 1) {
      est.slopes.push_back({p_t, Vec(fwd4[0])});  // smaller slope at a concave kink
      est.slopes.push_back({p_t, Vec(bwd4[0])});
    } else {
      est.slopes.push_back({p_t, grad});
    }
  }

  // Fit the smallest C against every stencil sample for the representative
  // slope(s): positive part of the supporting-plane defect over r^{3/2}.
  std::vector<std::pair<double, Vec>> samples;  // (time, point)
  int dirs = dim == 1 ? 2 : 16;
  for (double scale : {r, 0.25 * r}) {
    for (int d = 0; d < dirs; ++d) {
      Vec dir = dim == 1 ? Vec(d == 0 ? 1.0 : -1.0)
                         : Vec(std::cos(2.0 * M_PI * d / dirs),
                               std::sin(2.0 * M_PI * d / dirs));
      samples.push_back({t, project(dom, x + scale * dir)});
    }
    if (t + scale <= t_hi) samples.push_back({t + scale, x});
    if (t - scale >= t_lo) samples.push_back({t - scale, x});
  }
  double C = 0.0;
  for (const auto& [pt, px] : est.slopes) {
    for (const auto& [ts, y] : samples) {
      double dist = std::sqrt(norm_sq(y - x) + (ts - t) * (ts - t));
      if (dist < 1e-14) continue;
      double defect = s.value(ts, y) - u0 - pt * (ts - t) - dot(px, y - x);
      C = std::max(C, std::max(defect, 0.0) / std::pow(dist, 1.5));
    }
  }
  est.defect_constant = C;
  return est;
}

// One-sided derivative along a contingent-cone direction, Richardson
// extrapolated.
inline double directional_derivative(const ValueSampler& s, double t, const Vec& x,
                                     const Vec& theta) {
  const Domain& dom = s.problem().dom;
  if (on_boundary(dom, x, 1e-8)) {
    Vec nu = outward_normal(dom, x);
    if (dot(theta, nu) > 1e-10) throw NotInCone("direction leaves the closed domain");
  }
  double r = std::max(1e-3 * dom.diameter(), s.fd_step_floor());
  r = std::min(r, 0.45 * dom.rho0() / (1.0 + norm(theta)));
  return detail::one_sided_derivative(s, t, x, theta, r);
}

// Defect of the dual-arc sensitivity inequality:
//   u(t+sigma, x+h) - u(t,x) - sigma H(t,x,p) - <p, h>.
inline double sensitivity_probe(const ValueSampler& s, double t, const Vec& x,
                                const Vec& dual_p, const Vec& h, double sigma) {
  const OptimalControlProblem& prob = s.problem();
  if (t + sigma < 0.0 || t + sigma > s.window_end() || t > s.window_end())
    throw OutOfWindow("probe time outside [0, T - eps]");
  if (signed_distance(prob.dom, x + h) > 1e-9)
    throw OutOfWindow("shifted point outside the closed domain");
  Hamiltonian ham{prob.lagrangian};
  double Hval = ham.H(x, dual_p) - prob.coupling(t, x);
  return s.value(t + sigma, x + h) - s.value(t, x) - sigma * Hval - dot(dual_p, h);
}

// Centered second difference 1/2 u(t+s, x+h) + 1/2 u(t-s, x-h) - u(t, x).
inline double semiconcavity_probe(const ValueSampler& s, double t, const Vec& x,
                                  const Vec& h, double sigma) {
  const OptimalControlProblem& prob = s.problem();
  if (t - sigma < 0.0 || t + sigma > s.window_end()) throw OutOfWindow("time probe outside window");
  if (signed_distance(prob.dom, x + h) > 1e-9 || signed_distance(prob.dom, x - h) > 1e-9)
    throw OutOfWindow("spatial probe outside the closed domain");
  return 0.5 * s.value(t + sigma, x + h) + 0.5 * s.value(t - sigma, x - h) -
         s.value(t, x);
}

// Dyadic sweep of the centered defect along fixed space/time directions;
// returns (r, defect) pairs for log-log fitting.
inline std::vector<std::pair<double, double>> semiconcavity_sweep(
    const ValueSampler& s, double t, const Vec& x, const Vec& h_dir, double sigma_dir,
    int k_min = 3, int k_max = 9) {
  std::vector<std::pair<double, double>> out;
  for (int k = k_min; k <= k_max; ++k) {
    double r = std::pow(2.0, -k);
    out.push_back({r, semiconcavity_probe(s, t, x, r * h_dir, r * sigma_dir)});
  }
  return out;
}

}  // namespace mfglab
