#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mfglab/equilibrium.hpp"
#include "mfglab/errors.hpp"
#include "mfglab/measure.hpp"
#include "mfglab/model.hpp"
#include "mfglab/valuefn.hpp"

namespace mfglab {

enum class SupportClass { interior_support, boundary_support, off_support };

struct SupportThresholds {
  double delta_b = 0.0;  // spatial radius
  double delta_m = 0.0;  // mass threshold

  // Defaults tied to the ensemble: twice the mean nearest-neighbor spacing of
  // the distinct start positions, and half the smallest weight. Coincident
  // points (mixtures duplicate starts) are ignored when measuring spacing.
  static SupportThresholds from_flow(const MeasureFlow& flow) {
    const ParticleMeasure& m = flow.snapshots.front();
    double spacing = 0.0;
    std::size_t counted = 0;
    std::size_t stride = std::max<std::size_t>(1, m.size() / 512);
    for (std::size_t i = 0; i < m.size(); i += stride) {
      double nn = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m.size(); ++j) {
        double d = norm(m.points[i] - m.points[j]);
        if (j != i && d > 1e-12) nn = std::min(nn, d);
      }
      if (std::isfinite(nn)) {
        spacing += nn;
        ++counted;
      }
    }
    spacing /= std::max<std::size_t>(counted, 1);
    double wmin = *std::min_element(m.weights.begin(), m.weights.end());
    return {2.0 * spacing, 0.5 * wmin};
  }
};

inline SupportClass classify_support(const MeasureFlow& flow, const Domain& dom,
                                     double t, const Vec& x,
                                     const SupportThresholds& thr) {
  int i = flow.node_index(t);
  if (i < 0) throw OffGrid("classification time not on the grid");
  const ParticleMeasure& m = flow.snapshots[i];
  const double wall_tol = 1e-7 * (1.0 + dom.diameter());
  double mass = 0.0, wall_mass = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (norm(x - m.points[j]) > thr.delta_b) continue;
    mass += m.weights[j];
    if (std::abs(signed_distance(dom, m.points[j])) <= wall_tol)
      wall_mass += m.weights[j];
  }
  if (mass < thr.delta_m) return SupportClass::off_support;
  // Boundary class requires mass actually sitting on the wall nearby, not
  // just proximity of the query point to the wall.
  return std::abs(signed_distance(dom, x)) <= thr.delta_b && wall_mass >= thr.delta_m
             ? SupportClass::boundary_support
             : SupportClass::interior_support;
}

namespace detail {

// Central-difference space/time gradient of u at an interior point; steps
// shrink near the boundary so every probe stays inside the closed domain.
inline std::pair<double, Vec> interior_gradient(const ValueSampler& s, double t,
                                                const Vec& x) {
  const Domain& dom = s.problem().dom;
  int dim = dom.dim();
  double depth = -signed_distance(dom, x);
  double r = std::clamp(0.45 * depth, 0.25 * s.fd_step_floor(), 2.5e-3 * dom.diameter());
  Vec grad = Vec::zero(dim);
  for (int a = 0; a < dim; ++a) {
    Vec e = Vec::zero(dim);
    e[a] = 1.0;
    // Centered stencil when both probes fit; a second-order one-sided stencil
    // shifted to the feasible side otherwise. A curved wall can exclude both
    // sides of a tangential stencil: project those probes back onto the domain.
    bool plus_ok = signed_distance(dom, x + r * e) <= 0.0;
    bool minus_ok = signed_distance(dom, x - r * e) <= 0.0;
    if (plus_ok && minus_ok)
      grad[a] = (s.value(t, x + r * e) - s.value(t, x - r * e)) / (2.0 * r);
    else if (plus_ok && signed_distance(dom, x + 2.0 * r * e) <= 0.0)
      grad[a] = (-3.0 * s.value(t, x) + 4.0 * s.value(t, x + r * e) -
                 s.value(t, x + 2.0 * r * e)) /
                (2.0 * r);
    else if (minus_ok && signed_distance(dom, x - 2.0 * r * e) <= 0.0)
      grad[a] = (3.0 * s.value(t, x) - 4.0 * s.value(t, x - r * e) +
                 s.value(t, x - 2.0 * r * e)) /
                (2.0 * r);
    else {
      Vec xp = project(dom, x + r * e), xm = project(dom, x - r * e);
      double span = xp[a] - xm[a];
      grad[a] = span > 1e-12 ? (s.value(t, xp) - s.value(t, xm)) / span : 0.0;
    }
  }
  double rt = std::min(2.5e-3 * s.problem().T, 0.5 * (s.problem().T - t));
  double ut;
  if (t - rt >= 0.0)
    ut = (s.value(t + rt, x) - s.value(t - rt, x)) / (2.0 * rt);
  else
    ut = (s.value(t + rt, x) - s.value(t, x)) / rt;
  return {ut, grad};
}

}  // namespace detail

// |-du/dt + H(x, Du) - F(x, m(t))| at an interior support point (central
// differences; u is differentiable there).
inline double hjb_residual_interior(const ValueSampler& s, const MeasureFlow& flow,
                                    double t, const Vec& x,
                                    const SupportThresholds& thr) {
  if (classify_support(flow, s.problem().dom, t, x, thr) != SupportClass::interior_support)
    throw NotOnSupport("point is not classified interior_support");
  auto [ut, grad] = detail::interior_gradient(s, t, x);
  Hamiltonian ham{s.problem().lagrangian};
  return std::abs(-ut + ham.H(x, grad) - s.problem().coupling(t, x));
}

struct BoundaryHjbReport {
  double tangential_residual = 0.0;  // -du/dt + H^tau(x, D^tau u) - F
  double full_residual = 0.0;        // -du/dt + H(x, D^tau u + lambda+ nu) - F
  double lambda_plus_value = 0.0;
  double p_t = 0.0;
  Vec p_tau;
};

inline BoundaryHjbReport hjb_residual_boundary(const ValueSampler& s,
                                               const MeasureFlow& flow, double t,
                                               const Vec& x,
                                               const SupportThresholds& thr) {
  const Domain& dom = s.problem().dom;
  if (classify_support(flow, dom, t, x, thr) != SupportClass::boundary_support)
    throw NotOnSupport("point is not classified boundary_support");
  Vec xb = boundary_projection(dom, x);
  SuperdiffEstimate est = superdifferential(s, t, xb);
  Hamiltonian ham{s.problem().lagrangian};
  BoundaryHjbReport rep;
  rep.p_t = est.slopes.front().first;
  rep.p_tau = est.tangential_part;
  double F = s.problem().coupling(t, xb);
  rep.tangential_residual =
      std::abs(-rep.p_t + tangential_hamiltonian(ham, dom, xb, rep.p_tau) - F);
  rep.lambda_plus_value = lambda_plus(ham, dom, xb, rep.p_tau);
  Vec nu = outward_normal(dom, xb);
  rep.full_residual =
      std::abs(-rep.p_t + ham.H(xb, rep.p_tau + rep.lambda_plus_value * nu) - F);
  return rep;
}

// Interior gradients along an inward approach to a boundary point, compared
// with the boundary-reconstructed limit D^tau u + lambda+ nu.
inline std::vector<double> gradient_limit_check(const ValueSampler& s,
                                                const MeasureFlow& flow, double t,
                                                const Vec& x,
                                                const SupportThresholds& thr,
                                                const std::vector<double>& radii) {
  const Domain& dom = s.problem().dom;
  if (classify_support(flow, dom, t, x, thr) != SupportClass::boundary_support)
    throw NotOnSupport("point is not classified boundary_support");
  Vec xb = boundary_projection(dom, x);
  SuperdiffEstimate est = superdifferential(s, t, xb);
  Hamiltonian ham{s.problem().lagrangian};
  Vec nu = outward_normal(dom, xb);
  Vec limit = est.tangential_part + lambda_plus(ham, dom, xb, est.tangential_part) * nu;

  std::vector<double> errors;
  for (double r : radii) {
    Vec y = xb - r * nu;
    if (signed_distance(dom, y) >= 0.0) throw NoInteriorApproach("domain too thin");
    auto [ut, grad] = detail::interior_gradient(s, t, y);
    (void)ut;
    errors.push_back(norm(grad - limit));
  }
  return errors;
}

// The feedback velocity V of the continuity equation, pre-evaluated on a
// budgeted sample of classified support points; elsewhere the value is the
// Shepard (inverse-square-distance) blend of the 8 nearest samples.
class VelocityField {
 public:
  struct Sample {
    double t = 0.0;
    Vec x;
    Vec v;
    bool boundary = false;
    bool extended = false;
  };

  static VelocityField build(const ValueSampler& s, const MeasureFlow& flow,
                             const SupportThresholds& thr, int max_slices = 15,
                             int max_per_slice = 24) {
    VelocityField vf;
    const Domain& dom = s.problem().dom;
    vf.time_scale_ = dom.diameter() / s.problem().T;
    Hamiltonian ham{s.problem().lagrangian};

    int n_nodes = static_cast<int>(flow.grid_size());
    int stride = std::max(1, (n_nodes - 1) / std::max(1, max_slices - 1));
    for (int i = 0; i < n_nodes; i += stride) {
      double t = flow.times[i];
      if (t >= s.window_end()) break;
      const ParticleMeasure& m = flow.snapshots[i];
      std::vector<Vec> reps;
      for (std::size_t j = 0; j < m.size(); ++j) {
        bool dup = false;
        for (const Vec& r : reps)
          if (norm(r - m.points[j]) < 0.5 * thr.delta_b) dup = true;
        if (dup) continue;
        reps.push_back(m.points[j]);
        if (static_cast<int>(reps.size()) >= max_per_slice) break;
      }
      for (const Vec& x : reps) {
        SupportClass cls = classify_support(flow, dom, t, x, thr);
        if (cls == SupportClass::off_support) continue;
        Sample smp;
        smp.t = t;
        if (cls == SupportClass::boundary_support) {
          Vec xb = boundary_projection(dom, x);
          Vec nu = outward_normal(dom, xb);
          Vec p_tau = Vec::zero(dom.dim());
          if (dom.dim() == 2) {
            Vec tau = boundary_tangent(dom, xb);
            double r = std::min(1e-2 * dom.diameter(), 0.45 * dom.rho0());
            double dtau = (s.value(t, project(dom, xb + r * tau)) -
                           s.value(t, project(dom, xb - r * tau))) /
                          (2.0 * r);
            p_tau = dtau * tau;
          }
          double lam = lambda_plus(ham, dom, xb, p_tau);
          smp.x = xb;
          smp.v = -1.0 * ham.DpH(xb, p_tau + lam * nu);
          smp.boundary = true;
        } else {
          auto [ut, grad] = detail::interior_gradient(s, t, x);
          (void)ut;
          smp.x = x;
          smp.v = -1.0 * ham.DpH(x, grad);
        }
        vf.samples_.push_back(smp);
      }
    }
    if (vf.samples_.empty()) throw NotConverged("no support samples for V");
    return vf;
  }

  const std::vector<Sample>& samples() const { return samples_; }

  double sup_norm() const {
    double m = 0.0;
    for (const Sample& s : samples_) m = std::max(m, norm(s.v));
    return m;
  }

  Vec eval(double t, const Vec& x) const {
    // Shepard blend of the 8 nearest samples in scaled space-time.
    const int k = std::min<std::size_t>(8, samples_.size());
    std::vector<std::pair<double, int>> nearest;
    nearest.reserve(samples_.size());
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      double dt = (t - samples_[i].t) * time_scale_;
      double d2 = norm_sq(x - samples_[i].x) + dt * dt;
      nearest.push_back({d2, static_cast<int>(i)});
    }
    std::partial_sort(nearest.begin(), nearest.begin() + k, nearest.end());
    if (nearest.front().first < 1e-20) return samples_[nearest.front().second].v;
    double wsum = 0.0;
    Vec v = Vec::zero(x.n);
    for (int j = 0; j < k; ++j) {
      double w = 1.0 / nearest[j].first;
      wsum += w;
      v += w * samples_[nearest[j].second].v;
    }
    return v / wsum;
  }

 private:
  std::vector<Sample> samples_;
  double time_scale_ = 1.0;
};

// C^1 test function with compact support in time inside (0, T).
struct TestFunction {
  std::function<double(double, const Vec&)> value;
  std::function<double(double, const Vec&)> dt;
  std::function<Vec(double, const Vec&)> grad;
  double c1_norm = 1.0;

  // Tensor bump w((t-tc)/wt) * prod_a w((x_a-xc_a)/wx) with w(s) = (1-s^2)^3.
  static TestFunction bump(int dim, double tc, double wt, Vec xc, double wx) {
    auto w = [](double s) { return std::abs(s) >= 1.0 ? 0.0 : std::pow(1.0 - s * s, 3); };
    auto dw = [](double s) {
      return std::abs(s) >= 1.0 ? 0.0 : -6.0 * s * std::pow(1.0 - s * s, 2);
    };
    TestFunction f;
    f.value = [=](double t, const Vec& x) {
      double v = w((t - tc) / wt);
      for (int a = 0; a < dim; ++a) v *= w((x[a] - xc[a]) / wx);
      return v;
    };
    f.dt = [=](double t, const Vec& x) {
      double v = dw((t - tc) / wt) / wt;
      for (int a = 0; a < dim; ++a) v *= w((x[a] - xc[a]) / wx);
      return v;
    };
    f.grad = [=](double t, const Vec& x) {
      Vec g = Vec::zero(dim);
      for (int a = 0; a < dim; ++a) {
        double v = w((t - tc) / wt) * dw((x[a] - xc[a]) / wx) / wx;
        for (int b2 = 0; b2 < dim; ++b2)
          if (b2 != a) v *= w((x[b2] - xc[b2]) / wx);
        g[a] = v;
      }
      return g;
    };
    // max |w| = 1, max |w'| = 6 * (5/6)^2 / sqrt(5) ~ 1.8635.
    double dmax = 1.8634791734;
    f.c1_norm = 1.0 + dmax / wt + dim * dmax / wx;
    return f;
  }
};

// Weak residual of d/dt m + div(V m) = 0 against one test function,
// trapezoid in time and exact particle sums in space; normalized by the C^1
// norm of the test function.
inline double continuity_residual(const MeasureFlow& flow, const VelocityField& V,
                                  const TestFunction& phi) {
  // Support must stay away from t = 0 and t = T.
  for (int end : {0, 1}) {
    const ParticleMeasure& m = end ? flow.snapshots.back() : flow.snapshots.front();
    double t_end = end ? flow.T() : flow.t0();
    for (const Vec& x : m.points)
      if (std::abs(phi.value(t_end, x)) > 1e-12 || std::abs(phi.dt(t_end, x)) > 1e-12)
        throw BadTestFunction("test function support touches the time endpoints");
  }
  double integral = 0.0;
  std::size_t n_nodes = flow.grid_size();
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const ParticleMeasure& m = flow.snapshots[i];
    double t = flow.times[i];
    double slice = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j)
      slice += m.weights[j] * (phi.dt(t, m.points[j]) +
                               dot(phi.grad(t, m.points[j]), V.eval(t, m.points[j])));
    double wtrap = 1.0;
    if (i == 0 || i + 1 == n_nodes) wtrap = 0.5;
    double dt = i + 1 < n_nodes ? flow.times[i + 1] - flow.times[i]
                                : flow.times[i] - flow.times[i - 1];
    integral += wtrap * dt * slice;
  }
  return std::abs(integral) / phi.c1_norm;
}

// Seeded panel of random bumps for the weak residual.
inline std::vector<TestFunction> bump_panel(const Domain& dom, double T, int count,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<TestFunction> fns;
  for (int i = 0; i < count; ++i) {
    double tc = T * (0.3 + 0.4 * uni(rng));
    double wt = std::min(tc, T - tc) * (0.5 + 0.4 * uni(rng));
    double wx = dom.diameter() * (0.2 + 0.3 * uni(rng));
    Vec xc;
    if (dom.dim() == 1) {
      double a = dom.interval_a(), b = dom.interval_b();
      xc = Vec(a + (b - a) * uni(rng));
    } else {
      Vec c = dom.center();
      double rad = 0.5 * dom.diameter();
      xc = Vec(c[0] + rad * (2.0 * uni(rng) - 1.0), c[1] + rad * (2.0 * uni(rng) - 1.0));
    }
    fns.push_back(TestFunction::bump(dom.dim(), tc, wt, xc, wx));
  }
  return fns;
}

// max over sampled (path, interior time) pairs of the gap between the path
// velocity and the feedback velocity -D_pH(x, Du) computed pointwise from u
// (boundary nodes use the tangential reconstruction). Forward, backward, and
// centered differences all count; the best of the three is scored, so a
// velocity jump at a wall-hitting node is not misread as an inconsistency.
inline double particle_velocity_consistency(const ValueSampler& s, const PathMeasure& eta,
                                            double t_max = std::numeric_limits<double>::infinity(),
                                            int max_paths = 16, int max_times = 8,
                                            double t_min = 0.0) {
  const Domain& dom = s.problem().dom;
  Hamiltonian ham{s.problem().lagrangian};
  double t_hi = std::min(t_max, s.window_end());
  double worst = 0.0;
  int pstride = std::max<std::size_t>(1, eta.size() / max_paths);
  for (std::size_t i = 0; i < eta.size(); i += pstride) {
    const Trajectory& g = eta.trajectories[i];
    int kstride = std::max(1, g.steps() / max_times);
    for (int k = 1; k < g.steps(); k += kstride) {
      double t = g.time(k);
      if (t < t_min) continue;
      if (t > t_hi) break;
      const Vec& x = g.nodes[k];
      Vec vf;
      if (std::abs(signed_distance(dom, x)) < 1e-7 * (1.0 + dom.diameter())) {
        Vec xb = boundary_projection(dom, x);
        Vec p_tau = Vec::zero(dom.dim());
        if (dom.dim() == 2) {
          Vec tau = boundary_tangent(dom, xb);
          double r = std::min(1e-2 * dom.diameter(), 0.45 * dom.rho0());
          p_tau = ((s.value(t, project(dom, xb + r * tau)) -
                    s.value(t, project(dom, xb - r * tau))) /
                   (2.0 * r)) *
                  tau;
        }
        double lam = lambda_plus(ham, dom, xb, p_tau);
        vf = -1.0 * ham.DpH(xb, p_tau + lam * outward_normal(dom, xb));
      } else {
        auto [ut, grad] = detail::interior_gradient(s, t, x);
        (void)ut;
        vf = -1.0 * ham.DpH(x, grad);
      }
      double gap = norm(g.velocity_at_node(k) - vf);
      gap = std::min(gap, norm(g.velocity(k) - vf));
      gap = std::min(gap, norm(g.velocity(k - 1) - vf));
      worst = std::max(worst, gap);
    }
  }
  return worst;
}

}  // namespace mfglab
