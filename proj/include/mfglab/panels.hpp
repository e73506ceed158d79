#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mfglab/equilibrium.hpp"
#include "mfglab/pdecheck.hpp"
#include "mfglab/util.hpp"
#include "mfglab/valuefn.hpp"

namespace mfglab {

struct ProbePoint {
  double t = 0.0;
  Vec x;
  SupportClass cls = SupportClass::off_support;
};

// Deterministic sample of classified support points across grid times in
// [t_lo, t_hi]: per slice, spatially deduped representatives.
inline std::vector<ProbePoint> collect_support_probes(const MeasureFlow& flow,
                                                      const Domain& dom,
                                                      const SupportThresholds& thr,
                                                      double t_lo, double t_hi,
                                                      int target_count) {
  std::vector<ProbePoint> probes;
  int n_nodes = static_cast<int>(flow.grid_size());
  int slices = std::min(n_nodes, std::max(4, target_count / 8));
  int stride = std::max(1, n_nodes / slices);
  for (int i = 0; i < n_nodes && static_cast<int>(probes.size()) < target_count;
       i += stride) {
    double t = flow.times[i];
    if (t < t_lo || t > t_hi) continue;
    const ParticleMeasure& m = flow.snapshots[i];
    std::vector<Vec> reps;
    for (std::size_t j = 0; j < m.size(); ++j) {
      bool dup = false;
      for (const Vec& r : reps)
        if (norm(r - m.points[j]) < thr.delta_b) dup = true;
      if (dup) continue;
      reps.push_back(m.points[j]);
      SupportClass cls = classify_support(flow, dom, t, m.points[j], thr);
      if (cls == SupportClass::off_support) continue;
      probes.push_back({t, m.points[j], cls});
      if (static_cast<int>(probes.size()) >= target_count) break;
    }
  }
  return probes;
}

struct HjbPanel {
  int interior_probes = 0;
  int boundary_probes = 0;
  double max_interior = 0.0;
  double max_tangential = 0.0;
  double max_full = 0.0;
  std::vector<std::vector<double>> rows;  // t, x.., class, residual
};

inline HjbPanel hjb_panel(const ValueSampler& s, const MeasureFlow& flow,
                          const SupportThresholds& thr,
                          const std::vector<ProbePoint>& probes,
                          int max_boundary = 16) {
  HjbPanel panel;
  const Domain& dom = s.problem().dom;
  for (const ProbePoint& p : probes) {
    std::vector<double> row{p.t, p.x[0]};
    if (dom.dim() == 2) row.push_back(p.x[1]);
    if (p.cls == SupportClass::interior_support) {
      double r = hjb_residual_interior(s, flow, p.t, p.x, thr);
      panel.max_interior = std::max(panel.max_interior, r);
      ++panel.interior_probes;
      row.push_back(0.0);
      row.push_back(r);
    } else {
      if (panel.boundary_probes >= max_boundary) continue;
      BoundaryHjbReport rep = hjb_residual_boundary(s, flow, p.t, p.x, thr);
      panel.max_tangential = std::max(panel.max_tangential, rep.tangential_residual);
      panel.max_full = std::max(panel.max_full, rep.full_residual);
      ++panel.boundary_probes;
      row.push_back(1.0);
      row.push_back(rep.tangential_residual);
    }
    panel.rows.push_back(row);
  }
  return panel;
}

struct LambdaPanel {
  int boundary_probes = 0;
  double max_tangency = 0.0;  // |<D_p H(x, p^tau + lambda+ nu), nu>|
  bool monotone = true;       // gradient-limit errors decrease over the radii
  std::vector<std::vector<double>> rows;  // t, x.., lambda+, tangency, e1, e2, e3
};

inline LambdaPanel lambda_panel(const ValueSampler& s, const MeasureFlow& flow,
                                const SupportThresholds& thr,
                                const std::vector<ProbePoint>& probes,
                                int max_boundary = 10) {
  LambdaPanel panel;
  const Domain& dom = s.problem().dom;
  Hamiltonian ham{s.problem().lagrangian};
  double d = dom.diameter();
  std::vector<double> radii{0.12 * d, 0.06 * d, 0.03 * d};
  for (const ProbePoint& p : probes) {
    if (p.cls != SupportClass::boundary_support) continue;
    if (panel.boundary_probes >= max_boundary) break;
    Vec xb = boundary_projection(dom, p.x);
    SuperdiffEstimate est = superdifferential(s, p.t, xb);
    double lam = lambda_plus(ham, dom, xb, est.tangential_part);
    Vec nu = outward_normal(dom, xb);
    double tangency = std::abs(dot(ham.DpH(xb, est.tangential_part + lam * nu), nu));
    panel.max_tangency = std::max(panel.max_tangency, tangency);
    std::vector<double> errs = gradient_limit_check(s, flow, p.t, p.x, thr, radii);
    if (!(errs[0] >= errs[1] && errs[1] >= errs[2])) panel.monotone = false;
    ++panel.boundary_probes;
    std::vector<double> row{p.t, xb[0]};
    if (dom.dim() == 2) row.push_back(xb[1]);
    row.insert(row.end(), {lam, tangency, errs[0], errs[1], errs[2]});
    panel.rows.push_back(row);
  }
  return panel;
}

struct ContinuityPanel {
  int test_functions = 0;
  double max_weak_residual = 0.0;
  double velocity_consistency = 0.0;
  double v_sup = 0.0;
  std::vector<std::vector<double>> rows;  // index, residual
};

// `flow` carries the transported measure for the weak residual; `support_flow`
// (the optimal-path ensemble) drives the velocity-field sampling.
inline ContinuityPanel continuity_panel(const ValueSampler& s, const MeasureFlow& flow,
                                        const MeasureFlow& support_flow,
                                        const PathMeasure& eta,
                                        const SupportThresholds& thr,
                                        std::uint64_t seed, int n_bumps = 10) {
  ContinuityPanel panel;
  VelocityField V = VelocityField::build(s, support_flow, thr);
  panel.v_sup = V.sup_norm();
  auto bumps = bump_panel(s.problem().dom, s.problem().T, n_bumps, seed);
  for (int i = 0; i < static_cast<int>(bumps.size()); ++i) {
    double r = continuity_residual(flow, V, bumps[i]);
    panel.max_weak_residual = std::max(panel.max_weak_residual, r);
    panel.rows.push_back({static_cast<double>(i), r});
    ++panel.test_functions;
  }
  // Interior-time window: the first node after the start carries an O(dt)
  // transient in the centered velocity, like the other panels' probe windows.
  panel.velocity_consistency = particle_velocity_consistency(
      s, eta, 0.75 * s.problem().T, 16, 8, 0.05 * s.problem().T);
  return panel;
}

struct SensitivityPanel {
  int probes = 0;
  double fitted_c = 0.0;   // sup ratio over the coarse scales
  double max_ratio = 0.0;  // sup ratio over the full sweep
  std::vector<std::vector<double>> rows;  // probe, r, defect, ratio
};

// Dyadic sweep h, sigma in {2^-k}, k = 3..9: defect / (|h| + sigma)^{3/2}
// must stay under 1.2x the constant fitted on the coarse half (k <= 6).
inline SensitivityPanel sensitivity_panel(const ValueSampler& s,
                                          const std::vector<ProbePoint>& probes,
                                          int k_min = 3, int k_split = 6,
                                          int k_max = 9) {
  SensitivityPanel panel;
  const Domain& dom = s.problem().dom;
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    const ProbePoint& p = probes[pi];
    TrajSolution sol = s.solve(p.t, p.x);
    Vec dual_p = sol.dual.p.front();
    Vec inward = dom.interior_point() - p.x;
    double len = norm(inward);
    Vec dir = len > 1e-12 ? inward / len : Vec::zero(dom.dim());
    for (int k = k_min; k <= k_max; ++k) {
      double r = std::pow(2.0, -k);
      Vec h = std::min(r, 0.9 * len) * dir;
      double sigma = (p.t + r <= s.window_end()) ? r : -r;
      if (p.t + sigma < 0.0) continue;
      double defect = sensitivity_probe(s, p.t, p.x, dual_p, h, sigma);
      double scale = std::pow(norm(h) + std::abs(sigma), 1.5);
      double ratio = std::max(defect, 0.0) / scale;
      if (k <= k_split) panel.fitted_c = std::max(panel.fitted_c, ratio);
      panel.max_ratio = std::max(panel.max_ratio, ratio);
      panel.rows.push_back({static_cast<double>(pi), r, defect, ratio});
    }
    ++panel.probes;
  }
  return panel;
}

struct SemiconcavityPanel {
  double alpha = 0.0;
  double constant = 0.0;
  std::vector<std::vector<double>> rows;  // r, defect
};

// Log-log fit of the centered defect along a probe ray; negative (concave
// side) defects enter through their magnitude.
inline SemiconcavityPanel semiconcavity_panel(const ValueSampler& s, double t,
                                              const Vec& x, const Vec& h_dir,
                                              double sigma_dir, int k_min = 3,
                                              int k_max = 9) {
  SemiconcavityPanel panel;
  auto sweep = semiconcavity_sweep(s, t, x, h_dir, sigma_dir, k_min, k_max);
  std::vector<std::pair<double, double>> mags;
  for (auto& [r, d] : sweep) {
    panel.rows.push_back({r, d});
    mags.push_back({r, std::abs(d)});
  }
  PowerFit fit = fit_power_law(mags, 1e-9);
  panel.alpha = fit.alpha;
  panel.constant = fit.c;
  return panel;
}

}  // namespace mfglab
