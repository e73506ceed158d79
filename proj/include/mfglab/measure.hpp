#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mfglab/errors.hpp"
#include "mfglab/geometry.hpp"
#include "mfglab/trajectory.hpp"
#include "mfglab/vec.hpp"

namespace mfglab {

// Weighted particle ensemble in the closed domain.
struct ParticleMeasure {
  std::vector<Vec> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }

  static ParticleMeasure dirac(const Vec& x) { return {{x}, {1.0}}; }

  static ParticleMeasure uniform(std::vector<Vec> pts) {
    std::size_t n = pts.size();
    return {std::move(pts), std::vector<double>(n, 1.0 / static_cast<double>(n))};
  }

  void validate(const Domain& dom) const {
    if (points.size() != weights.size()) throw ConfigError("points/weights size mismatch");
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw ConfigError("negative particle weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("weights must sum to 1");
    for (const Vec& p : points)
      if (signed_distance(dom, p) > 1e-9) throw ConfigError("particle outside the closed domain");
  }
};

// Weighted trajectory ensemble on a shared [0, T] grid.
struct PathMeasure {
  std::vector<Trajectory> trajectories;
  std::vector<double> weights;

  std::size_t size() const { return trajectories.size(); }
};

// Per-time-node particle ensembles.
struct MeasureFlow {
  std::vector<double> times;
  std::vector<ParticleMeasure> snapshots;

  std::size_t grid_size() const { return times.size(); }
  double t0() const { return times.front(); }
  double T() const { return times.back(); }

  int node_index(double t, double tol = 1e-9) const {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t) <= tol) return static_cast<int>(i);
    return -1;
  }

  // Nearest grid interval and interpolation weight for arbitrary t.
  std::pair<int, double> locate(double t) const {
    if (t <= times.front()) return {0, 0.0};
    if (t >= times.back()) return {static_cast<int>(times.size()) - 2, 1.0};
    auto it = std::upper_bound(times.begin(), times.end(), t);
    int i = static_cast<int>(it - times.begin()) - 1;
    i = std::min(i, static_cast<int>(times.size()) - 2);
    double w = (t - times[i]) / (times[i + 1] - times[i]);
    return {i, w};
  }
};

// Time marginal of a path measure: e_t pushforward.
inline ParticleMeasure pushforward(const PathMeasure& eta, double t) {
  if (eta.trajectories.empty()) throw OffGrid("empty path measure");
  const Trajectory& proto = eta.trajectories.front();
  double dt = proto.dt();
  double s = (t - proto.t0) / dt;
  double snapped = std::round(s);
  if (std::abs(s - snapped) > 1e-9 || snapped < 0 || snapped > proto.steps())
    throw OffGrid("time is not a grid node");
  int k = static_cast<int>(snapped);
  ParticleMeasure m;
  m.points.reserve(eta.size());
  for (const Trajectory& g : eta.trajectories) m.points.push_back(g.nodes[k]);
  m.weights = eta.weights;
  return m;
}

inline MeasureFlow flow_of(const PathMeasure& eta) {
  MeasureFlow flow;
  const Trajectory& proto = eta.trajectories.front();
  for (int k = 0; k <= proto.steps(); ++k) {
    flow.times.push_back(proto.time(k));
    flow.snapshots.push_back(pushforward(eta, proto.time(k)));
  }
  return flow;
}

namespace detail {

// Exact 1D W1 between weighted atom sets: integral of |CDF_a - CDF_b|.
inline double wasserstein1_1d(const ParticleMeasure& a, const ParticleMeasure& b) {
  struct Atom {
    double x, w;
  };
  std::vector<Atom> atoms;
  atoms.reserve(a.size() + b.size());
  for (std::size_t i = 0; i < a.size(); ++i) atoms.push_back({a.points[i][0], a.weights[i]});
  for (std::size_t i = 0; i < b.size(); ++i) atoms.push_back({b.points[i][0], -b.weights[i]});
  std::sort(atoms.begin(), atoms.end(), [](const Atom& p, const Atom& q) { return p.x < q.x; });
  double cdf = 0.0, total = 0.0;
  for (std::size_t i = 0; i + 1 < atoms.size(); ++i) {
    cdf += atoms[i].w;
    total += std::abs(cdf) * (atoms[i + 1].x - atoms[i].x);
  }
  return total;
}

// Exact bipartite optimal transport by successive shortest augmenting paths
// with node potentials. Each augmentation saturates a source or a sink, so
// at most n+m rounds are needed even with real-valued masses.
inline double wasserstein1_flow(const ParticleMeasure& a, const ParticleMeasure& b) {
  const std::size_t n = a.size(), m = b.size();
  if (n > 5000 || m > 5000) throw SizeLimit("supports exceed 5000 x 5000");
  std::vector<double> supply(a.weights), demand(b.weights);
  std::vector<std::vector<double>> cost(n, std::vector<double>(m));
  std::vector<std::vector<double>> flow(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) cost[i][j] = norm(a.points[i] - b.points[j]);

  // Node potentials keep every residual reduced cost nonnegative:
  //   forward i->j : c_ij + pi_u[i] - pi_v[j] >= 0
  //   backward j->i: -c_ij + pi_v[j] - pi_u[i] >= 0 (tight arcs carry flow)
  std::vector<double> pi_u(n, 0.0), pi_v(m, 0.0);
  const double inf = std::numeric_limits<double>::infinity();
  const double eps = 1e-14;

  while (true) {
    bool any_supply = false;
    for (std::size_t i = 0; i < n; ++i)
      if (supply[i] > eps) any_supply = true;
    if (!any_supply) break;

    // Dijkstra from all sources with remaining supply, in reduced costs.
    std::vector<double> du(n, inf), dv(m, inf);
    std::vector<int> pred_v(m, -1);  // forward arc i->j that settled sink j
    std::vector<int> pred_u(n, -1);  // backward arc j->i that settled source i
    std::vector<bool> done_u(n, false), done_v(m, false);
    for (std::size_t i = 0; i < n; ++i)
      if (supply[i] > eps) du[i] = 0.0;

    int target = -1;
    while (target < 0) {
      double best = inf;
      int ui = -1, vj = -1;
      for (std::size_t i = 0; i < n; ++i)
        if (!done_u[i] && du[i] < best) { best = du[i]; ui = static_cast<int>(i); vj = -1; }
      for (std::size_t j = 0; j < m; ++j)
        if (!done_v[j] && dv[j] < best) { best = dv[j]; vj = static_cast<int>(j); ui = -1; }
      if (best == inf) break;
      if (vj >= 0) {
        done_v[vj] = true;
        if (demand[vj] > eps) { target = vj; break; }
        for (std::size_t i = 0; i < n; ++i) {
          if (done_u[i] || flow[i][vj] <= eps) continue;
          double rc = -cost[i][vj] + pi_v[vj] - pi_u[i];
          if (dv[vj] + rc < du[i] - 1e-15) { du[i] = dv[vj] + rc; pred_u[i] = vj; }
        }
      } else {
        done_u[ui] = true;
        for (std::size_t j = 0; j < m; ++j) {
          if (done_v[j]) continue;
          double rc = cost[ui][j] + pi_u[ui] - pi_v[j];
          if (du[ui] + rc < dv[j] - 1e-15) { dv[j] = du[ui] + rc; pred_v[j] = ui; }
        }
      }
    }
    if (target < 0) break;

    double dist_t = dv[target];
    for (std::size_t i = 0; i < n; ++i) pi_u[i] += std::min(du[i], dist_t);
    for (std::size_t j = 0; j < m; ++j) pi_v[j] += std::min(dv[j], dist_t);

    // Trace back, find the bottleneck, then augment.
    std::vector<std::pair<int, int>> fwd, bwd;
    int j = target, origin = -1;
    double bottleneck = demand[target];
    while (true) {
      int i = pred_v[j];
      fwd.push_back({i, j});
      if (pred_u[i] < 0) {
        bottleneck = std::min(bottleneck, supply[i]);
        origin = i;
        break;
      }
      int jprev = pred_u[i];
      bottleneck = std::min(bottleneck, flow[i][jprev]);
      bwd.push_back({i, jprev});
      j = jprev;
    }
    for (auto& [ii, jj] : fwd) flow[ii][jj] += bottleneck;
    for (auto& [ii, jj] : bwd) flow[ii][jj] -= bottleneck;
    supply[origin] -= bottleneck;
    demand[target] -= bottleneck;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) total += flow[i][j] * cost[i][j];
  return total;
}

}  // namespace detail

// Kantorovich-Rubinstein distance with Euclidean ground metric.
inline double kantorovich_d1(const ParticleMeasure& a, const ParticleMeasure& b) {
  if (a.points.empty() || b.points.empty()) throw ConfigError("empty measure");
  if (a.points.front().n != b.points.front().n)
    throw ConfigError("dimension mismatch in d1");
  if (a.points.front().n == 1) return detail::wasserstein1_1d(a, b);
  return detail::wasserstein1_flow(a, b);
}

inline double flow_sup_d1(const MeasureFlow& a, const MeasureFlow& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.grid_size(); ++i)
    worst = std::max(worst, kantorovich_d1(a.snapshots[i], b.snapshots[i]));
  return worst;
}

// Smallest C with d1(m(t_i), m(t_j)) <= C |t_i - t_j| over adjacent nodes.
inline double flow_lipschitz_constant(const MeasureFlow& flow) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < flow.grid_size(); ++i) {
    double dt = flow.times[i + 1] - flow.times[i];
    worst = std::max(worst, kantorovich_d1(flow.snapshots[i], flow.snapshots[i + 1]) / dt);
  }
  return worst;
}

}  // namespace mfglab
