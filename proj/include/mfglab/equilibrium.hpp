#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "mfglab/errors.hpp"
#include "mfglab/measure.hpp"
#include "mfglab/model.hpp"
#include "mfglab/trajopt.hpp"
#include "mfglab/util.hpp"
#include "mfglab/valuefn.hpp"

namespace mfglab {

// A complete game instance: dynamics cost, mean-field coupling, terminal
// cost, horizon, and the shared time grid.
struct Scenario {
  Domain dom = Domain::interval(-1.0, 1.0);
  LagrangianSpec lagrangian;
  Coupling coupling;
  ScalarField terminal;
  bool terminal_coupling = false;  // add G(x, m(T)) = F-kernel at the horizon
  double T = 1.0;
  int time_nodes = 81;

  double dt() const { return T / (time_nodes - 1); }
};

// The running coupling F(t, x) = F(x, m(t)) with m frozen along a measure
// flow; linear interpolation between grid snapshots. In 1D each snapshot's
// kernel sum is tabulated once into a cubic spline, so per-call cost is O(1)
// and the reported DF/DDF are the exact derivatives of the F actually used.
class FrozenCoupling {
 public:
  FrozenCoupling(Coupling coupling, MeasureFlow flow, const Domain& dom,
                 int grid_nx = 257)
      : coupling_(std::move(coupling)), flow_(std::move(flow)) {
    if (dom.dim() == 1 && coupling_.form != Coupling::Form::Zero) {
      a_ = dom.interval_a();
      b_ = dom.interval_b();
      splines_.reserve(flow_.grid_size());
      for (const ParticleMeasure& m : flow_.snapshots) {
        std::vector<double> vals(grid_nx);
        for (int i = 0; i < grid_nx; ++i)
          vals[i] = coupling_.F(Vec(a_ + (b_ - a_) * i / (grid_nx - 1)), m);
        splines_.emplace_back(a_, b_, std::move(vals));
      }
    }
  }

  const MeasureFlow& flow() const { return flow_; }

  double F(double t, const Vec& x) const {
    auto [i, w] = flow_.locate(t);
    if (!splines_.empty())
      return (1.0 - w) * splines_[i].eval(x[0]) + w * splines_[i + 1].eval(x[0]);
    return (1.0 - w) * coupling_.F(x, flow_.snapshots[i]) +
           w * coupling_.F(x, flow_.snapshots[i + 1]);
  }
  Vec DF(double t, const Vec& x) const {
    auto [i, w] = flow_.locate(t);
    if (!splines_.empty())
      return Vec((1.0 - w) * splines_[i].deriv(x[0]) + w * splines_[i + 1].deriv(x[0]));
    return (1.0 - w) * coupling_.DxF(x, flow_.snapshots[i]) +
           w * coupling_.DxF(x, flow_.snapshots[i + 1]);
  }
  Mat DDF(double t, const Vec& x) const {
    auto [i, w] = flow_.locate(t);
    if (!splines_.empty()) {
      Mat m = Mat::zero(1);
      m(0, 0) = (1.0 - w) * splines_[i].second(x[0]) + w * splines_[i + 1].second(x[0]);
      return m;
    }
    Mat m = coupling_.DxxF(x, flow_.snapshots[i]);
    m *= 1.0 - w;
    Mat m2 = coupling_.DxxF(x, flow_.snapshots[i + 1]);
    m2 *= w;
    m += m2;
    return m;
  }

 private:
  Coupling coupling_;
  MeasureFlow flow_;
  double a_ = 0.0, b_ = 1.0;
  std::vector<CubicSpline> splines_;
};

// Assemble the single-agent problem against a frozen flow.
inline OptimalControlProblem make_problem(const Scenario& sc,
                                          std::shared_ptr<const FrozenCoupling> fc) {
  OptimalControlProblem prob;
  prob.dom = sc.dom;
  prob.lagrangian = sc.lagrangian;
  prob.T = sc.T;
  prob.dt = sc.dt();
  prob.mu = sc.lagrangian.mu;
  prob.kappa = sc.coupling.kappa;
  if (fc && sc.coupling.form != Coupling::Form::Zero) {
    prob.F = [fc](double t, const Vec& x) { return fc->F(t, x); };
    prob.DF = [fc](double t, const Vec& x) { return fc->DF(t, x); };
    prob.DDF = [fc](double t, const Vec& x) { return fc->DDF(t, x); };
  }
  ScalarField g = sc.terminal;
  if (sc.terminal_coupling && fc) {
    Coupling cp = sc.coupling;
    ParticleMeasure mT = fc->flow().snapshots.back();
    prob.g = [g, cp, mT](const Vec& x) { return g.value(x) + cp.F(x, mT); };
    prob.Dg = [g, cp, mT](const Vec& x) { return g.grad(x) + cp.DxF(x, mT); };
    prob.DDg = [g, cp, mT](const Vec& x) { return g.hess(x) + cp.DxxF(x, mT); };
  } else {
    prob.g = g.value;
    prob.Dg = g.grad;
    prob.DDg = g.hess;
  }
  return prob;
}

// Deterministic snapshot compression for the coupling flow: grid binning with
// weight-averaged representatives. Binning is stable under the small mixture
// updates of late fictitious-play rounds, where per-round resampling noise in
// the frozen coupling was enough to flip best responses between basins.
inline ParticleMeasure compress_measure(const ParticleMeasure& m, std::size_t budget) {
  if (m.size() <= budget || m.size() == 0) return m;
  int dim = m.points[0].n;
  Vec lo = m.points[0], hi = m.points[0];
  for (const Vec& p : m.points)
    for (int a = 0; a < dim; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  int side = dim == 1 ? static_cast<int>(budget)
                      : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(budget))));
  auto cell_of = [&](const Vec& p) {
    long long id = 0;
    for (int a = 0; a < dim; ++a) {
      double span = hi[a] - lo[a];
      int c = span > 1e-300
                  ? std::min(side - 1, static_cast<int>(side * (p[a] - lo[a]) / span))
                  : 0;
      id = id * side + c;
    }
    return id;
  };
  std::map<long long, std::pair<double, Vec>> cells;
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto [it, fresh] = cells.try_emplace(cell_of(m.points[i]), 0.0, Vec::zero(dim));
    it->second.first += m.weights[i];
    it->second.second += m.weights[i] * m.points[i];
  }
  ParticleMeasure out;
  for (auto& [id, acc] : cells) {
    if (acc.first <= 0.0) continue;
    out.points.push_back(acc.second / acc.first);
    out.weights.push_back(acc.first);
  }
  return out;
}

inline MeasureFlow compress_flow(const MeasureFlow& flow, std::size_t budget) {
  MeasureFlow out;
  out.times = flow.times;
  out.snapshots.reserve(flow.snapshots.size());
  for (const ParticleMeasure& m : flow.snapshots)
    out.snapshots.push_back(compress_measure(m, budget));
  return out;
}

// Systematic resampling by weight: deterministic for a fixed seed, keeps the
// ensemble within the path budget.
inline PathMeasure compress_paths(const PathMeasure& eta, std::size_t max_paths,
                                  std::uint64_t seed) {
  if (eta.size() <= max_paths) return eta;
  std::mt19937_64 rng(seed);
  double u0 = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  PathMeasure out;
  out.trajectories.reserve(max_paths);
  double cum = 0.0;
  std::size_t i = 0;
  for (std::size_t k = 0; k < max_paths; ++k) {
    double target = (k + u0) / static_cast<double>(max_paths);
    while (i + 1 < eta.size() && cum + eta.weights[i] < target) cum += eta.weights[i++];
    out.trajectories.push_back(eta.trajectories[i]);
    out.weights.push_back(1.0 / static_cast<double>(max_paths));
  }
  return out;
}

// Optimal trajectory per particle of m0 against the frozen flow; weights are
// inherited. Warm starts (by particle index) are optional.
inline PathMeasure best_response(const MeasureFlow& flow, const ParticleMeasure& m0,
                                 const Scenario& sc,
                                 const PathMeasure* warm = nullptr) {
  auto fc = std::make_shared<FrozenCoupling>(sc.coupling, flow, sc.dom);
  OptimalControlProblem prob = make_problem(sc, fc);
  PathMeasure br;
  br.trajectories.resize(m0.size());
  br.weights = m0.weights;
  parallel_for(static_cast<int>(m0.size()), [&](int i) {
    std::optional<Trajectory> guess;
    if (warm && warm->size() == m0.size()) guess = warm->trajectories[i];
    br.trajectories[i] = solve_trajectory_global(prob, 0.0, m0.points[i], guess).traj;
  });
  return br;
}

struct EquilibriumOptions {
  double tol = 1e-2;
  int max_iters = 100;
  std::uint64_t seed = 1;
  std::size_t max_paths = 10000;       // hard ensemble budget
  std::size_t coupling_paths = 400;    // ensemble size frozen into F
  enum class Init { Stationary, FreeFlow } init = Init::Stationary;
  double solver_tol = 1e-8;
};

struct EquilibriumResult {
  PathMeasure eta;
  PathMeasure best_response;  // final best response: optimal paths vs the flow
  MeasureFlow flow;           // full-ensemble marginal flow
  MeasureFlow coupling_flow;  // compressed flow frozen into F
  std::vector<double> trace;  // eps_k per iteration
  bool converged = false;
  int iterations = 0;
};

// Fictitious play with harmonic mixing weights alpha_k = 1/(k+1):
//   eta_{k+1} = (1 - alpha_k) eta_k + alpha_k BR(flow(eta_k)).
inline EquilibriumResult solve_equilibrium(const Scenario& sc, const ParticleMeasure& m0,
                                           const EquilibriumOptions& opts = {}) {
  m0.validate(sc.dom);
  if (m0.size() > 10000) throw ConfigError("m0 exceeds the particle budget");

  const int N = sc.time_nodes - 1;
  auto constant_path = [&](const Vec& x) {
    Trajectory g;
    g.t0 = 0.0;
    g.T = sc.T;
    g.nodes.assign(N + 1, x);
    return g;
  };

  PathMeasure eta;
  eta.weights = m0.weights;
  if (opts.init == EquilibriumOptions::Init::Stationary) {
    for (const Vec& x : m0.points) eta.trajectories.push_back(constant_path(x));
  } else {
    // Decoupled best response (F = 0) as the starting ensemble.
    Scenario decoupled = sc;
    decoupled.coupling = Coupling::zero();
    decoupled.terminal_coupling = false;
    MeasureFlow dummy;
    dummy.times = {0.0, sc.T};
    dummy.snapshots = {m0, m0};
    eta.trajectories = best_response(dummy, m0, decoupled).trajectories;
  }

  EquilibriumResult res;
  PathMeasure br_prev;
  MeasureFlow last_cflow;
  for (int k = 1; k <= opts.max_iters; ++k) {
    MeasureFlow cflow = compress_flow(flow_of(eta), opts.coupling_paths);
    last_cflow = cflow;
    PathMeasure br = best_response(cflow, m0, sc, br_prev.size() ? &br_prev : nullptr);

    double eps = flow_sup_d1(flow_of(eta), flow_of(br));
    res.trace.push_back(eps);
    res.iterations = k;
    if (eps <= opts.tol) {
      res.converged = true;
      br_prev = std::move(br);
      break;
    }

    double alpha = 1.0 / (k + 1);
    PathMeasure mixed;
    mixed.trajectories.reserve(eta.size() + br.size());
    mixed.weights.reserve(eta.size() + br.size());
    for (std::size_t i = 0; i < eta.size(); ++i) {
      mixed.trajectories.push_back(std::move(eta.trajectories[i]));
      mixed.weights.push_back((1.0 - alpha) * eta.weights[i]);
    }
    for (std::size_t i = 0; i < br.size(); ++i) {
      mixed.trajectories.push_back(br.trajectories[i]);
      mixed.weights.push_back(alpha * br.weights[i]);
    }
    eta = compress_paths(mixed, opts.max_paths, opts.seed + 1000ull * k + 1);
    br_prev = std::move(br);
  }

  res.eta = std::move(eta);
  res.best_response = std::move(br_prev);
  res.flow = flow_of(res.eta);
  // Freeze the exact coupling flow the final best response optimized against,
  // so the mild-solution sampler and the response paths share one F.
  res.coupling_flow = last_cflow.grid_size()
                          ? last_cflow
                          : compress_flow(res.flow, opts.coupling_paths);
  return res;
}

// The mild-solution pair: the value sampler against the frozen equilibrium
// flow, plus the marginal flow itself.
inline std::pair<std::shared_ptr<ValueSampler>, MeasureFlow> mild_solution(
    const Scenario& sc, const EquilibriumResult& res) {
  auto fc = std::make_shared<FrozenCoupling>(sc.coupling, res.coupling_flow, sc.dom);
  return {std::make_shared<ValueSampler>(make_problem(sc, fc)), res.flow};
}

}  // namespace mfglab
