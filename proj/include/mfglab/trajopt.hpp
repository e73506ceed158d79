#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "mfglab/errors.hpp"
#include "mfglab/geometry.hpp"
#include "mfglab/model.hpp"
#include "mfglab/trajectory.hpp"
#include "mfglab/vec.hpp"

namespace mfglab {

// Adjoint data recovered from the transcription multipliers.
struct DualArc {
  std::vector<Vec> p;               // covector per node
  std::vector<double> multipliers;  // beta_k >= 0, nonzero only on active nodes
  double terminal_nu = 0.0;         // >= 0, zero when the endpoint is interior
};

// The cost J_t[gamma] = int (L + F(s, .)) ds + g(gamma(T)) with the running
// coupling frozen along a given measure flow.
struct OptimalControlProblem {
  Domain dom = Domain::interval(-1.0, 1.0);
  LagrangianSpec lagrangian;

  std::function<double(double, const Vec&)> F;  // running coupling (may be null)
  std::function<Vec(double, const Vec&)> DF;
  std::function<Mat(double, const Vec&)> DDF;

  std::function<double(const Vec&)> g;  // terminal cost
  std::function<Vec(const Vec&)> Dg;
  std::function<Mat(const Vec&)> DDg;

  double T = 1.0;
  double dt = 1e-2;  // transcription step hint

  // Model constants used by lstar_bound.
  double mu = 1.0;
  double kappa = 0.0;

  double coupling(double t, const Vec& x) const { return F ? F(t, x) : 0.0; }
  Vec coupling_grad(double t, const Vec& x) const {
    return DF ? DF(t, x) : Vec::zero(x.n);
  }
  Mat coupling_hess(double t, const Vec& x) const {
    return DDF ? DDF(t, x) : Mat::zero(x.n);
  }

  int dim() const { return dom.dim(); }

  static OptimalControlProblem decoupled(Domain dom, LagrangianSpec lag,
                                         ScalarField terminal, double T,
                                         double dt = 1e-2) {
    OptimalControlProblem prob;
    prob.dom = dom;
    prob.lagrangian = std::move(lag);
    prob.g = terminal.value;
    prob.Dg = terminal.grad;
    prob.DDg = terminal.hess;
    prob.T = T;
    prob.dt = dt;
    return prob;
  }
};

struct TrajSolution {
  Trajectory traj;
  DualArc dual;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  double stationarity = 0.0;  // gradient-density residual
};

struct SolverOptions {
  double tol = 1e-8;  // stationarity residual, gradient-density units
  int max_pg = 200;
  int max_newton = 80;
};

namespace detail {

// Trapezoid transcription cost and gradient over the nodes (node 0 fixed).
struct Transcription {
  const OptimalControlProblem* prob;
  double t0;
  int N;
  double dt;

  double time(int k) const { return t0 + k * dt; }

  double cost(const std::vector<Vec>& x) const {
    const LagrangianSpec& L = prob->lagrangian;
    double J = 0.0;
    for (int k = 0; k < N; ++k) {
      Vec v = (x[k + 1] - x[k]) / dt;
      double run = 0.5 * (L.L(x[k], v) + L.L(x[k + 1], v)) +
                   0.5 * (prob->coupling(time(k), x[k]) +
                          prob->coupling(time(k + 1), x[k + 1]));
      J += dt * run;
    }
    return J + prob->g(x[N]);
  }

  void gradient(const std::vector<Vec>& x, std::vector<Vec>& grad) const {
    const LagrangianSpec& L = prob->lagrangian;
    int n = prob->dim();
    grad.assign(N + 1, Vec::zero(n));
    for (int k = 0; k < N; ++k) {
      Vec v = (x[k + 1] - x[k]) / dt;
      Vec dv = 0.5 * (L.DvL(x[k], v) + L.DvL(x[k + 1], v));
      grad[k] += 0.5 * dt * (L.DxL(x[k], v) + prob->coupling_grad(time(k), x[k])) - dv;
      grad[k + 1] += 0.5 * dt * (L.DxL(x[k + 1], v) +
                                 prob->coupling_grad(time(k + 1), x[k + 1])) +
                     dv;
    }
    grad[N] += prob->Dg ? prob->Dg(x[N]) : Vec::zero(n);
  }

  // Symmetric block-tridiagonal Hessian: diag[k] and upper[k] = d2J/dx_k dx_{k+1}.
  void hessian(const std::vector<Vec>& x, std::vector<Mat>& diag,
               std::vector<Mat>& upper) const {
    const LagrangianSpec& L = prob->lagrangian;
    int n = prob->dim();
    diag.assign(N + 1, Mat::zero(n));
    upper.assign(N, Mat::zero(n));
    for (int k = 0; k < N; ++k) {
      Vec v = (x[k + 1] - x[k]) / dt;
      Mat vv_k = L.DvvL(x[k], v), vv_k1 = L.DvvL(x[k + 1], v);
      Mat vx_k = L.DvxL(x[k], v), vx_k1 = L.DvxL(x[k + 1], v);
      Mat vv_sum = vv_k + vv_k1;

      Mat dkk = 0.5 * dt * L.DxxL(x[k], v);
      dkk += (-0.5) * (vx_k + transpose(vx_k));
      dkk += (0.5 / dt) * vv_sum;
      dkk += 0.5 * dt * prob->coupling_hess(time(k), x[k]);
      diag[k] += dkk;

      Mat dk1 = 0.5 * dt * L.DxxL(x[k + 1], v);
      dk1 += 0.5 * (vx_k1 + transpose(vx_k1));
      dk1 += (0.5 / dt) * vv_sum;
      dk1 += 0.5 * dt * prob->coupling_hess(time(k + 1), x[k + 1]);
      diag[k + 1] += dk1;

      Mat off = 0.5 * transpose(vx_k);
      off += (-0.5) * vx_k1;
      off += (-0.5 / dt) * vv_sum;
      upper[k] += off;
    }
    if (prob->DDg) diag[N] += prob->DDg(x[N]);
  }
};

// Banded symmetric indefinite-tolerant solver: LDL^T without pivoting plus
// caller-driven damping when a pivot degenerates. Row-major band storage.
inline bool banded_ldlt_solve(std::vector<std::vector<double>>& band, int dim, int bw,
                              std::vector<double>& rhs) {
  // band[i][j-i+?]: store full symmetric profile band[i][d], d in [0, bw], as A(i, i+d).
  for (int i = 0; i < dim; ++i) {
    double piv = band[i][0];
    if (!(piv > 1e-300)) return false;
    for (int j = i + 1; j <= std::min(i + bw, dim - 1); ++j) {
      double lij = band[i][j - i] / piv;
      for (int k = j; k <= std::min(i + bw, dim - 1); ++k)
        band[j][k - j] -= lij * band[i][k - i];
      band[i][j - i] = lij;  // store L factor
    }
  }
  // Forward substitution L y = rhs.
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j <= std::min(i + bw, dim - 1); ++j)
      rhs[j] -= band[i][j - i] * rhs[i];
  // Diagonal.
  for (int i = 0; i < dim; ++i) rhs[i] /= band[i][0];
  // Backward substitution L^T x = y.
  for (int i = dim - 1; i >= 0; --i)
    for (int j = i + 1; j <= std::min(i + bw, dim - 1); ++j)
      rhs[i] -= band[i][j - i] * rhs[j];
  return true;
}

}  // namespace detail

// Loose velocity ceiling from the model constants; a sanity gate, never a
// constraint.
inline double lstar_bound(const OptimalControlProblem& prob, int samples = 64) {
  Hamiltonian ham{prob.lagrangian};
  double sup = 0.0;
  const Domain& dom = prob.dom;
  for (int i = 0; i < samples; ++i) {
    Vec x;
    if (dom.dim() == 1) {
      double a = dom.interval_a(), b = dom.interval_b();
      x = Vec(a + (b - a) * (i + 0.5) / samples);
    } else {
      double ang = 2.0 * M_PI * i / samples;
      double rad = 0.9 * (i % 2 ? 1.0 : 0.45);
      Vec dir(std::cos(ang), std::sin(ang));
      x = project(dom, dom.center() + rad * 0.5 * dom.diameter() * dir);
    }
    Vec dg = prob.Dg ? prob.Dg(x) : Vec::zero(dom.dim());
    sup = std::max(sup, norm(ham.DpH(x, dg)));
  }
  double c = 1.0 + prob.kappa;
  return std::max(1.0, 2.0 * prob.mu * sup) * std::exp(c * prob.T);
}

// Direct transcription of the constrained problem: projected gradient with
// Armijo line search, then an active-set reduced Newton polish that also
// yields the boundary multipliers.
inline TrajSolution solve_trajectory(const OptimalControlProblem& prob, double t,
                                     const Vec& x,
                                     const std::optional<Trajectory>& warm = {},
                                     const SolverOptions& opts = {}) {
  const Domain& dom = prob.dom;
  if (signed_distance(dom, x) > 1e-9) throw Infeasible("start point outside the domain");
  if (t >= prob.T) throw Infeasible("start time at or past the horizon");

  const int n = prob.dim();
  int N = std::max(2, static_cast<int>(std::llround((prob.T - t) / prob.dt)));
  double dt = (prob.T - t) / N;
  detail::Transcription tr{&prob, t, N, dt};

  // Warm start: resample a given trajectory, else aim at the projected
  // free-flow terminal point.
  std::vector<Vec> nodes(N + 1);
  nodes[0] = project(dom, x);
  if (warm && warm->nodes.size() >= 2) {
    for (int k = 1; k <= N; ++k) nodes[k] = project(dom, warm->at(t + k * dt));
  } else {
    Hamiltonian ham{prob.lagrangian};
    Vec dg = prob.Dg ? prob.Dg(nodes[0]) : Vec::zero(n);
    Vec vel = -ham.DpH(nodes[0], dg);
    for (int k = 1; k <= N; ++k) {
      Vec target = nodes[0] + (k * dt) * vel;
      // Stay inside the projection tube.
      for (int guard = 0; guard < 64 && signed_distance(dom, target) >= dom.rho0(); ++guard)
        target = 0.5 * (target + nodes[0]);
      nodes[k] = project(dom, target);
    }
  }

  auto project_nodes = [&](std::vector<Vec>& xs) {
    for (int k = 1; k <= N; ++k) xs[k] = project(dom, xs[k]);
  };
  auto feasible_step_ok = [&](const std::vector<Vec>& xs) {
    for (int k = 1; k <= N; ++k)
      if (signed_distance(dom, xs[k]) >= dom.rho0()) return false;
    return true;
  };

  std::vector<Vec> grad;
  double J = tr.cost(nodes);
  int iterations = 0;

  const double act_tol = 1e-9 * (1.0 + dom.diameter());
  std::vector<double> beta(N + 1, 0.0);
  std::vector<char> active(N + 1, 0);
  double stationarity = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::vector<Mat> hdiag, hupper;

  // The two phases alternate: Newton stalls when the projected gradient hands
  // over inside a negative-curvature region of a kernel coupling, and the
  // gradient phase recovers from exactly those points, so a stalled Newton
  // round sends the iterate back to phase 1 with a tightened exit threshold.
  double pg_exit = 1e-2;
  for (int cycle = 0; cycle < 10 && !converged; ++cycle) {

  // Phase 1: projected gradient.
  double alpha = 1.0;
  for (int it = 0; it < opts.max_pg; ++it) {
    ++iterations;
    tr.gradient(nodes, grad);
    double gnorm_sq = 0.0;
    for (int k = 1; k <= N; ++k) gnorm_sq += norm_sq(grad[k]);
    if (std::sqrt(gnorm_sq) / dt < pg_exit) break;
    bool moved = false;
    alpha = std::min(alpha * 4.0, 1.0);
    for (; alpha > 1e-14; alpha *= 0.5) {
      std::vector<Vec> cand = nodes;
      for (int k = 1; k <= N; ++k) cand[k] -= alpha * grad[k];
      if (!feasible_step_ok(cand)) continue;
      project_nodes(cand);
      double Jc = tr.cost(cand);
      if (Jc <= J - 1e-4 * alpha * gnorm_sq) {
        nodes = std::move(cand);
        J = Jc;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }

  // Phase 2: active-set reduced Newton.
  for (int it = 0; it < opts.max_newton; ++it) {
    ++iterations;
    tr.gradient(nodes, grad);

    std::fill(active.begin(), active.end(), 0);
    std::fill(beta.begin(), beta.end(), 0.0);
    std::vector<Vec> normal(N + 1, Vec::zero(n));
    for (int k = 1; k <= N; ++k) {
      if (signed_distance(dom, nodes[k]) > -act_tol) {
        Vec nu = grad_b(dom, nodes[k]);
        double b_est = -dot(grad[k], nu);
        if (b_est >= -1e-10 * (1.0 + norm(grad[k]))) {
          active[k] = 1;
          beta[k] = std::max(b_est, 0.0);
          normal[k] = nu;
        }
        // Otherwise the node wants to move inward: release it.
      }
    }

    // Reduced residual.
    double res = 0.0;
    for (int k = 1; k <= N; ++k) {
      Vec r = grad[k];
      if (active[k]) r -= dot(r, normal[k]) * normal[k];
      res = std::max(res, norm(r));
    }
    stationarity = res / dt;
    if (stationarity <= opts.tol) {
      converged = true;
      break;
    }

    // Reduced basis per node: inactive -> full space, active 1D -> empty,
    // active 2D -> boundary tangent.
    tr.hessian(nodes, hdiag, hupper);
    for (int k = 1; k <= N; ++k)
      if (active[k] && beta[k] > 0.0) {
        Mat curv = hess_b(dom, nodes[k]);
        curv *= beta[k];
        hdiag[k] += curv;
      }

    std::vector<std::vector<Vec>> basis(N + 1);
    std::vector<int> offset(N + 2, 0);
    for (int k = 1; k <= N; ++k) {
      if (!active[k]) {
        for (int i = 0; i < n; ++i) {
          Vec e = Vec::zero(n);
          e[i] = 1.0;
          basis[k].push_back(e);
        }
      } else if (n == 2) {
        basis[k].push_back(perp(normal[k]));
      }
      offset[k + 1] = offset[k] + static_cast<int>(basis[k].size());
    }
    int rdim = offset[N + 1];
    if (rdim == 0) {
      converged = stationarity <= opts.tol;
      break;
    }

    auto reduced_entry = [&](int k, int i, int l, int j) {
      // A(k,l) entry in reduced coordinates; |k-l| <= 1.
      const Mat* blk = nullptr;
      Mat tmp;
      if (k == l) blk = &hdiag[k];
      else if (l == k + 1) blk = &hupper[k];
      else {
        tmp = transpose(hupper[l]);
        blk = &tmp;
      }
      return dot(basis[k][i], mul(*blk, basis[l][j]));
    };

    const int bw = 2 * n - 1;
    double damping = 0.0;
    bool stepped = false;
    for (int attempt = 0; attempt < 8 && !stepped; ++attempt) {
      std::vector<std::vector<double>> band(rdim, std::vector<double>(bw + 1, 0.0));
      std::vector<double> rhs(rdim, 0.0);
      for (int k = 1; k <= N; ++k) {
        for (std::size_t i = 0; i < basis[k].size(); ++i) {
          int row = offset[k] + static_cast<int>(i);
          rhs[row] = -dot(basis[k][i], grad[k]);
          for (int l = k; l <= std::min(k + 1, N); ++l) {
            for (std::size_t j = 0; j < basis[l].size(); ++j) {
              int col = offset[l] + static_cast<int>(j);
              if (col < row || col - row > bw) continue;
              band[row][col - row] = reduced_entry(k, static_cast<int>(i), l,
                                                   static_cast<int>(j));
            }
          }
          band[row][0] += damping;
        }
      }
      std::vector<double> step = rhs;
      if (!detail::banded_ldlt_solve(band, rdim, bw, step)) {
        damping = damping == 0.0 ? 1.0 / dt : damping * 10.0;
        continue;
      }
      // Descent check in reduced coordinates.
      double slope = 0.0;
      for (int k = 1; k <= N; ++k)
        for (std::size_t i = 0; i < basis[k].size(); ++i)
          slope += step[offset[k] + i] * (-dot(basis[k][i], grad[k]));
      if (slope <= 0.0) {
        damping = damping == 0.0 ? 1.0 / dt : damping * 10.0;
        continue;
      }
      // Armijo backtracking along the lifted step.
      for (double a = 1.0; a > 1e-12; a *= 0.5) {
        std::vector<Vec> cand = nodes;
        for (int k = 1; k <= N; ++k) {
          Vec d = Vec::zero(n);
          for (std::size_t i = 0; i < basis[k].size(); ++i)
            d += step[offset[k] + i] * basis[k][i];
          cand[k] += a * d;
        }
        if (!feasible_step_ok(cand)) continue;
        project_nodes(cand);
        double Jc = tr.cost(cand);
        if (Jc <= J - 1e-4 * a * slope || (a == 1.0 && Jc <= J + 1e-15 * std::abs(J))) {
          nodes = std::move(cand);
          J = Jc;
          stepped = true;
          break;
        }
      }
      if (!stepped) damping = damping == 0.0 ? 1.0 / dt : damping * 10.0;
    }
    if (!stepped) break;  // no further progress this round
  }

  pg_exit = std::max(opts.tol, std::min(0.1 * pg_exit, 0.1 * stationarity));
  }

  TrajSolution sol;
  sol.traj.t0 = t;
  sol.traj.T = prob.T;
  sol.traj.nodes = nodes;
  sol.value = J;
  sol.converged = converged;
  sol.iterations = iterations;
  sol.stationarity = stationarity;

  // Dual arc via the maximum condition p = -D_v L(gamma, gamma_dot) with
  // centered velocities; multipliers from the final KKT estimate.
  sol.dual.p.resize(N + 1);
  for (int k = 0; k <= N; ++k)
    sol.dual.p[k] = -prob.lagrangian.DvL(sol.traj.nodes[k], sol.traj.velocity_at_node(k));
  sol.dual.multipliers = beta;
  sol.dual.terminal_nu = active[N] ? beta[N] : 0.0;
  return sol;
}

// Globalized solve for non-convex costs (kernel couplings create basins):
// straight-line paths to a spread of terminal targets are scored by the
// transcription cost, the cheapest one seeds the solver, and a caller-provided
// warm start competes as a second seed. All domains here are convex, so the
// candidate segments are feasible.
inline TrajSolution solve_trajectory_global(const OptimalControlProblem& prob, double t,
                                            const Vec& x,
                                            const std::optional<Trajectory>& warm = {},
                                            const SolverOptions& opts = {},
                                            int candidates = 13) {
  const Domain& dom = prob.dom;
  int N = std::max(2, static_cast<int>(std::llround((prob.T - t) / prob.dt)));
  double dt = (prob.T - t) / N;
  detail::Transcription tr{&prob, t, N, dt};

  std::vector<Vec> targets;
  if (dom.dim() == 1) {
    double a = dom.interval_a(), b = dom.interval_b();
    for (int i = 0; i < candidates; ++i)
      targets.push_back(Vec(a + (b - a) * (i + 0.5) / candidates));
  } else {
    targets.push_back(dom.center());
    int rim = candidates - 1;
    for (int i = 0; i < rim; ++i) {
      double ang = 2.0 * M_PI * i / rim;
      Vec dir(std::cos(ang), std::sin(ang));
      targets.push_back(project(dom, dom.center() + 0.45 * dom.diameter() * dir));
    }
  }

  Trajectory line;
  line.t0 = t;
  line.T = prob.T;
  line.nodes.resize(N + 1);
  double best_cost = std::numeric_limits<double>::infinity();
  Trajectory best_line;
  for (const Vec& target : targets) {
    for (int k = 0; k <= N; ++k) {
      double s = static_cast<double>(k) / N;
      line.nodes[k] = project(dom, (1.0 - s) * x + s * target);
    }
    double c = tr.cost(line.nodes);
    if (c < best_cost) {
      best_cost = c;
      best_line = line;
    }
  }

  TrajSolution best = solve_trajectory(prob, t, x, best_line, opts);
  if (warm) {
    // Hysteresis toward the warm basin: near-ties (symmetric instances, small
    // coupling perturbations between fixed-point rounds) must not flip the
    // response, or fictitious play oscillates instead of averaging down.
    TrajSolution alt = solve_trajectory(prob, t, x, warm, opts);
    double margin = 1e-4 * (1.0 + std::abs(best.value));
    if (alt.value <= best.value + margin) best = std::move(alt);
  }
  return best;
}

// Backward dynamic programming oracle on a state grid; 1D only, by design
// independent of the transcription path.
inline double dp_oracle_value(const OptimalControlProblem& prob, double t, const Vec& x,
                              int grid_resolution) {
  if (prob.dim() != 1) throw DimensionUnsupported("dp oracle is 1D only");
  const double a = prob.dom.interval_a(), b = prob.dom.interval_b();
  const int nx = grid_resolution;
  int N = std::max(2, static_cast<int>(std::llround((prob.T - t) / prob.dt)));
  double dt = (prob.T - t) / N;
  double dx = (b - a) / (nx - 1);

  auto xi = [&](int i) { return Vec(a + i * dx); };
  std::vector<double> value(nx), next(nx);
  for (int i = 0; i < nx; ++i) next[i] = prob.g(xi(i));
  auto interp = [&](const std::vector<double>& vals, double y) {
    double s = (y - a) / dx;
    int i = std::clamp(static_cast<int>(s), 0, nx - 2);
    double w = std::clamp(s - i, 0.0, 1.0);
    return (1.0 - w) * vals[i] + w * vals[i + 1];
  };

  // Control grid: a fine velocity mesh with interpolated continuation values,
  // so the velocity quantization error stays well below the state-grid error.
  const double vmax = 2.0 * (b - a) / (prob.T - t) + 2.0;
  const int nv = 8 * nx;
  const LagrangianSpec& L = prob.lagrangian;
  for (int j = N - 1; j >= 0; --j) {
    double tj = t + j * dt, tj1 = tj + dt;
    for (int i = 0; i < nx; ++i) {
      double here = prob.coupling(tj, xi(i));
      double best = std::numeric_limits<double>::infinity();
      for (int q = 0; q <= nv; ++q) {
        double v0 = -vmax + 2.0 * vmax * q / nv;
        double y = std::clamp(xi(i)[0] + v0 * dt, a, b);
        Vec v((y - xi(i)[0]) / dt);
        double run = 0.5 * (L.L(xi(i), v) + L.L(Vec(y), v)) +
                     0.5 * (here + prob.coupling(tj1, Vec(y)));
        best = std::min(best, dt * run + interp(next, y));
      }
      value[i] = best;
    }
    next.swap(value);
  }
  // Linear interpolation at the query point.
  double s = (x[0] - a) / dx;
  int i = std::clamp(static_cast<int>(s), 0, nx - 2);
  double w = std::clamp(s - i, 0.0, 1.0);
  return (1.0 - w) * next[i] + w * next[i + 1];
}

struct NecessaryConditionReport {
  double adjoint_residual = 0.0;      // (a)
  double feedback_residual = 0.0;     // (b)
  double terminal_residual = 0.0;     // (c)
  double velocity_margin = 0.0;       // (d) L* - max speed
  double min_multiplier = 0.0;
  double complementary_slackness = 0.0;
};

// Residuals of the discrete Pontryagin system along a solved pair.
inline NecessaryConditionReport necessary_condition_residuals(
    const OptimalControlProblem& prob, const Trajectory& traj, const DualArc& dual) {
  NecessaryConditionReport rep;
  const int N = traj.steps();
  const double dt = traj.dt();
  Hamiltonian ham{prob.lagrangian};
  const double act_tol = 1e-7 * (1.0 + prob.dom.diameter());

  double worst_a = 0.0, worst_b = 0.0, min_beta = 0.0, worst_cs = 0.0;
  for (int k = 0; k < N; ++k) {
    Vec vbar = traj.velocity_at_node(k);
    Vec dxf = prob.lagrangian.DxL(traj.nodes[k], vbar) +
              prob.coupling_grad(traj.time(k), traj.nodes[k]);
    Vec r = (dual.p[k + 1] - dual.p[k]) / dt + dxf;
    double bk = dual.multipliers[k];
    if (bk != 0.0 && std::abs(signed_distance(prob.dom, traj.nodes[k])) < prob.dom.rho0())
      r += (bk / dt) * grad_b(prob.dom, traj.nodes[k]);
    if (k > 0) worst_a = std::max(worst_a, norm(r));
    worst_b = std::max(worst_b, norm(vbar + ham.DpH(traj.nodes[k], dual.p[k])));
  }
  for (int k = 0; k <= N; ++k) {
    min_beta = std::min(min_beta, dual.multipliers[k]);
    worst_cs = std::max(worst_cs, dual.multipliers[k] *
                                      std::abs(signed_distance(prob.dom, traj.nodes[k])));
  }
  rep.adjoint_residual = worst_a;
  rep.feedback_residual = worst_b;
  rep.min_multiplier = min_beta;
  rep.complementary_slackness = worst_cs;

  Vec pN = dual.p[N];
  Vec dg = prob.Dg ? prob.Dg(traj.nodes[N]) : Vec::zero(traj.nodes[N].n);
  Vec term = pN - dg;
  if (std::abs(signed_distance(prob.dom, traj.nodes[N])) < act_tol)
    term -= dual.terminal_nu * grad_b(prob.dom, traj.nodes[N]);
  rep.terminal_residual = norm(term);
  rep.velocity_margin = lstar_bound(prob) - traj.max_speed();
  return rep;
}

}  // namespace mfglab
