#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfglab/equilibrium.hpp"

using namespace mfglab;

namespace {

ParticleMeasure grid_m0(int count, double a = -0.8, double b = 0.8) {
  std::vector<Vec> pts;
  for (int i = 0; i < count; ++i)
    pts.push_back(Vec(a + (b - a) * i / (count - 1)));
  return ParticleMeasure::uniform(pts);
}

Scenario kernel_scenario() {
  Scenario sc;
  sc.dom = Domain::interval(-1.0, 1.0);
  sc.lagrangian = LagrangianSpec::quadratic(1, ScalarField::zero(1));
  sc.coupling = Coupling::kernel(1, 0.3);
  sc.terminal = ScalarField::linear(Vec(1.0));
  sc.T = 1.0;
  sc.time_nodes = 41;
  return sc;
}

}  // namespace

TEST_CASE("frozen coupling tabulation is self-consistent") {
  Scenario sc = kernel_scenario();
  PathMeasure eta;
  Trajectory g1, g2;
  g1.t0 = g2.t0 = 0.0;
  g1.T = g2.T = 1.0;
  for (int k = 0; k <= 40; ++k) {
    g1.nodes.push_back(Vec(-0.5 + 0.02 * k));
    g2.nodes.push_back(Vec(0.6 - 0.01 * k));
  }
  eta.trajectories = {g1, g2};
  eta.weights = {0.4, 0.6};
  FrozenCoupling fc(sc.coupling, flow_of(eta), sc.dom);

  // Tabulated values track the direct kernel sums.
  for (double t : {0.0, 0.275, 1.0})
    for (double x : {-0.9, -0.2, 0.55}) {
      ParticleMeasure m = pushforward(eta, 0.275);
      double direct;
      if (t == 0.275) direct = sc.coupling.F(Vec(x), m);
      else direct = sc.coupling.F(Vec(x), pushforward(eta, t));
      CHECK(fc.F(t, Vec(x)) == doctest::Approx(direct).epsilon(1e-6));
    }

  // Reported derivatives are the exact derivatives of the F in use.
  double d = 1e-6;
  for (double x : {-0.7, 0.1, 0.8}) {
    double fd = (fc.F(0.5, Vec(x + d)) - fc.F(0.5, Vec(x - d))) / (2 * d);
    CHECK(fc.DF(0.5, Vec(x))[0] == doctest::Approx(fd).epsilon(1e-6));
    double fdd = (fc.DF(0.5, Vec(x + d))[0] - fc.DF(0.5, Vec(x - d))[0]) / (2 * d);
    CHECK(fc.DDF(0.5, Vec(x))(0, 0) == doctest::Approx(fdd).epsilon(1e-4));
  }
}

TEST_CASE("path compression is deterministic and weight-faithful") {
  PathMeasure eta;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    Trajectory g;
    g.t0 = 0.0;
    g.T = 1.0;
    g.nodes.assign(11, Vec(unif(rng)));
    eta.trajectories.push_back(g);
    eta.weights.push_back(1.0 / 300.0);
  }
  PathMeasure c1 = compress_paths(eta, 50, 7);
  PathMeasure c2 = compress_paths(eta, 50, 7);
  REQUIRE(c1.size() == 50);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(c1.trajectories[i].nodes[0][0] == c2.trajectories[i].nodes[0][0]);
    CHECK(c1.weights[i] == doctest::Approx(0.02));
  }
  // The resampled marginal stays d1-close to the original (Monte Carlo rate).
  CHECK(kantorovich_d1(pushforward(c1, 0.0), pushforward(eta, 0.0)) < 0.15);
  // Small ensembles pass through untouched.
  PathMeasure small;
  small.trajectories = {eta.trajectories[0]};
  small.weights = {1.0};
  CHECK(compress_paths(small, 50, 7).size() == 1);
}

TEST_CASE("decoupled game converges in one round from the free-flow start") {
  Scenario sc = kernel_scenario();
  sc.coupling = Coupling::zero();
  EquilibriumOptions opts;
  opts.init = EquilibriumOptions::Init::FreeFlow;
  EquilibriumResult res = solve_equilibrium(sc, grid_m0(8), opts);
  CHECK(res.converged);
  CHECK(res.iterations == 1);
  CHECK(res.trace.size() == 1);
  CHECK(res.trace[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("kernel game fixed point") {
  Scenario sc = kernel_scenario();
  ParticleMeasure m0 = grid_m0(10);
  EquilibriumOptions opts;
  opts.tol = 1e-2;
  opts.max_iters = 100;
  EquilibriumResult res = solve_equilibrium(sc, m0, opts);
  CHECK(res.converged);
  CHECK(res.trace.back() <= 1e-2);

  // The initial marginal is preserved and every node stays feasible.
  CHECK(kantorovich_d1(res.flow.snapshots.front(), m0) < 1e-9);
  for (const Trajectory& g : res.eta.trajectories)
    for (const Vec& node : g.nodes) CHECK(signed_distance(sc.dom, node) <= 1e-9);

  // The mild-solution sampler reproduces a best-response value.
  auto [sampler, flow] = mild_solution(sc, res);
  double v = sampler->value(0.0, m0.points[3]);
  auto fc = std::make_shared<FrozenCoupling>(sc.coupling, res.coupling_flow, sc.dom);
  double direct = solve_trajectory_global(make_problem(sc, fc), 0.0, m0.points[3]).value;
  CHECK(v == doctest::Approx(direct).epsilon(1e-10));
  CHECK(flow.grid_size() == sc.time_nodes);
}

TEST_CASE("fictitious play trace decays under the harmonic mixing") {
  Scenario sc = kernel_scenario();
  sc.time_nodes = 21;
  EquilibriumOptions opts;
  opts.tol = 1e-4;  // force several rounds
  opts.max_iters = 8;
  EquilibriumResult res = solve_equilibrium(sc, grid_m0(6), opts);
  REQUIRE(res.trace.size() >= 2);
  // Not necessarily monotone, but the tail must improve on the head.
  CHECK(res.trace.back() < res.trace.front());
}
