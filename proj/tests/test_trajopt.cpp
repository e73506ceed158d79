#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfglab/trajopt.hpp"

using namespace mfglab;

namespace {

// Interval [-1, 1], L = |v|^2 / 2, g(x) = x, horizon 1. The value function is
// known in closed form:
//   u(t, x) = x - (T - t)/2                   when x >= -1 + (T - t),
//   u(t, x) = -1 + (1 + x)^2 / (2 (T - t))    otherwise,
// and the optimal path is a straight line, so the trapezoid discretization is
// exact on it.
OptimalControlProblem free_left_problem() {
  return OptimalControlProblem::decoupled(Domain::interval(-1.0, 1.0),
                                          LagrangianSpec::quadratic(1, ScalarField::zero(1)),
                                          ScalarField::linear(Vec(1.0)), 1.0, 1.0 / 80.0);
}

double closed_form_value(double t, double x, double T = 1.0) {
  if (x >= -1.0 + (T - t)) return x - 0.5 * (T - t);
  return -1.0 + (1.0 + x) * (1.0 + x) / (2.0 * (T - t));
}

}  // namespace

TEST_CASE("unconstrained straight-line instance is solved to machine accuracy") {
  OptimalControlProblem prob = free_left_problem();
  TrajSolution sol = solve_trajectory(prob, 0.0, Vec(0.3));
  CHECK(sol.converged);
  CHECK(sol.stationarity <= 1e-8);
  CHECK(sol.value == doctest::Approx(closed_form_value(0.0, 0.3)).epsilon(1e-10));
  // Constant unit speed to the left; dual arc p = -v = 1 everywhere.
  for (int k = 0; k <= sol.traj.steps(); ++k) {
    CHECK(sol.traj.nodes[k][0] == doctest::Approx(0.3 - sol.traj.time(k)).epsilon(1e-7));
    CHECK(sol.dual.p[k][0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.dual.multipliers[k] == doctest::Approx(0.0).epsilon(1e-8));
  }

  NecessaryConditionReport rep = necessary_condition_residuals(prob, sol.traj, sol.dual);
  CHECK(rep.adjoint_residual < 1e-6);
  CHECK(rep.feedback_residual < 1e-6);
  CHECK(rep.terminal_residual < 1e-6);
  CHECK(rep.min_multiplier >= -1e-12);
  CHECK(rep.complementary_slackness < 1e-10);
  CHECK(rep.velocity_margin > 0.0);
}

TEST_CASE("constrained instance reaches the wall exactly at the horizon") {
  OptimalControlProblem prob = free_left_problem();
  TrajSolution sol = solve_trajectory(prob, 0.0, Vec(-0.5));
  CHECK(sol.converged);
  // Straight line from -0.5 to -1 at speed 1/2; the discrete cost is exact.
  CHECK(sol.value == doctest::Approx(-0.875).epsilon(1e-9));
  CHECK(sol.traj.nodes.back()[0] == doctest::Approx(-1.0).epsilon(1e-7));
  NecessaryConditionReport rep = necessary_condition_residuals(prob, sol.traj, sol.dual);
  CHECK(rep.adjoint_residual < 1e-5);
  CHECK(rep.feedback_residual < 1e-5);
  CHECK(rep.min_multiplier >= -1e-12);
}

TEST_CASE("boundary start stays put with a terminal multiplier") {
  OptimalControlProblem prob = free_left_problem();
  TrajSolution sol = solve_trajectory(prob, 0.0, Vec(-1.0));
  CHECK(sol.converged);
  CHECK(sol.value == doctest::Approx(-1.0).epsilon(1e-9));
  for (const Vec& node : sol.traj.nodes)
    CHECK(node[0] == doctest::Approx(-1.0).epsilon(1e-7));
  // p_N - Dg must be normal to the boundary: 1 - 1 = nu * (-1) => nu = 0 here
  // only if p_N = 1; with the stay path p = 0 so the terminal multiplier is 1.
  CHECK(sol.dual.terminal_nu >= 0.0);
  NecessaryConditionReport rep = necessary_condition_residuals(prob, sol.traj, sol.dual);
  CHECK(rep.terminal_residual < 1e-6);
  CHECK(rep.complementary_slackness < 1e-8);
}

TEST_CASE("drift model gets trapped at the wall") {
  Domain dom = Domain::interval(-1.0, 1.0);
  VectorField b = VectorField::constant(Vec(-0.8));
  LagrangianSpec lag = LagrangianSpec::drift_quadratic(1, b, ScalarField::zero(1));
  OptimalControlProblem prob = OptimalControlProblem::decoupled(
      dom, lag, ScalarField::linear(Vec(0.5)), 1.0, 1.0 / 80.0);
  TrajSolution sol = solve_trajectory(prob, 0.0, Vec(-1.0));
  CHECK(sol.converged);
  // Fighting the drift costs |b|^2/2 per unit time; staying is optimal.
  CHECK(sol.value == doctest::Approx(0.5 * 0.64 - 0.5).epsilon(1e-8));
  for (const Vec& node : sol.traj.nodes)
    CHECK(node[0] == doctest::Approx(-1.0).epsilon(1e-7));
  // p = -(0 - b) = -0.8; terminal condition p_N = Dg + nu Db with Db = -1.
  CHECK(sol.dual.p.back()[0] == doctest::Approx(-0.8).epsilon(1e-6));
  CHECK(sol.dual.terminal_nu == doctest::Approx(1.3).epsilon(1e-6));
  NecessaryConditionReport rep = necessary_condition_residuals(prob, sol.traj, sol.dual);
  CHECK(rep.adjoint_residual < 1e-5);
  CHECK(rep.feedback_residual < 1e-5);
  CHECK(rep.terminal_residual < 1e-6);
  CHECK(rep.min_multiplier >= -1e-12);
}

TEST_CASE("dynamic programming oracle agrees with the transcription solver") {
  OptimalControlProblem prob = free_left_problem();
  for (auto [t, x] : {std::pair{0.2, 0.3}, {0.0, -0.5}, {0.0, 0.0}, {0.5, -0.9}}) {
    double dp = dp_oracle_value(prob, t, Vec(x), 321);
    double direct = solve_trajectory(prob, t, Vec(x)).value;
    double exact = closed_form_value(t, x);
    CHECK(dp == doctest::Approx(exact).epsilon(5e-3));
    CHECK(direct == doctest::Approx(exact).epsilon(1e-6));
    CHECK(std::abs(dp - direct) < 5e-3);
  }
}

TEST_CASE("oracle agreement with a running coupling and a potential") {
  Domain dom = Domain::interval(-1.0, 1.0);
  LagrangianSpec lag =
      LagrangianSpec::quadratic(1, ScalarField::quadratic_well(0.6, Vec(0.4)));
  OptimalControlProblem prob = OptimalControlProblem::decoupled(
      dom, lag, ScalarField::linear(Vec(1.0)), 1.0, 1.0 / 80.0);
  prob.F = [](double t, const Vec& x) { return 0.3 * std::sin(x[0] + t); };
  prob.DF = [](double t, const Vec& x) { return Vec(0.3 * std::cos(x[0] + t)); };
  prob.DDF = [](double t, const Vec& x) {
    Mat m = Mat::zero(1);
    m(0, 0) = -0.3 * std::sin(x[0] + t);
    return m;
  };
  TrajSolution sol = solve_trajectory(prob, 0.0, Vec(0.1));
  CHECK(sol.converged);
  double dp = dp_oracle_value(prob, 0.0, Vec(0.1), 401);
  CHECK(sol.value == doctest::Approx(dp).epsilon(5e-3));
  // The dual arc uses centered velocities, so the continuous-form residuals
  // carry the expected O(dt) / O(dt^2) discretization error here.
  NecessaryConditionReport rep = necessary_condition_residuals(prob, sol.traj, sol.dual);
  CHECK(rep.adjoint_residual < 1e-2);
  CHECK(rep.feedback_residual < 1e-4);
  CHECK(rep.terminal_residual < 1e-4);
}

TEST_CASE("two-dimensional disk with drift toward the wall") {
  Domain dom = Domain::disk(Vec(0.0, 0.0), 1.0);
  VectorField b = VectorField::constant(Vec(-0.7, 0.0));
  LagrangianSpec lag = LagrangianSpec::drift_quadratic(2, b, ScalarField::zero(2));
  OptimalControlProblem prob = OptimalControlProblem::decoupled(
      dom, lag, ScalarField::linear(Vec(0.4, 0.0)), 1.0, 1.0 / 40.0);
  TrajSolution sol = solve_trajectory(prob, 0.0, Vec(-0.6, 0.0));
  CHECK(sol.converged);
  CHECK(sol.stationarity <= 1e-8);
  // The path drifts left and must respect the disk.
  for (const Vec& node : sol.traj.nodes) CHECK(signed_distance(dom, node) <= 1e-9);
  NecessaryConditionReport rep = necessary_condition_residuals(prob, sol.traj, sol.dual);
  CHECK(rep.feedback_residual < 1e-5);
  CHECK(rep.min_multiplier >= -1e-12);
  CHECK(rep.velocity_margin > 0.0);
}

TEST_CASE("warm starts reproduce the cold solve") {
  OptimalControlProblem prob = free_left_problem();
  TrajSolution cold = solve_trajectory(prob, 0.0, Vec(-0.5));
  TrajSolution warm = solve_trajectory(prob, 0.0, Vec(-0.5), cold.traj);
  CHECK(warm.converged);
  CHECK(warm.value == doctest::Approx(cold.value).epsilon(1e-10));
  CHECK(warm.iterations <= cold.iterations);
}

TEST_CASE("infeasible starts are rejected") {
  OptimalControlProblem prob = free_left_problem();
  CHECK_THROWS_AS(solve_trajectory(prob, 0.0, Vec(1.5)), Infeasible);
  CHECK_THROWS_AS(solve_trajectory(prob, 1.0, Vec(0.0)), Infeasible);
  CHECK_THROWS_AS(dp_oracle_value(OptimalControlProblem::decoupled(
                                      Domain::disk(Vec(0.0, 0.0), 1.0),
                                      LagrangianSpec::quadratic(2, ScalarField::zero(2)),
                                      ScalarField::zero(2), 1.0),
                                  0.0, Vec(0.0, 0.0), 50),
                  DimensionUnsupported);
}
