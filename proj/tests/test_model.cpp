#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfglab/model.hpp"

using namespace mfglab;

TEST_CASE("legendre transform closed forms") {
  LagrangianSpec quad = LagrangianSpec::quadratic(1, ScalarField::zero(1));
  auto [h, v] = legendre(quad, Vec(0.2), Vec(0.7));
  CHECK(h == doctest::Approx(0.5 * 0.49));
  CHECK(v[0] == doctest::Approx(-0.7));

  VectorField b = VectorField::constant(Vec(-0.8));
  LagrangianSpec drift = LagrangianSpec::drift_quadratic(1, b, ScalarField::zero(1));
  auto [hd, vd] = legendre(drift, Vec(0.0), Vec(0.5));
  CHECK(hd == doctest::Approx(0.5 * 0.25 - 0.5 * (-0.8)));
  CHECK(vd[0] == doctest::Approx(-0.8 - 0.5));

  // Fenchel inequality H(x,p) >= -<p,v> - L(x,v) with equality at v*.
  Hamiltonian ham{drift};
  for (double w : {-1.0, -0.3, 0.0, 0.9}) {
    double lhs = ham.H(Vec(0.0), Vec(0.5));
    double rhs = -0.5 * w - drift.L(Vec(0.0), Vec(w));
    CHECK(lhs >= rhs - 1e-12);
  }
}

TEST_CASE("custom lagrangian agrees with the quadratic closed form") {
  LagrangianSpec c;
  c.kind = LagrangianSpec::Kind::Custom;
  c.mu = 1.0;
  c.custom_L = [](const Vec&, const Vec& v) { return 0.5 * norm_sq(v); };
  c.custom_DvL = [](const Vec&, const Vec& v) { return v; };
  c.custom_DxL = [](const Vec& x, const Vec&) { return Vec::zero(x.n); };
  c.custom_DvvL = [](const Vec& x, const Vec&) { return Mat::identity(x.n); };
  c.custom_DvxL = [](const Vec& x, const Vec&) { return Mat::zero(x.n); };
  auto [h, v] = legendre(c, Vec(0.0, 0.0), Vec(0.3, -0.4));
  CHECK(h == doctest::Approx(0.5 * 0.25));
  CHECK(v[0] == doctest::Approx(-0.3));
  CHECK(v[1] == doctest::Approx(0.4));
}

TEST_CASE("lagrangian derivatives match finite differences") {
  ScalarField well = ScalarField::quadratic_well(1.7, Vec(0.2, -0.1));
  VectorField b = VectorField::constant(Vec(-0.5, 0.3));
  LagrangianSpec lag = LagrangianSpec::drift_quadratic(2, b, well);
  Vec x(0.4, -0.6), v(0.9, 0.1);
  double d = 1e-6;
  for (int a = 0; a < 2; ++a) {
    Vec e = Vec::zero(2);
    e[a] = d;
    double fd_x = (lag.L(x + e, v) - lag.L(x - e, v)) / (2 * d);
    double fd_v = (lag.L(x, v + e) - lag.L(x, v - e)) / (2 * d);
    CHECK(lag.DxL(x, v)[a] == doctest::Approx(fd_x).epsilon(1e-6));
    CHECK(lag.DvL(x, v)[a] == doctest::Approx(fd_v).epsilon(1e-6));
    Vec fdvv = (lag.DvL(x, v + e) - lag.DvL(x, v - e)) / (2 * d);
    Vec fdvx = (lag.DvL(x + e, v) - lag.DvL(x - e, v)) / (2 * d);
    Vec fdxx = (lag.DxL(x + e, v) - lag.DxL(x - e, v)) / (2 * d);
    for (int i = 0; i < 2; ++i) {
      CHECK(lag.DvvL(x, v)(i, a) == doctest::Approx(fdvv[i]).epsilon(1e-5));
      CHECK(lag.DvxL(x, v)(i, a) == doctest::Approx(fdvx[i]).epsilon(1e-5));
      CHECK(lag.DxxL(x, v)(i, a) == doctest::Approx(fdxx[i]).epsilon(1e-5));
    }
  }
}

TEST_CASE("tangential hamiltonian on the disk") {
  Domain dom = Domain::disk(Vec(0.0, 0.0), 1.0);
  LagrangianSpec quad = LagrangianSpec::quadratic(2, ScalarField::zero(2));
  Hamiltonian ham{quad};
  Vec x(0.0, 1.0);
  Vec p(0.7, 0.4);
  Vec tau = boundary_tangent(dom, x);
  // Quadratic case: H^tau = 0.5 <p, tau>^2.
  double expected = 0.5 * dot(p, tau) * dot(p, tau);
  CHECK(tangential_hamiltonian(ham, dom, x, p) == doctest::Approx(expected).epsilon(1e-9));
  CHECK_THROWS_AS(tangential_hamiltonian(ham, dom, Vec(0.0, 0.0), p), NotBoundary);
}

TEST_CASE("lambda_plus closed forms") {
  Domain dom = Domain::disk(Vec(0.0, 0.0), 1.0);
  Vec x(1.0, 0.0);
  Vec nu = outward_normal(dom, x);
  Vec p_tau = 0.3 * boundary_tangent(dom, x);

  LagrangianSpec quad = LagrangianSpec::quadratic(2, ScalarField::zero(2));
  Hamiltonian hq{quad};
  CHECK(lambda_plus(hq, dom, x, p_tau) == doctest::Approx(0.0).epsilon(1e-10));

  VectorField b = VectorField::constant(Vec(0.4, -0.2));
  LagrangianSpec drift = LagrangianSpec::drift_quadratic(2, b, ScalarField::zero(2));
  Hamiltonian hd{drift};
  double lam = lambda_plus(hd, dom, x, p_tau);
  CHECK(lam == doctest::Approx(dot(b.value(x), nu)).epsilon(1e-9));
  // Defining property: the closed-loop velocity is tangent.
  CHECK(std::abs(dot(hd.DpH(x, p_tau + lam * nu), nu)) < 1e-10);
  CHECK_THROWS_AS(lambda_plus(hd, dom, x, Vec(0.5, 0.0)), NotTangent);
}

TEST_CASE("kernel coupling values and lipschitz constant") {
  Coupling c = Coupling::kernel(1, 0.2);
  ParticleMeasure m = ParticleMeasure::dirac(Vec(0.0));
  double norm1 = 1.0 / (std::sqrt(2.0 * M_PI) * 0.2);
  CHECK(c.F(Vec(0.0), m) == doctest::Approx(norm1));
  CHECK(c.F(Vec(0.2), m) == doctest::Approx(norm1 * std::exp(-0.5)));
  // kappa equals the maximal kernel slope, attained at |x - y| = sigma.
  double best = 0.0;
  for (double x = -1.0; x <= 1.0; x += 1e-4)
    best = std::max(best, std::abs(c.DxF(Vec(x), m)[0]));
  CHECK(c.kappa == doctest::Approx(best).epsilon(1e-6));

  // Derivatives against finite differences on a two-atom measure.
  ParticleMeasure m2{{Vec(-0.3), Vec(0.4)}, {0.25, 0.75}};
  double d = 1e-6;
  double fd = (c.F(Vec(0.1 + d), m2) - c.F(Vec(0.1 - d), m2)) / (2 * d);
  CHECK(c.DxF(Vec(0.1), m2)[0] == doctest::Approx(fd).epsilon(1e-6));
  double fdd = (c.DxF(Vec(0.1 + d), m2)[0] - c.DxF(Vec(0.1 - d), m2)[0]) / (2 * d);
  CHECK(c.DxxF(Vec(0.1), m2)(0, 0) == doctest::Approx(fdd).epsilon(1e-5));
}

TEST_CASE("terminal cost with coupling") {
  TerminalCost g{ScalarField::linear(Vec(1.0)), Coupling::kernel(1, 0.3)};
  ParticleMeasure m = ParticleMeasure::dirac(Vec(0.5));
  double base = 0.2;
  double kern = g.coupling.F(Vec(base), m);
  CHECK(g.value(Vec(base), m) == doctest::Approx(base + kern));
}
