#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfglab/measure.hpp"

using namespace mfglab;

namespace {

Trajectory line(double x0, double x1, int steps = 10) {
  Trajectory g;
  g.t0 = 0.0;
  g.T = 1.0;
  for (int k = 0; k <= steps; ++k)
    g.nodes.push_back(Vec(x0 + (x1 - x0) * k / steps));
  return g;
}

}  // namespace

TEST_CASE("d1 in one dimension") {
  CHECK(kantorovich_d1(ParticleMeasure::dirac(Vec(0.0)),
                       ParticleMeasure::dirac(Vec(1.0))) == doctest::Approx(1.0));
  ParticleMeasure a{{Vec(0.0), Vec(0.5)}, {0.5, 0.5}};
  CHECK(kantorovich_d1(a, a) == doctest::Approx(0.0));
  ParticleMeasure b{{Vec(0.3), Vec(0.8)}, {0.5, 0.5}};
  CHECK(kantorovich_d1(a, b) == doctest::Approx(0.3));
  // Mass split: transporting 0.25 across 1.0.
  ParticleMeasure c{{Vec(0.0)}, {1.0}};
  ParticleMeasure d{{Vec(0.0), Vec(1.0)}, {0.75, 0.25}};
  CHECK(kantorovich_d1(c, d) == doctest::Approx(0.25));
}

TEST_CASE("d1 network flow agrees with the 1D formula on collinear data") {
  ParticleMeasure a{{Vec(0.0, 0.0), Vec(0.5, 0.0), Vec(-0.2, 0.0)}, {0.3, 0.45, 0.25}};
  ParticleMeasure b{{Vec(0.4, 0.0), Vec(-0.1, 0.0)}, {0.6, 0.4}};
  ParticleMeasure a1{{Vec(0.0), Vec(0.5), Vec(-0.2)}, {0.3, 0.45, 0.25}};
  ParticleMeasure b1{{Vec(0.4), Vec(-0.1)}, {0.6, 0.4}};
  CHECK(kantorovich_d1(a, b) == doctest::Approx(kantorovich_d1(a1, b1)).epsilon(1e-10));

  CHECK(kantorovich_d1(ParticleMeasure::dirac(Vec(0.0, 0.0)),
                       ParticleMeasure::dirac(Vec(3.0, 4.0))) == doctest::Approx(5.0));
  // Symmetry and identity in 2D.
  CHECK(kantorovich_d1(a, b) == doctest::Approx(kantorovich_d1(b, a)).epsilon(1e-10));
  CHECK(kantorovich_d1(a, a) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pushforward and flows") {
  PathMeasure eta;
  eta.trajectories = {line(0.0, 1.0), line(1.0, 0.0)};
  eta.weights = {0.5, 0.5};
  ParticleMeasure mid = pushforward(eta, 0.5);
  CHECK(mid.points[0][0] == doctest::Approx(0.5));
  CHECK(mid.points[1][0] == doctest::Approx(0.5));
  CHECK(mid.weights[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(pushforward(eta, 0.55), OffGrid);

  ParticleMeasure start = pushforward(eta, 0.0);
  CHECK(start.points[0][0] == doctest::Approx(0.0));
  CHECK(start.points[1][0] == doctest::Approx(1.0));

  MeasureFlow flow = flow_of(eta);
  CHECK(flow.grid_size() == 11);
  // Lipschitz constant equals the particle speed here.
  CHECK(flow_lipschitz_constant(flow) <= 1.0 + 1e-9);
}

TEST_CASE("pushforward commutes with mixing") {
  PathMeasure eta1, eta2;
  eta1.trajectories = {line(0.0, 0.6)};
  eta1.weights = {1.0};
  eta2.trajectories = {line(-0.5, 0.5)};
  eta2.weights = {1.0};
  double alpha = 0.25;
  PathMeasure mix;
  mix.trajectories = {eta1.trajectories[0], eta2.trajectories[0]};
  mix.weights = {1.0 - alpha, alpha};
  ParticleMeasure pm = pushforward(mix, 0.5);
  ParticleMeasure p1 = pushforward(eta1, 0.5);
  ParticleMeasure p2 = pushforward(eta2, 0.5);
  // The mixed marginal is the weighted union of the marginals, exactly.
  CHECK(pm.points[0][0] == p1.points[0][0]);
  CHECK(pm.points[1][0] == p2.points[0][0]);
  CHECK(pm.weights[0] == doctest::Approx(0.75));
  CHECK(pm.weights[1] == doctest::Approx(0.25));
}

TEST_CASE("measure validation") {
  Domain dom = Domain::interval(-1.0, 1.0);
  ParticleMeasure ok = ParticleMeasure::uniform({Vec(0.0), Vec(0.5)});
  CHECK_NOTHROW(ok.validate(dom));
  ParticleMeasure bad_weight{{Vec(0.0)}, {0.5}};
  CHECK_THROWS_AS(bad_weight.validate(dom), ConfigError);
  ParticleMeasure outside{{Vec(1.5)}, {1.0}};
  CHECK_THROWS_AS(outside.validate(dom), ConfigError);
}

TEST_CASE("flow sup distance") {
  PathMeasure eta1, eta2;
  eta1.trajectories = {line(0.0, 1.0)};
  eta1.weights = {1.0};
  eta2.trajectories = {line(0.0, 0.5)};
  eta2.weights = {1.0};
  // Max gap at t = 1: |1.0 - 0.5|.
  CHECK(flow_sup_d1(flow_of(eta1), flow_of(eta2)) == doctest::Approx(0.5));
}
