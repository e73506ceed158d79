#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include "mfglab/errors.hpp"
#include "mfglab/geometry.hpp"
#include "mfglab/measure.hpp"
#include "mfglab/vec.hpp"

namespace mfglab {

// Smooth scalar coefficient field with analytic derivatives.
struct ScalarField {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;

  static ScalarField zero(int dim) {
    return {[](const Vec&) { return 0.0; },
            [dim](const Vec&) { return Vec::zero(dim); },
            [dim](const Vec&) { return Mat::zero(dim); }};
  }
  // 0.5 * a |x - x0|^2
  static ScalarField quadratic_well(double a, Vec x0) {
    int dim = x0.n;
    return {[a, x0](const Vec& x) { return 0.5 * a * norm_sq(x - x0); },
            [a, x0](const Vec& x) { return a * (x - x0); },
            [a, dim](const Vec&) {
              Mat m = Mat::identity(dim);
              m *= a;
              return m;
            }};
  }
  static ScalarField linear(Vec slope) {
    int dim = slope.n;
    return {[slope](const Vec& x) { return dot(slope, x); },
            [slope](const Vec&) { return slope; },
            [dim](const Vec&) { return Mat::zero(dim); }};
  }
};

// Smooth vector coefficient field (drift). Affine fields have exact
// derivatives; anything curvier must supply its own jacobian.
struct VectorField {
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;

  static VectorField constant(Vec v) {
    int dim = v.n;
    return {[v](const Vec&) { return v; }, [dim](const Vec&) { return Mat::zero(dim); }};
  }
  static VectorField zero(int dim) { return constant(Vec::zero(dim)); }
};

// Lagrangian L(x, v), uniformly convex in v: I/mu <= D^2_vv L <= mu I.
struct LagrangianSpec {
  enum class Kind { Quadratic, DriftQuadratic, Custom };

  Kind kind = Kind::Quadratic;
  ScalarField potential;  // l(x)
  VectorField drift;      // b(x), drift-quadratic only
  double mu = 1.0;        // convexity constant

  // Custom kind: caller supplies everything below.
  std::function<double(const Vec&, const Vec&)> custom_L;
  std::function<Vec(const Vec&, const Vec&)> custom_DxL;
  std::function<Vec(const Vec&, const Vec&)> custom_DvL;
  std::function<Mat(const Vec&, const Vec&)> custom_DvvL;
  std::function<Mat(const Vec&, const Vec&)> custom_DvxL;  // d(DvL)/dx
  std::function<Mat(const Vec&, const Vec&)> custom_DxxL;

  static LagrangianSpec quadratic(int dim, ScalarField l = {}) {
    LagrangianSpec s;
    s.kind = Kind::Quadratic;
    s.potential = l.value ? std::move(l) : ScalarField::zero(dim);
    return s;
  }
  static LagrangianSpec drift_quadratic(int dim, VectorField b, ScalarField l = {}) {
    LagrangianSpec s;
    s.kind = Kind::DriftQuadratic;
    s.drift = std::move(b);
    s.potential = l.value ? std::move(l) : ScalarField::zero(dim);
    return s;
  }

  double L(const Vec& x, const Vec& v) const {
    switch (kind) {
      case Kind::Quadratic: return 0.5 * norm_sq(v) + potential.value(x);
      case Kind::DriftQuadratic:
        return 0.5 * norm_sq(v - drift.value(x)) + potential.value(x);
      case Kind::Custom: return custom_L(x, v);
    }
    return 0.0;
  }

  Vec DvL(const Vec& x, const Vec& v) const {
    switch (kind) {
      case Kind::Quadratic: return v;
      case Kind::DriftQuadratic: return v - drift.value(x);
      case Kind::Custom: return custom_DvL(x, v);
    }
    return v;
  }

  Vec DxL(const Vec& x, const Vec& v) const {
    switch (kind) {
      case Kind::Quadratic: return potential.grad(x);
      case Kind::DriftQuadratic: {
        Vec w = v - drift.value(x);
        return potential.grad(x) - mul(transpose(drift.jacobian(x)), w);
      }
      case Kind::Custom: return custom_DxL(x, v);
    }
    return Vec::zero(x.n);
  }

  Mat DvvL(const Vec& x, const Vec& v) const {
    if (kind == Kind::Custom) return custom_DvvL(x, v);
    return Mat::identity(x.n);
  }

  Mat DvxL(const Vec& x, const Vec& v) const {
    switch (kind) {
      case Kind::Quadratic: return Mat::zero(x.n);
      case Kind::DriftQuadratic: {
        Mat j = drift.jacobian(x);
        j *= -1.0;
        return j;
      }
      case Kind::Custom: return custom_DvxL(x, v);
    }
    return Mat::zero(x.n);
  }

  Mat DxxL(const Vec& x, const Vec& v) const {
    switch (kind) {
      case Kind::Quadratic: return potential.hess(x);
      case Kind::DriftQuadratic: {
        // Exact for affine drifts; curvier drifts would add a D^2 b term.
        Mat j = drift.jacobian(x);
        return potential.hess(x) + matmul(transpose(j), j);
      }
      case Kind::Custom: return custom_DxxL(x, v);
    }
    return Mat::zero(x.n);
  }
};

// Legendre transform H(x, p) = sup_v { -<p, v> - L(x, v) } and its
// maximizer. Closed form for the quadratic kinds; damped Newton otherwise.
inline std::pair<double, Vec> legendre(const LagrangianSpec& spec, const Vec& x,
                                       const Vec& p) {
  switch (spec.kind) {
    case LagrangianSpec::Kind::Quadratic:
      return {0.5 * norm_sq(p) - spec.potential.value(x), -p};
    case LagrangianSpec::Kind::DriftQuadratic: {
      Vec b = spec.drift.value(x);
      Vec v = b - p;
      return {0.5 * norm_sq(p) - dot(p, b) - spec.potential.value(x), v};
    }
    case LagrangianSpec::Kind::Custom: {
      // Solve DvL(x, v) = -p; strongly concave inner problem.
      Vec v = -p;
      for (int it = 0; it < 100; ++it) {
        Vec r = spec.DvL(x, v) + p;
        if (norm(r) < 1e-12) {
          return {-dot(p, v) - spec.L(x, v), v};
        }
        Mat hmat = spec.DvvL(x, v);
        Vec step;
        if (x.n == 1) {
          step = Vec(r[0] / hmat(0, 0));
        } else {
          double det = hmat(0, 0) * hmat(1, 1) - hmat(0, 1) * hmat(1, 0);
          step = Vec((hmat(1, 1) * r[0] - hmat(0, 1) * r[1]) / det,
                     (hmat(0, 0) * r[1] - hmat(1, 0) * r[0]) / det);
        }
        v -= step;
      }
      throw NoConvergence("legendre Newton failed in 100 iterations");
    }
  }
  return {0.0, Vec::zero(x.n)};
}

struct Hamiltonian {
  LagrangianSpec lagrangian;

  double H(const Vec& x, const Vec& p) const { return legendre(lagrangian, x, p).first; }

  // Envelope identity: D_p H(x, p) = -v*(x, p).
  Vec DpH(const Vec& x, const Vec& p) const { return -legendre(lagrangian, x, p).second; }

  Vec DxH(const Vec& x, const Vec& p) const {
    switch (lagrangian.kind) {
      case LagrangianSpec::Kind::Quadratic:
        return -lagrangian.potential.grad(x);
      case LagrangianSpec::Kind::DriftQuadratic:
        return -mul(transpose(lagrangian.drift.jacobian(x)), p) -
               lagrangian.potential.grad(x);
      case LagrangianSpec::Kind::Custom: {
        // Envelope: D_x H(x, p) = -D_x L(x, v*).
        Vec vstar = legendre(lagrangian, x, p).second;
        return -lagrangian.DxL(x, vstar);
      }
    }
    return Vec::zero(x.n);
  }
};

// sup over boundary-tangent velocities of -<p, v> - L(x, v).
inline double tangential_hamiltonian(const Hamiltonian& ham, const Domain& dom,
                                     const Vec& x, const Vec& p) {
  if (!on_boundary(dom, x, 1e-8)) throw NotBoundary("tangential Hamiltonian off boundary");
  if (dom.dim() == 1) return -ham.lagrangian.L(x, Vec::zero(1));
  Vec tau = boundary_tangent(dom, x);
  double a = dot(p, tau);
  const LagrangianSpec& L = ham.lagrangian;
  // 1D strongly concave maximization of phi(s) = -s a - L(x, s tau).
  double s = 0.0;
  for (int it = 0; it < 100; ++it) {
    double d1 = -a - dot(L.DvL(x, s * tau), tau);
    double d2 = -dot(mul(L.DvvL(x, s * tau), tau), tau);
    double step = d1 / d2;
    s -= step;
    if (std::abs(step) < 1e-13) break;
  }
  return -s * a - L.L(x, s * tau);
}

// The unique lambda making -D_p H(x, p_tau + lambda nu) tangent to the
// domain at x: root of phi(lambda) = <D_p H(x, p_tau + lambda nu), nu>,
// strictly increasing since D_pp H >= I/mu.
inline double lambda_plus(const Hamiltonian& ham, const Domain& dom, const Vec& x,
                          const Vec& p_tau) {
  if (!on_boundary(dom, x, 1e-8)) throw NotBoundary("lambda_plus off boundary");
  Vec nu = outward_normal(dom, x);
  if (std::abs(dot(p_tau, nu)) > 1e-8) throw NotTangent("p_tau has a normal component");
  auto phi = [&](double lam) { return dot(ham.DpH(x, p_tau + lam * nu), nu); };

  // Bracket by doubling.
  double lo = -1.0, hi = 1.0;
  double flo = phi(lo), fhi = phi(hi);
  while (flo > 0.0) {
    lo *= 2.0;
    if (lo < -1e6) throw BracketFailure("no sign change for lambda in [-1e6, 1e6]");
    flo = phi(lo);
  }
  while (fhi < 0.0) {
    hi *= 2.0;
    if (hi > 1e6) throw BracketFailure("no sign change for lambda in [-1e6, 1e6]");
    fhi = phi(hi);
  }
  // Bisection, then a few secant polish steps.
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = phi(mid);
    if (fm <= 0.0) lo = mid; else hi = mid;
    if (hi - lo < 1e-13 * (1.0 + std::abs(mid))) break;
  }
  double lam = 0.5 * (lo + hi);
  for (int it = 0; it < 10; ++it) {
    double f = phi(lam);
    if (std::abs(f) <= 1e-12) break;
    double dl = 1e-7 * (1.0 + std::abs(lam));
    double df = (phi(lam + dl) - phi(lam - dl)) / (2.0 * dl);
    if (df <= 0.0) break;
    lam -= f / df;
  }
  if (std::abs(phi(lam)) > 1e-10) throw BracketFailure("lambda_plus polish failed");
  return lam;
}

// Mean-field coupling F(x, m) (and terminal G) with analytic derivatives.
struct Coupling {
  enum class Form { Zero, Kernel, Custom };

  Form form = Form::Zero;
  double sigma = 0.2;  // kernel width
  double kappa = 0.0;  // Lipschitz constant in d1

  std::function<double(const Vec&, const ParticleMeasure&)> custom_F;
  std::function<Vec(const Vec&, const ParticleMeasure&)> custom_DxF;
  std::function<Mat(const Vec&, const ParticleMeasure&)> custom_DxxF;

  static Coupling zero() { return {}; }

  // Gaussian-kernel smoothed density F(x, m) = (rho_sigma * m)(x). The d1
  // Lipschitz constant is the kernel's: max |D rho_sigma| attained at
  // |z| = sigma.
  static Coupling kernel(int dim, double sigma) {
    Coupling c;
    c.form = Form::Kernel;
    c.sigma = sigma;
    double normcst = 1.0 / (std::pow(2.0 * M_PI, 0.5 * dim) * std::pow(sigma, dim));
    c.kappa = normcst * std::exp(-0.5) / sigma;
    return c;
  }

  double kernel_norm(int dim) const {
    return 1.0 / (std::pow(2.0 * M_PI, 0.5 * dim) * std::pow(sigma, dim));
  }

  double F(const Vec& x, const ParticleMeasure& m) const {
    switch (form) {
      case Form::Zero: return 0.0;
      case Form::Kernel: {
        double cst = kernel_norm(x.n), s2 = sigma * sigma, total = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i)
          total += m.weights[i] * std::exp(-0.5 * norm_sq(x - m.points[i]) / s2);
        return cst * total;
      }
      case Form::Custom: return custom_F(x, m);
    }
    return 0.0;
  }

  Vec DxF(const Vec& x, const ParticleMeasure& m) const {
    switch (form) {
      case Form::Zero: return Vec::zero(x.n);
      case Form::Kernel: {
        double cst = kernel_norm(x.n), s2 = sigma * sigma;
        Vec total = Vec::zero(x.n);
        for (std::size_t i = 0; i < m.size(); ++i) {
          Vec z = x - m.points[i];
          total += (-m.weights[i] * std::exp(-0.5 * norm_sq(z) / s2) / s2) * z;
        }
        return cst * total;
      }
      case Form::Custom: return custom_DxF(x, m);
    }
    return Vec::zero(x.n);
  }

  Mat DxxF(const Vec& x, const ParticleMeasure& m) const {
    switch (form) {
      case Form::Zero: return Mat::zero(x.n);
      case Form::Kernel: {
        double cst = kernel_norm(x.n), s2 = sigma * sigma;
        Mat total = Mat::zero(x.n);
        for (std::size_t i = 0; i < m.size(); ++i) {
          Vec z = x - m.points[i];
          double e = m.weights[i] * std::exp(-0.5 * norm_sq(z) / s2);
          Mat term = Mat::outer(z, z);
          term *= e / (s2 * s2);
          Mat id = Mat::identity(x.n);
          id *= -e / s2;
          total += term;
          total += id;
        }
        total *= cst;
        return total;
      }
      case Form::Custom: return custom_DxxF(x, m);
    }
    return Mat::zero(x.n);
  }
};

// Terminal cost G(x, m): a position part plus an optional coupling part.
struct TerminalCost {
  ScalarField g;     // position-dependent part
  Coupling coupling; // mean-field part, evaluated at m(T)

  double value(const Vec& x, const ParticleMeasure& mT) const {
    return g.value(x) + coupling.F(x, mT);
  }
  Vec grad(const Vec& x, const ParticleMeasure& mT) const {
    return g.grad(x) + coupling.DxF(x, mT);
  }
  Mat hess(const Vec& x, const ParticleMeasure& mT) const {
    return g.hess(x) + coupling.DxxF(x, mT);
  }
};

}  // namespace mfglab
