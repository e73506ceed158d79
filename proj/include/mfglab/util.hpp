#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <future>
#include <string>
#include <thread>
#include <vector>

namespace mfglab {

inline int thread_budget() {
  if (const char* env = std::getenv("MFGLAB_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Deterministic fan-out: results are joined in index order regardless of the
// schedule.
inline void parallel_for(int count, const std::function<void(int)>& body) {
  int workers = std::min(thread_budget(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::future<void>> futs;
  futs.reserve(workers);
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w)
    futs.push_back(std::async(std::launch::async, [&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    }));
  for (auto& f : futs) f.get();
}

// Fixed-format float printing so reruns are byte-identical.
inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Natural cubic spline on a uniform grid; C^2, with analytically consistent
// first and second derivatives (the derivative of eval IS deriv).
class CubicSpline {
 public:
  CubicSpline() = default;

  CubicSpline(double a, double b, std::vector<double> y)
      : a_(a), h_((b - a) / (y.size() - 1)), y_(std::move(y)) {
    std::size_t n = y_.size();
    m_.assign(n, 0.0);
    if (n < 3) return;
    // Tridiagonal system for interior second derivatives (natural ends).
    std::vector<double> diag(n, 2.0), rhs(n, 0.0), upper(n, 0.5);
    for (std::size_t i = 1; i + 1 < n; ++i)
      rhs[i] = 3.0 * (y_[i + 1] - 2.0 * y_[i] + y_[i - 1]) / (h_ * h_);
    // Thomas algorithm on the interior block with half off-diagonals.
    for (std::size_t i = 2; i + 1 < n; ++i) {
      double w = 0.5 / diag[i - 1];
      diag[i] -= w * 0.5;
      rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      double up = (i + 2 < n) ? upper[i] * m_[i + 1] : 0.0;
      m_[i] = (rhs[i] - up) / diag[i];
      if (i == 1) break;
    }
  }

  double eval(double x) const {
    auto [i, s] = locate(x);
    double h2 = h_ * h_;
    double A = 1.0 - s, B = s;
    return A * y_[i] + B * y_[i + 1] +
           h2 / 6.0 * ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]);
  }

  double deriv(double x) const {
    auto [i, s] = locate(x);
    double A = 1.0 - s, B = s;
    return (y_[i + 1] - y_[i]) / h_ +
           h_ / 6.0 * ((3.0 * B * B - 1.0) * m_[i + 1] - (3.0 * A * A - 1.0) * m_[i]);
  }

  double second(double x) const {
    auto [i, s] = locate(x);
    return (1.0 - s) * m_[i] + s * m_[i + 1];
  }

 private:
  std::pair<std::size_t, double> locate(double x) const {
    double u = (x - a_) / h_;
    std::size_t last = y_.size() - 2;
    std::size_t i = u <= 0.0 ? 0 : std::min(static_cast<std::size_t>(u), last);
    double s = std::clamp(u - static_cast<double>(i), 0.0, 1.0);
    return {i, s};
  }

  double a_ = 0.0, h_ = 1.0;
  std::vector<double> y_;
  std::vector<double> m_;
};

// Least-squares fit of defect ~ c * r^alpha on the log-log plane; points with
// defect below the noise floor are skipped.
struct PowerFit {
  double c = 0.0;
  double alpha = 0.0;
  int used = 0;
};

inline PowerFit fit_power_law(const std::vector<std::pair<double, double>>& pts,
                              double floor = 1e-12) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& [r, d] : pts) {
    if (!(d > floor) || !(r > 0)) continue;
    double lx = std::log(r), ly = std::log(d);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  PowerFit fit;
  fit.used = n;
  if (n < 2) {
    fit.alpha = 2.0;  // defects at noise level: no curvature to measure
    return fit;
  }
  double denom = n * sxx - sx * sx;
  fit.alpha = (n * sxy - sx * sy) / denom;
  fit.c = std::exp((sy - fit.alpha * sx) / n);
  return fit;
}

}  // namespace mfglab
