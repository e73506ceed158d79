#pragma once

#include <vector>

#include "mfglab/errors.hpp"
#include "mfglab/vec.hpp"

namespace mfglab {

// Discrete-time path on a uniform grid t0 + k*dt, k = 0..nodes.size()-1.
struct Trajectory {
  double t0 = 0.0;
  double T = 1.0;
  std::vector<Vec> nodes;

  int steps() const { return static_cast<int>(nodes.size()) - 1; }
  double dt() const { return (T - t0) / steps(); }
  double time(int k) const { return t0 + k * dt(); }

  // Forward difference velocity on [t_k, t_{k+1}].
  Vec velocity(int k) const { return (nodes[k + 1] - nodes[k]) / dt(); }

  // Centered velocity at node k; second-order one-sided at the ends.
  Vec velocity_at_node(int k) const {
    int n = steps();
    if (n == 1) return velocity(0);
    if (k == 0) return 1.5 * velocity(0) - 0.5 * velocity(1);
    if (k == n) return 1.5 * velocity(n - 1) - 0.5 * velocity(n - 2);
    return (nodes[k + 1] - nodes[k - 1]) / (2.0 * dt());
  }

  double max_speed() const {
    double s = 0.0;
    for (int k = 0; k < steps(); ++k) s = std::max(s, norm(velocity(k)));
    return s;
  }

  // Piecewise-linear evaluation at an arbitrary time in [t0, T].
  Vec at(double t) const {
    if (t <= t0) return nodes.front();
    if (t >= T) return nodes.back();
    double s = (t - t0) / dt();
    int k = std::min(static_cast<int>(s), steps() - 1);
    double w = s - k;
    return (1.0 - w) * nodes[k] + w * nodes[k + 1];
  }
};

}  // namespace mfglab
