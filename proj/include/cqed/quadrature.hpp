#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "errors.hpp"

namespace cqed {

struct QuadratureRule {
  std::vector<double> nodes, weights;
};

// q-point Gauss-Legendre rule on [0, 1] (Newton iteration on P_q).
inline QuadratureRule gauss_legendre(int q) {
  if (q < 1) throw DomainError("gauss_legendre: need at least one node");
  QuadratureRule r;
  r.nodes.resize(q);
  r.weights.resize(q);
  for (int i = 0; i < (q + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= q; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = q * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2 / ((1 - x * x) * dp * dp);
    r.nodes[i] = 0.5 * (1 - x);
    r.nodes[q - 1 - i] = 0.5 * (1 + x);
    r.weights[i] = r.weights[q - 1 - i] = 0.5 * w;
  }
  return r;
}

}  // namespace cqed
