#pragma once

#include <vector>

namespace mpedge {

struct GaussLegendreRule {
  std::vector<double> nodes;    // ascending in (-1, 1)
  std::vector<double> weights;  // positive, summing to 2
};

// n-point Gauss-Legendre rule on [-1, 1]. Rules are computed once and cached.
const GaussLegendreRule& gauss_legendre(int n);

// Nodes and weights of the rule mapped affinely onto (a, b).
struct QuadratureGrid {
  double a = 0.0;
  double b = 0.0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

QuadratureGrid make_grid(int n, double a, double b);

}  // namespace mpedge
