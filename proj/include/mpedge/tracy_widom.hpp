#pragma once

#include <vector>

#include "mpedge/quadrature.hpp"

namespace mpedge {

enum class TWOrder { GOE = 1, GUE = 2 };

// Validates beta ∈ {1, 2}.
TWOrder tw_order(int beta);

inline constexpr int kTwNodes = 128;
inline constexpr double kTwSpan = 30.0;
// Determinants below this are reported as 0.
inline constexpr double kTwFloor = 1e-15;

struct TwOptions {
  int n_nodes = kTwNodes;
  double span = kTwSpan;      // domain (s, s + span)
  bool verify = true;         // recompute with 2·n_nodes and compare
  double verify_tol = 1e-6;
};

// Fredholm determinant on a prepared grid over (s, s_max):
//   F2: det(I - K_Ai),   K_Ai(x,y) = (Ai(x)Ai'(y) - Ai'(x)Ai(y)) / (x - y)
//   F1: det(I - A),      A(x,y)    = Ai((x+y)/2) / 2
// Nyström discretization, symmetrized with √w_i, LU with partial pivoting.
double tw_cdf(TWOrder order, const QuadratureGrid& grid);

// Throws GridTooCoarse when opts.verify and doubling the nodes moves F by more than verify_tol.
double tw_cdf(double s, TWOrder order, const TwOptions& opts = {});

// s with |F(s) - p| <= 1e-6, by bisection on [-12, 10].
double tw_quantile(double p, TWOrder order, const TwOptions& opts = {});

// Precomputed F on a uniform grid with four-point Lagrange interpolation.
// Shared tables are built once and read concurrently.
class TwTable {
 public:
  TwTable(TWOrder order, double lo = -12.0, double hi = 8.0, double step = 0.01,
          int n_nodes = kTwNodes);

  static const TwTable& shared(TWOrder order);

  double cdf(double s) const;
  TWOrder order() const noexcept { return order_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

 private:
  TWOrder order_;
  double lo_, hi_, step_;
  std::vector<double> values_;
};

}  // namespace mpedge
