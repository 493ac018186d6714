#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace mpedge {

inline constexpr int kLanczosMaxK = 32;
inline constexpr double kLanczosTolerance = 1e-10;

// y = A x for a symmetric positive semidefinite A.
using SymmetricOperator = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& y)>;

struct LanczosResult {
  std::vector<double> values;  // descending
  int iterations = 0;
  double max_residual = 0.0;   // max |β_m s_mi| over the returned Ritz pairs
};

// Top-k eigenvalues by Lanczos with full reorthogonalization (two Gram-Schmidt
// passes per step). A pair is accepted when its residual is ≤ tol · max(1, |θ_1|).
// The start vector is fixed, so the result is a pure function of A.
// Throws NoConvergence after max_iter steps.
LanczosResult lanczos_topk(const SymmetricOperator& op, std::size_t n, int k,
                           double tol = kLanczosTolerance, int max_iter = 0);

}  // namespace mpedge
