#include "mpedge/lanczos.hpp"

#include <algorithm>
#include <cmath>

#include "mpedge/errors.hpp"
#include "mpedge/rng.hpp"

namespace mpedge {

namespace {

constexpr std::uint64_t kStartKey = 0x4C414E435A4F53ULL;

Eigen::VectorXd fresh_direction(std::size_t n, std::uint64_t salt, const Eigen::MatrixXd& Q, int m) {
  CounterRng rng(kStartKey, salt);
  Eigen::VectorXd v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = rng.uniform() - 0.5;
  for (int pass = 0; pass < 2; ++pass)
    if (m > 0) v -= Q.leftCols(m) * (Q.leftCols(m).transpose() * v);
  return v;
}

}  // namespace

LanczosResult lanczos_topk(const SymmetricOperator& op, std::size_t n, int k, double tol, int max_iter) {
  if (k < 1 || k > kLanczosMaxK) throw ValidationError("lanczos: k must lie in [1, 32]");
  if (n == 0) throw ValidationError("lanczos: empty operator");
  const int dim = static_cast<int>(n);
  k = std::min(k, dim);
  if (max_iter <= 0) max_iter = std::min(dim, std::max(300, 20 * k));
  max_iter = std::min(max_iter, dim);

  Eigen::MatrixXd Q(n, max_iter + 1);
  std::vector<double> alpha, beta;
  alpha.reserve(max_iter);
  beta.reserve(max_iter);

  Eigen::VectorXd q = fresh_direction(n, 0, Q, 0);
  Q.col(0) = q / q.norm();
  Eigen::VectorXd w(n);

  LanczosResult out;
  for (int m = 0; m < max_iter; ++m) {
    op(Q.col(m), w);
    const double a = Q.col(m).dot(w);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass)
      w -= Q.leftCols(m + 1) * (Q.leftCols(m + 1).transpose() * w);
    double b = w.norm();

    const int size = m + 1;
    const bool exhausted = size == dim;
    // An invariant subspace was found; continue from a new orthogonal direction.
    const double scale = std::max(1.0, std::abs(a));
    bool breakdown = b <= 1e-14 * scale;
    if (breakdown && !exhausted) {
      w = fresh_direction(n, static_cast<std::uint64_t>(size), Q, size);
      const double wn = w.norm();
      w /= wn;
      b = 0.0;
    }

    if (size >= k && (exhausted || breakdown || size % 4 == 0 || size == max_iter)) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(size, size);
      for (int i = 0; i < size; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < size) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      const auto& theta = es.eigenvalues();
      const double ref = std::max(1.0, std::abs(theta[size - 1]));
      double worst = 0.0;
      for (int i = 0; i < k; ++i) {
        const int col = size - 1 - i;
        worst = std::max(worst, std::abs(b * es.eigenvectors()(size - 1, col)));
      }
      if (worst <= tol * ref || exhausted) {
        for (int i = 0; i < k; ++i) out.values.push_back(theta[size - 1 - i]);
        out.iterations = size;
        out.max_residual = exhausted ? 0.0 : worst;
        return out;
      }
      if (size == max_iter) throw NoConvergence("lanczos: top-k residual above tolerance", size);
    }
    if (exhausted) break;
    beta.push_back(b);
    Q.col(m + 1) = breakdown ? Eigen::VectorXd(w) : Eigen::VectorXd(w / b);
  }
  throw NoConvergence("lanczos: iteration budget exhausted", max_iter);
}

}  // namespace mpedge
