#include "mpedge/tracy_widom.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>

#include "mpedge/airy.hpp"
#include "mpedge/errors.hpp"

namespace mpedge {

TWOrder tw_order(int beta) {
  if (beta == 1) return TWOrder::GOE;
  if (beta == 2) return TWOrder::GUE;
  throw ValidationError("Tracy-Widom order must be 1 or 2, got " + std::to_string(beta));
}

double tw_cdf(TWOrder order, const QuadratureGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.nodes.size());
  if (n == 0) throw ValidationError("tw_cdf: empty quadrature grid");
  std::vector<double> sw(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(grid.weights[i] > 0.0)) throw ValidationError("tw_cdf: quadrature weights must be positive");
    if (i > 0 && !(grid.nodes[i] > grid.nodes[i - 1]))
      throw ValidationError("tw_cdf: quadrature nodes must be strictly increasing");
    sw[i] = std::sqrt(grid.weights[i]);
  }

  Eigen::MatrixXd a(n, n);
  if (order == TWOrder::GUE) {
    std::vector<AiryPair> ai(n);
    for (Eigen::Index i = 0; i < n; ++i) ai[i] = airy(grid.nodes[i]);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        double k;
        if (i == j) {
          k = ai[i].aip * ai[i].aip - grid.nodes[i] * ai[i].ai * ai[i].ai;
        } else {
          k = (ai[i].ai * ai[j].aip - ai[i].aip * ai[j].ai) / (grid.nodes[i] - grid.nodes[j]);
        }
        a(i, j) = -sw[i] * k * sw[j];
      }
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        const double k = 0.5 * airy_ai(0.5 * (grid.nodes[i] + grid.nodes[j]));
        a(i, j) = a(j, i) = -sw[i] * k * sw[j];
      }
    }
  }
  a.diagonal().array() += 1.0;
  const double det = Eigen::PartialPivLU<Eigen::MatrixXd>(a).determinant();
  // Eigenvalues of K near 1 are only resolved to rounding, so tinier determinants are noise.
  if (det < kTwFloor) return 0.0;
  return std::min(det, 1.0);
}

double tw_cdf(double s, TWOrder order, const TwOptions& opts) {
  if (!std::isfinite(s)) throw ValidationError("tw_cdf: s must be finite");
  const double f = tw_cdf(order, make_grid(opts.n_nodes, s, s + opts.span));
  if (opts.verify) {
    const double f2 = tw_cdf(order, make_grid(2 * opts.n_nodes, s, s + opts.span));
    if (std::abs(f - f2) > opts.verify_tol)
      throw GridTooCoarse("tw_cdf: doubling nodes changed F(" + std::to_string(s) + ") by " +
                          std::to_string(std::abs(f - f2)));
  }
  return f;
}

double tw_quantile(double p, TWOrder order, const TwOptions& opts) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("tw_quantile: p must lie in (0, 1)");
  TwOptions raw = opts;
  raw.verify = false;
  double lo = -12.0, hi = 10.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (tw_cdf(mid, order, raw) < p) lo = mid; else hi = mid;
  }
  const double s = 0.5 * (lo + hi);
  if (opts.verify) tw_cdf(s, order, opts);
  return s;
}

TwTable::TwTable(TWOrder order, double lo, double hi, double step, int n_nodes)
    : order_(order), lo_(lo), hi_(hi), step_(step) {
  if (!(hi > lo) || !(step > 0.0)) throw ValidationError("TwTable: bad grid");
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  values_.resize(n);
  TwOptions opts;
  opts.n_nodes = n_nodes;
  opts.verify = false;
  for (std::size_t k = 0; k < n; ++k) values_[k] = tw_cdf(lo + step * static_cast<double>(k), order, opts);
  // Enforce monotonicity against last-digit noise in the far tails.
  for (std::size_t k = 1; k < n; ++k) values_[k] = std::max(values_[k], values_[k - 1]);
}

const TwTable& TwTable::shared(TWOrder order) {
  static std::once_flag once1, once2;
  static std::unique_ptr<TwTable> goe, gue;
  if (order == TWOrder::GOE) {
    std::call_once(once1, [] { goe = std::make_unique<TwTable>(TWOrder::GOE); });
    return *goe;
  }
  std::call_once(once2, [] { gue = std::make_unique<TwTable>(TWOrder::GUE); });
  return *gue;
}

double TwTable::cdf(double s) const {
  if (s <= lo_) return s == lo_ ? values_.front() : 0.0;
  if (s >= hi_) return 1.0;
  const double pos = (s - lo_) / step_;
  auto i = static_cast<std::ptrdiff_t>(std::floor(pos));
  const auto last = static_cast<std::ptrdiff_t>(values_.size()) - 1;
  const std::ptrdiff_t base = std::clamp<std::ptrdiff_t>(i - 1, 0, last - 3);
  const double t = pos - static_cast<double>(base);
  double out = 0.0;
  for (int a = 0; a < 4; ++a) {
    double w = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) w *= (t - b) / static_cast<double>(a - b);
    out += w * values_[base + a];
  }
  return std::clamp(out, 0.0, 1.0);
}

}  // namespace mpedge
