#include "mpedge/matrix_lab.hpp"

#include <algorithm>
#include <cmath>

#include <lapacke.h>

#include "mpedge/errors.hpp"
#include "mpedge/lanczos.hpp"

namespace mpedge {

namespace {

std::vector<double> singular_values(Eigen::MatrixXd a) {
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  std::vector<double> s(static_cast<std::size_t>(std::min(m, n)));
  std::vector<double> superb(s.size() > 1 ? s.size() - 1 : 1);
  const lapack_int info = LAPACKE_dgesvd(LAPACK_COL_MAJOR, 'N', 'N', m, n, a.data(), m, s.data(),
                                         nullptr, 1, nullptr, 1, superb.data());
  if (info > 0) throw NoConvergence("dgesvd: bidiagonal QR did not converge", static_cast<int>(info));
  if (info < 0) throw NumericalError("dgesvd: illegal argument " + std::to_string(-info));
  return s;
}

}  // namespace

SampleMatrix sample_entries(const EntryDistribution& dist, std::size_t M, std::size_t N,
                            std::uint64_t seed) {
  if (M == 0 || N == 0) throw ValidationError("sample_entries: M and N must be >= 1");
  SampleMatrix out{M, N, seed, dist, Eigen::MatrixXd(M, N)};
  const double inv = 1.0 / std::sqrt(static_cast<double>(N));
  for (std::size_t j = 0; j < N; ++j) {
    CounterRng rng(seed, j);
    double* col = out.x.col(static_cast<Eigen::Index>(j)).data();
    for (std::size_t i = 0; i < M; ++i) col[i] = dist.sample(rng) * inv;
  }
  return out;
}

SampleMatrix wrap_matrix(Eigen::MatrixXd x, const EntryDistribution& dist) {
  if (x.rows() == 0 || x.cols() == 0) throw ValidationError("wrap_matrix: empty matrix");
  SampleMatrix out;
  out.M = static_cast<std::size_t>(x.rows());
  out.N = static_cast<std::size_t>(x.cols());
  out.dist = dist;
  out.x = std::move(x);
  return out;
}

CovarianceModel::CovarianceModel(PopulationSpectrum pop, AspectRatio d)
    : pop_(std::move(pop)), d_(d) {
  if (pop_.size() != d_.M())
    throw ValidationError("population length " + std::to_string(pop_.size()) + " does not match M = " +
                          std::to_string(d_.M()));
  diag_.resize(static_cast<Eigen::Index>(pop_.size()));
  for (std::size_t i = 0; i < pop_.size(); ++i) diag_[static_cast<Eigen::Index>(i)] = std::sqrt(pop_.sigmas()[i]);
}

CovarianceModel CovarianceModel::null(std::size_t M, std::size_t N) {
  return {PopulationSpectrum::identity(M), AspectRatio(N, M)};
}

void CovarianceModel::check(const SampleMatrix& X) const {
  if (X.M != M() || X.N != N() || static_cast<std::size_t>(X.x.rows()) != X.M ||
      static_cast<std::size_t>(X.x.cols()) != X.N)
    throw ValidationError("sample matrix shape does not match the covariance model");
}

Eigen::MatrixXd CovarianceModel::apply(const SampleMatrix& X) const {
  check(X);
  return diag_.asDiagonal() * X.x;
}

EigenSpectrum eigens_of_product(const Eigen::MatrixXd& Y, EigenMethod method) {
  EigenSpectrum out{{}, method};
  if (method.kind == EigenMethod::Kind::Full) {
    auto s = singular_values(Y);
    out.eigenvalues.reserve(s.size());
    for (double v : s) out.eigenvalues.push_back(v * v);
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), std::greater<>());
    return out;
  }
  const bool rows = Y.rows() <= Y.cols();
  const auto n = static_cast<std::size_t>(rows ? Y.rows() : Y.cols());
  Eigen::VectorXd tmp(rows ? Y.cols() : Y.rows());
  SymmetricOperator op = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    if (rows) {
      tmp.noalias() = Y.transpose() * x;
      y.noalias() = Y * tmp;
    } else {
      tmp.noalias() = Y * x;
      y.noalias() = Y.transpose() * tmp;
    }
  };
  auto res = lanczos_topk(op, n, method.k);
  for (double& v : res.values) v = std::max(v, 0.0);
  out.eigenvalues = std::move(res.values);
  return out;
}

EigenSpectrum eigens(const CovarianceModel& model, const SampleMatrix& X, EigenMethod method) {
  return eigens_of_product(model.apply(X), method);
}

Eigen::MatrixXd linearized_H(const CovarianceModel& model, const SampleMatrix& X) {
  const Eigen::MatrixXd Y = model.apply(X);
  const auto M = Y.rows(), N = Y.cols();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(M + N, M + N);
  H.topRightCorner(M, N) = Y;
  H.bottomLeftCorner(N, M) = Y.transpose();
  return H;
}

GreenFunction::GreenFunction(const CovarianceModel& model, const SampleMatrix& X)
    : GreenFunction(model.apply(X)) {}

GreenFunction::GreenFunction(const Eigen::MatrixXd& Y)
    : M_(static_cast<std::size_t>(Y.rows())), N_(static_cast<std::size_t>(Y.cols())),
      r_(std::min(M_, N_)) {
  const auto m = static_cast<lapack_int>(M_), n = static_cast<lapack_int>(N_);
  Eigen::MatrixXd a = Y;
  xi_.resize(m, m);
  Eigen::MatrixXd vt(n, n);
  s_.resize(static_cast<Eigen::Index>(r_));
  std::vector<double> superb(r_ > 1 ? r_ - 1 : 1);
  const lapack_int info = LAPACKE_dgesvd(LAPACK_COL_MAJOR, 'A', 'A', m, n, a.data(), m, s_.data(),
                                         xi_.data(), m, vt.data(), n, superb.data());
  if (info > 0) throw NoConvergence("dgesvd: bidiagonal QR did not converge", static_cast<int>(info));
  if (info < 0) throw NumericalError("dgesvd: illegal argument " + std::to_string(-info));
  zeta_ = vt.transpose();
  lamM_ = Eigen::VectorXd::Zero(m);
  lamN_ = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < r_; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    lamM_[kk] = lamN_[kk] = s_[kk] * s_[kk];
  }
}

cplx GreenFunction::entry(std::size_t a, std::size_t b, cplx z) const {
  cplx acc = 0.0;
  if (a < M_ && b < M_) {
    for (std::size_t k = 0; k < M_; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      acc += xi_(a, kk) * xi_(b, kk) / (lamM_[kk] - z);
    }
    return z * acc;
  }
  if (a >= M_ && b >= M_) {
    const auto mu = a - M_, nu = b - M_;
    for (std::size_t k = 0; k < N_; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      acc += zeta_(mu, kk) * zeta_(nu, kk) / (lamN_[kk] - z);
    }
    return acc;
  }
  const std::size_t i = std::min(a, b), mu = std::max(a, b) - M_;
  for (std::size_t k = 0; k < r_; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    acc += s_[kk] * xi_(i, kk) * zeta_(mu, kk) / (lamM_[kk] - z);
  }
  return acc;
}

Eigen::MatrixXcd GreenFunction::matrix(cplx z) const {
  const auto M = static_cast<Eigen::Index>(M_), N = static_cast<Eigen::Index>(N_),
             r = static_cast<Eigen::Index>(r_);
  Eigen::MatrixXcd G(M + N, M + N);
  const Eigen::MatrixXcd xi = xi_.cast<cplx>(), zeta = zeta_.cast<cplx>();
  Eigen::VectorXcd wM(M), wN(N), wR(r);
  for (Eigen::Index k = 0; k < M; ++k) wM[k] = z / (lamM_[k] - z);
  for (Eigen::Index k = 0; k < N; ++k) wN[k] = 1.0 / (lamN_[k] - z);
  for (Eigen::Index k = 0; k < r; ++k) wR[k] = s_[k] / (lamM_[k] - z);
  G.topLeftCorner(M, M) = xi * wM.asDiagonal() * xi.transpose();
  G.bottomRightCorner(N, N) = zeta * wN.asDiagonal() * zeta.transpose();
  G.topRightCorner(M, N) = xi.leftCols(r) * wR.asDiagonal() * zeta.leftCols(r).transpose();
  G.bottomLeftCorner(N, M) = G.topRightCorner(M, N).transpose();
  return G;
}

cplx GreenFunction::m1(cplx z) const {
  cplx acc = 0.0;
  for (Eigen::Index k = 0; k < lamM_.size(); ++k) acc += 1.0 / (lamM_[k] - z);
  return acc / static_cast<double>(M_);
}

cplx GreenFunction::m2(cplx z) const {
  cplx acc = 0.0;
  for (Eigen::Index k = 0; k < lamN_.size(); ++k) acc += 1.0 / (lamN_[k] - z);
  return acc / static_cast<double>(N_);
}

GreenEvaluation green_function_at(const CovarianceModel& model, const SampleMatrix& X, cplx z) {
  if (!(z.imag() > 0.0)) throw ValidationError("green_function_at needs Im z > 0");
  GreenFunction g(model, X);
  return {z, g.matrix(z), g.m1(z), g.m2(z)};
}

EntryEvent largest_entry_event(const SampleMatrix& X, const CovarianceModel& model, double s, double tau) {
  if (!(s > 0.0)) throw ValidationError("largest_entry_event needs s > 0");
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("largest_entry_event needs 0 < tau < 1");
  model.check(X);
  EntryEvent ev;
  ev.L = static_cast<std::size_t>(std::floor(tau * static_cast<double>(X.M)));
  ev.threshold = std::sqrt(s / tau);
  const auto sig = model.pop().sigmas();
  for (std::size_t i = 0; i < ev.L; ++i)
    if (sig[i] < tau) throw ValidationError("largest_entry_event needs sigma_i >= tau for i <= L");
  double best = 0.0;
  for (std::size_t j = 0; j < X.N; ++j) {
    for (std::size_t i = 0; i < ev.L; ++i) {
      const double v = X.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (std::abs(v) >= ev.threshold && std::abs(v) > best) {
        best = std::abs(v);
        ev.witness = EntryWitness{i, j, v};
      }
    }
  }
  ev.triggered = ev.witness.has_value();
  return ev;
}

}  // namespace mpedge
