#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mpedge/distributions.hpp"
#include "mpedge/population.hpp"

namespace mpedge {

// x_ij = q_ij / √N with q_ij i.i.d. from `dist`. Column j is drawn from its own
// substream (seed, j), so the matrix is a pure function of (seed, dist, M, N).
struct SampleMatrix {
  std::size_t M = 0;
  std::size_t N = 0;
  std::uint64_t seed = 0;
  EntryDistribution dist = EntryDistribution::gaussian();
  Eigen::MatrixXd x;
};

SampleMatrix sample_entries(const EntryDistribution& dist, std::size_t M, std::size_t N,
                            std::uint64_t seed);
// Wraps an explicit matrix (planted constructions, loaded dumps).
SampleMatrix wrap_matrix(Eigen::MatrixXd x, const EntryDistribution& dist = EntryDistribution::gaussian());

// T = D = diag(√σ_i) together with d = N / M.
class CovarianceModel {
 public:
  CovarianceModel(PopulationSpectrum pop, AspectRatio d);
  static CovarianceModel null(std::size_t M, std::size_t N);

  const PopulationSpectrum& pop() const noexcept { return pop_; }
  AspectRatio d() const noexcept { return d_; }
  std::size_t M() const noexcept { return d_.M(); }
  std::size_t N() const noexcept { return d_.N(); }
  const Eigen::VectorXd& diag() const noexcept { return diag_; }

  // Throws ValidationError when X does not have shape M × N.
  void check(const SampleMatrix& X) const;
  Eigen::MatrixXd apply(const SampleMatrix& X) const;  // D X

 private:
  PopulationSpectrum pop_;
  AspectRatio d_;
  Eigen::VectorXd diag_;
};

struct EigenMethod {
  enum class Kind { Full, TopK } kind = Kind::Full;
  int k = 1;
  static EigenMethod full() { return {}; }
  static EigenMethod topk(int k) { return {Kind::TopK, k}; }
};

struct EigenSpectrum {
  std::vector<double> eigenvalues;  // descending, length min(M,N) for Full, k for TopK
  EigenMethod method;
};

// Full: squared singular values of D X (LAPACK dgesvd). TopK: Lanczos on the
// smaller of Q₁ = D X X* D* and Q₂ = X* D* D X, which share their nonzero spectrum.
EigenSpectrum eigens(const CovarianceModel& model, const SampleMatrix& X,
                     EigenMethod method = EigenMethod::full());
// Same on an explicit product Y = D X.
EigenSpectrum eigens_of_product(const Eigen::MatrixXd& Y, EigenMethod method);

// [[0, D X], [(D X)*, 0]].
Eigen::MatrixXd linearized_H(const CovarianceModel& model, const SampleMatrix& X);

using cplx = std::complex<double>;

// Resolvent of the linearization, G(z) = [[-I, DX], [(DX)*, -z I]]^{-1}, built from
// the full SVD D X = Σ √λ_k ξ_k ζ_k*. Indices a < M address I₁, a ≥ M address I₂.
class GreenFunction {
 public:
  GreenFunction(const CovarianceModel& model, const SampleMatrix& X);
  explicit GreenFunction(const Eigen::MatrixXd& Y);

  std::size_t M() const noexcept { return M_; }
  std::size_t N() const noexcept { return N_; }
  const Eigen::VectorXd& lambdas_M() const noexcept { return lamM_; }

  cplx entry(std::size_t a, std::size_t b, cplx z) const;
  Eigen::MatrixXcd matrix(cplx z) const;
  // m₁ = (Mz)⁻¹ Σ_i G_ii and m₂ = N⁻¹ Σ_μ G_μμ.
  cplx m1(cplx z) const;
  cplx m2(cplx z) const;

 private:
  std::size_t M_, N_, r_;
  Eigen::MatrixXd xi_;    // M × M, left singular vectors
  Eigen::MatrixXd zeta_;  // N × N, right singular vectors
  Eigen::VectorXd s_;     // r singular values
  Eigen::VectorXd lamM_;  // M eigenvalues of Q₁ (zeros padded)
  Eigen::VectorXd lamN_;  // N eigenvalues of Q₂
};

struct GreenEvaluation {
  cplx z;
  Eigen::MatrixXcd G;
  cplx m1;
  cplx m2;
};

// Throws ValidationError unless Im z > 0.
GreenEvaluation green_function_at(const CovarianceModel& model, const SampleMatrix& X, cplx z);

struct EntryWitness {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

struct EntryEvent {
  bool triggered = false;
  std::optional<EntryWitness> witness;
  std::size_t L = 0;
  double threshold = 0.0;  // I = √(s / τ)
};

// Γ_N: some |x_ij| ≥ √(s/τ) with i ≤ L = ⌊τM⌋. Requires σ_i ≥ τ on those rows,
// which makes λ₁(Q₂) ≥ σ_i x_ij² ≥ s whenever the event holds.
EntryEvent largest_entry_event(const SampleMatrix& X, const CovarianceModel& model, double s, double tau);

}  // namespace mpedge
