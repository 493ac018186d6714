#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mpedge {

inline constexpr double kDefaultTau = 0.01;

// One distinct population variance and the fraction of the M rows carrying it.
struct Atom {
  double sigma = 0.0;
  double weight = 0.0;
};

// Diagonal population variances σ_1 ≥ … ≥ σ_M of Σ = D², together with the
// collapsed empirical measure π_N (distinct values with their weights).
//
// Construction enforces σ_1 ≤ 1/τ and π_N([0, τ]) ≤ 1 − τ.
class PopulationSpectrum {
 public:
  static PopulationSpectrum from_sigmas(std::vector<double> sigmas, double tau = kDefaultTau);
  // Apportions M rows over the atoms by largest remainder; weights need not sum to 1.
  static PopulationSpectrum from_atoms(std::span<const Atom> atoms, std::size_t M,
                                       double tau = kDefaultTau);
  static PopulationSpectrum identity(std::size_t M);

  std::size_t size() const noexcept { return sigmas_.size(); }
  std::span<const double> sigmas() const noexcept { return sigmas_; }
  // Distinct σ values, descending, weights summing to 1.
  std::span<const Atom> atoms() const noexcept { return atoms_; }
  double sigma_max() const noexcept { return sigmas_.front(); }
  double tau() const noexcept { return tau_; }

  // Mass of π_N on nonzero σ.
  double nonzero_mass() const noexcept;
  // Same atoms re-apportioned over a different number of rows.
  PopulationSpectrum resized(std::size_t M) const;

  bool satisfies_bounds(double tau) const noexcept;

 private:
  PopulationSpectrum(std::vector<double> sigmas, double tau);

  std::vector<double> sigmas_;
  std::vector<Atom> atoms_;
  double tau_;
};

// d = N / M for a concrete pair of dimensions.
class AspectRatio {
 public:
  AspectRatio(std::size_t N, std::size_t M);
  // N = d·M, which must be an integer.
  static AspectRatio from_ratio(std::size_t M, double d);

  double value() const noexcept { return d_; }
  std::size_t N() const noexcept { return N_; }
  std::size_t M() const noexcept { return M_; }

 private:
  std::size_t N_;
  std::size_t M_;
  double d_;
};

}  // namespace mpedge
