#include "mpedge/population.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "mpedge/errors.hpp"

namespace mpedge {

PopulationSpectrum::PopulationSpectrum(std::vector<double> sigmas, double tau)
    : sigmas_(std::move(sigmas)), tau_(tau) {
  if (sigmas_.empty()) throw ValidationError("population must have at least one variance");
  if (!(tau_ > 0.0 && tau_ < 1.0)) throw ValidationError("tau must lie in (0, 1)");
  for (double s : sigmas_) {
    if (!std::isfinite(s) || s < 0.0)
      throw ValidationError("population variances must be finite and nonnegative");
  }
  std::sort(sigmas_.begin(), sigmas_.end(), std::greater<>());

  if (sigmas_.front() > 1.0 / tau_)
    throw ValidationError("sigma_1 exceeds 1/tau; rescale the population or lower tau");
  const auto small = std::count_if(sigmas_.begin(), sigmas_.end(),
                                   [&](double s) { return s <= tau_; });
  if (static_cast<double>(small) / static_cast<double>(sigmas_.size()) > 1.0 - tau_)
    throw ValidationError("population concentrates at zero: pi_N([0, tau]) > 1 - tau");

  const double inv_m = 1.0 / static_cast<double>(sigmas_.size());
  for (double s : sigmas_) {
    if (!atoms_.empty() && atoms_.back().sigma == s) {
      atoms_.back().weight += inv_m;
    } else {
      atoms_.push_back({s, inv_m});
    }
  }
}

PopulationSpectrum PopulationSpectrum::from_sigmas(std::vector<double> sigmas, double tau) {
  return PopulationSpectrum(std::move(sigmas), tau);
}

PopulationSpectrum PopulationSpectrum::from_atoms(std::span<const Atom> atoms, std::size_t M,
                                                  double tau) {
  if (atoms.empty()) throw ValidationError("population needs at least one atom");
  if (M == 0) throw ValidationError("M must be positive");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.weight > 0.0) || !std::isfinite(a.weight))
      throw ValidationError("atom weights must be positive and finite");
    total += a.weight;
  }
  // Largest-remainder apportionment; ties go to the earlier atom.
  std::vector<std::size_t> counts(atoms.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const double exact = atoms[k].weight / total * static_cast<double>(M);
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < M; ++r, ++assigned) ++counts[remainders[r].second];

  std::vector<double> sigmas;
  sigmas.reserve(M);
  for (std::size_t k = 0; k < atoms.size(); ++k) sigmas.insert(sigmas.end(), counts[k], atoms[k].sigma);
  return PopulationSpectrum(std::move(sigmas), tau);
}

PopulationSpectrum PopulationSpectrum::identity(std::size_t M) {
  if (M == 0) throw ValidationError("M must be positive");
  return PopulationSpectrum(std::vector<double>(M, 1.0), kDefaultTau);
}

double PopulationSpectrum::nonzero_mass() const noexcept {
  double mass = 0.0;
  for (const auto& a : atoms_)
    if (a.sigma > 0.0) mass += a.weight;
  return mass;
}

PopulationSpectrum PopulationSpectrum::resized(std::size_t M) const {
  if (M == sigmas_.size()) return *this;
  return from_atoms(atoms_, M, tau_);
}

bool PopulationSpectrum::satisfies_bounds(double tau) const noexcept {
  if (sigmas_.front() > 1.0 / tau) return false;
  const auto small = std::count_if(sigmas_.begin(), sigmas_.end(),
                                   [&](double s) { return s <= tau; });
  return static_cast<double>(small) / static_cast<double>(sigmas_.size()) <= 1.0 - tau;
}

AspectRatio::AspectRatio(std::size_t N, std::size_t M) : N_(N), M_(M) {
  if (N == 0 || M == 0) throw ValidationError("N and M must be positive");
  d_ = static_cast<double>(N) / static_cast<double>(M);
}

AspectRatio AspectRatio::from_ratio(std::size_t M, double d) {
  if (!(d > 0.0) || !std::isfinite(d)) throw ValidationError("aspect ratio d must be positive");
  const double n = d * static_cast<double>(M);
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-9 * std::max(1.0, n) || rounded < 1.0)
    throw ValidationError("d * M must be a positive integer");
  return AspectRatio(static_cast<std::size_t>(rounded), M);
}

}  // namespace mpedge
