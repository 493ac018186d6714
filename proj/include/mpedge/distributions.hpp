#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mpedge/rng.hpp"

namespace mpedge {

enum class DistKind { Gaussian, Rademacher, HeavyTail, Pareto, Tabulated };

// Whether lim s⁴ P(|q| ≥ s) = 0.
enum class TailClass { ConditionHolds, ConditionFails };

// E Y² for the one-sided density with survival S(y) = e⁴ / (y⁴ ln y), y > e.
// Equals e² + 2 e⁴ E₁(2); checked against direct quadrature in the tests.
inline constexpr double kHeavyTailSecondMoment = 12.728810939602845;
inline constexpr double kHeavyTailScale = 3.567745918588212;

// P(Y ≥ y) for the raw heavy-tail variable.
double heavy_tail_survival_raw(double y);
// One draw of the raw (positive, unstandardized) heavy-tail variable.
double heavy_tail_draw_raw(CounterRng& rng);

struct SurvivalEstimate {
  double value = 0.0;
  double std_error = 0.0;  // zero for closed forms
};

// α = P(|q| > T) and β = E[1(|q| > T) q].
struct TailMoments {
  double alpha = 0.0;
  double beta = 0.0;
};

// Law of a standardized entry q (E q = 0, E q² = 1), with q = (raw - shift) / scale.
class EntryDistribution {
 public:
  static EntryDistribution gaussian();
  static EntryDistribution rademacher();
  // Symmetrized ±Y / √(E Y²).
  static EntryDistribution heavy_tail();
  // One-sided Pareto with x_m = 1 and shape a > 2.
  static EntryDistribution pareto(double a);
  // Bootstrap from the samples after standardizing them empirically.
  static EntryDistribution tabulated(std::vector<double> samples);

  // gaussian | rademacher | heavy | pareto:a | tabulated:<file>
  static EntryDistribution parse(std::string_view text);

  DistKind kind() const noexcept { return kind_; }
  std::string name() const;
  double shift() const noexcept { return shift_; }
  double scale() const noexcept { return scale_; }
  double pareto_shape() const noexcept { return a_; }
  TailClass tail_class() const noexcept;

  double sample(CounterRng& rng) const;

  // P(|q| ≥ s) for closed-form kinds. Throws Unsupported for tabulated.
  double survival(double s) const;
  // Closed form where available, otherwise the empirical frequency with its standard error.
  SurvivalEstimate survival_estimate(double s) const;

  // (s, s⁴ P(|q| ≥ s)) along an increasing positive grid.
  std::vector<std::pair<double, double>> tail_condition_estimate(const std::vector<double>& s_grid) const;

  // Throws QuadratureFailure for tabulated.
  TailMoments tail_moments(double T) const;

 private:
  EntryDistribution(DistKind kind, double shift, double scale) : kind_(kind), shift_(shift), scale_(scale) {}

  DistKind kind_;
  double shift_;
  double scale_;
  double a_ = 0.0;
  std::shared_ptr<const std::vector<double>> table_;  // standardized, sorted by |q|
};

}  // namespace mpedge
