#pragma once

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "mpedge/population.hpp"

namespace mpedge {

using cplx = std::complex<double>;

inline constexpr double kSolverTolerance = 1e-12;
inline constexpr double kPoleGuard = 1e-12;
inline constexpr double kDensityEtaFloor = 1e-6;
inline constexpr double kIntervalMergeGap = 1e-8;

struct SolverOptions {
  double tol = kSolverTolerance;  // on |z - f(m)| / max(1, |z|)
  double pole_guard = kPoleGuard;
  int max_iterations = 20000;
  // Above this η the damped iteration starts cold from -1/z; below it the
  // solve walks down a geometric η ladder, warm-starting each rung.
  double eta_direct = 1.0;
  double eta_ratio = 0.5;
  double newton_switch = 1e-4;
};

// f(m) = -1/m + d^{-1} ∫ x/(1 + m x) π_N(dx). Throws PoleProximity near m = 0 or m = -1/σ_i.
double f_of_m(double m, const PopulationSpectrum& pop, AspectRatio d, double pole_guard = kPoleGuard);
cplx f_of_m(cplx m, const PopulationSpectrum& pop, AspectRatio d, double pole_guard = kPoleGuard);

// f'(m) = 1/m² - d^{-1} ∫ x²/(1 + m x)² π_N(dx).
double f_prime_of_m(double m, const PopulationSpectrum& pop, AspectRatio d,
                    double pole_guard = kPoleGuard);
cplx f_prime_of_m(cplx m, const PopulationSpectrum& pop, AspectRatio d,
                  double pole_guard = kPoleGuard);

struct StieltjesValue {
  cplx z;
  cplx m2c;
  cplx m1c;
  double residual = 0.0;  // |z - f(m2c)| / max(1, |z|)
  int iterations = 0;
};

// m_2c(z) for Im z > 0: the root of z = f(m) on the upper half plane.
StieltjesValue solve_m2c(cplx z, const PopulationSpectrum& pop, AspectRatio d,
                         const SolverOptions& opts = {});
// Same, starting the local refinement at `warm` instead of walking the η ladder.
StieltjesValue solve_m2c_from(cplx z, cplx warm, const PopulationSpectrum& pop, AspectRatio d,
                              const SolverOptions& opts = {});
// Continuation down a column: etas must be strictly decreasing; one solve per η.
std::vector<StieltjesValue> solve_m2c_column(double E, const std::vector<double>& etas,
                                             const PopulationSpectrum& pop, AspectRatio d,
                                             const SolverOptions& opts = {});

// (1/π) Im m_2c(E + i0⁺), via Richardson extrapolation from η = eta_floor and 2·eta_floor.
double density_at(double E, const PopulationSpectrum& pop, AspectRatio d,
                  double eta_floor = kDensityEtaFloor, const SolverOptions& opts = {});

struct CriticalPoint {
  double edge = 0.0;  // a_k = f(b_k)
  double m = 0.0;     // b_k, with f'(b_k) = 0
};

struct SupportInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SupportAtlas {
  std::vector<SupportInterval> intervals;     // ascending, disjoint
  std::vector<CriticalPoint> critical_points; // descending in edge
  // Set when two intervals closer than kIntervalMergeGap were merged.
  bool merged = false;
  // Set when the lowest interval reaches the hard edge at zero without a critical point.
  bool hard_edge_at_zero = false;
};

SupportAtlas support_edges(const PopulationSpectrum& pop, AspectRatio d);

struct EdgeReport {
  double lambda_r = 0.0;
  double b1 = 0.0;
  double gamma0 = 0.0;
  double margin_sigma1 = 0.0;  // |1 + b1 σ_1|, the gated quantity
  double margin_min = 0.0;     // min_i |1 + b1 σ_i|
  double tau = 0.0;
  bool regular = false;
};

// Soft-edge data. Throws RegularityFailed when |1 + b1 σ_1| < tau.
EdgeReport edge_report(const PopulationSpectrum& pop, AspectRatio d, double tau = kDefaultTau);
// As above but never throws on the regularity gate; `regular` records the outcome.
EdgeReport edge_report_unchecked(const PopulationSpectrum& pop, AspectRatio d,
                                 double tau = kDefaultTau);

// Total continuous mass of ρ_2c above x: ∫_x^∞ ρ_2c. Built once per (pop, d).
class TailMass {
 public:
  TailMass(const PopulationSpectrum& pop, AspectRatio d, double eta_floor = kDensityEtaFloor);

  double operator()(double x) const;
  double total() const noexcept { return total_; }
  const SupportAtlas& atlas() const noexcept { return atlas_; }
  // Largest x with tail(x) = mass, mass in [0, total()].
  double inverse(double mass) const;

 private:
  struct Panel {
    double theta_lo, theta_hi;
    double mass_above;  // mass from theta_hi to π within the interval
    double mass;
  };
  struct Interval {
    SupportInterval range;
    std::vector<Panel> panels;  // ordered by descending theta
    double mass = 0.0;
    double mass_above = 0.0;  // all intervals strictly to the right
  };

  double integrate_theta(const Interval& iv, double t0, double t1) const;
  double theta_of(const Interval& iv, double x) const;
  double x_of(const Interval& iv, double theta) const;

  PopulationSpectrum pop_;
  AspectRatio d_;
  double eta_floor_;
  SupportAtlas atlas_;
  std::vector<Interval> intervals_;  // descending
  double total_ = 0.0;
};

// γ_j = sup{x : ∫_x^∞ ρ_2c > (j-1)/N} for j in [j_first, j_last].
std::vector<double> classical_locations(const PopulationSpectrum& pop, AspectRatio d,
                                        std::size_t N, std::size_t j_first, std::size_t j_last);
std::vector<double> classical_locations(const TailMass& tail, std::size_t N,
                                        std::size_t j_first, std::size_t j_last);

}  // namespace mpedge
