#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpedge/deformed_mp.hpp"
#include "mpedge/distributions.hpp"
#include "mpedge/matrix_lab.hpp"
#include "mpedge/tracy_widom.hpp"

namespace mpedge {

inline constexpr int kMaxStatisticK = 8;
// A run fails when more than this fraction of its trials fail.
inline constexpr double kMaxTrialFailureRate = 1e-3;

enum class Comparison { TwF1, TwoSample };

struct ExperimentConfig {
  CovarianceModel model = CovarianceModel::null(200, 200);
  EntryDistribution dist = EntryDistribution::gaussian();
  std::size_t trials = 1;
  std::uint64_t master_seed = 0;
  int k = 1;  // statistic: λ₁ when 1, the top k otherwise
  Comparison comparison = Comparison::TwF1;
  std::optional<EntryDistribution> other;  // for TwoSample
  // When set, each trial also evaluates Γ_N with these (s, τ).
  std::optional<std::pair<double, double>> event;

  void validate() const;
};

// Schema in docs/config.md.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

struct TrialRecord {
  std::size_t trial_index = 0;
  std::vector<double> lambda_top;
  std::vector<double> rescaled;  // γ₀ N^{2/3} (λ_i - λ_r)
  bool triggered_gamma_event = false;
};

struct EnsembleResult {
  EdgeReport edge;
  std::vector<TrialRecord> records;  // sorted by trial_index
  std::size_t failures = 0;
};

// 0 selects std::thread::hardware_concurrency().
struct RunOptions {
  unsigned threads = 0;
};

double rescale(double lambda, const EdgeReport& edge, std::size_t N);

// Per-trial seed split_seed(master_seed, trial_index). Throws RegularityFailed
// from edge_report, NumericalError when too many trials fail.
EnsembleResult run_edge_ensemble(const ExperimentConfig& cfg, const RunOptions& run = {});

std::vector<double> rescaled_lambda1(const std::vector<TrialRecord>& records);

struct KSReport {
  double ks_stat = 0.0;
  std::size_t n = 0;
  std::size_t n_other = 0;
  double threshold = 1.0;
  bool pass = false;
  // (x, empirical CDF, reference CDF) at the deciles of the sample.
  std::vector<std::array<double, 3>> snapshot;
};

// Sup distance between the empirical CDF and F_β. Needs ≥ 100 values.
KSReport ks_against_tw(std::vector<double> values, TWOrder order, double threshold = 1.0);
KSReport ks_against_tw(const std::vector<TrialRecord>& records, TWOrder order, double threshold = 1.0);
KSReport two_sample_ks(std::vector<double> a, std::vector<double> b, double threshold = 1.0);
KSReport two_sample_ks(const std::vector<TrialRecord>& a, const std::vector<TrialRecord>& b,
                       double threshold = 1.0);

struct ProportionInterval {
  double lo = 0.0;
  double hi = 0.0;
};
// 95% Wilson score interval.
ProportionInterval wilson_interval(std::size_t hits, std::size_t n, double z = 1.959963984540054);

struct TailProbeRow {
  std::size_t N = 0;
  std::size_t M = 0;
  std::size_t trials = 0;
  std::size_t hits = 0;  // λ₁ ≥ s
  double estimate = 0.0;
  ProportionInterval wilson;
  std::size_t triggered = 0;           // Γ_N held
  std::size_t witness_violations = 0;  // Γ_N held but λ₁ < s
};

struct TailProbeReport {
  double s = 0.0;
  double tau = 0.0;
  std::vector<TailProbeRow> rows;
};

// For each N, the model is rescaled to M = N / d rows and cfg.trials matrices are drawn.
// s must exceed λ_r. τ sets the Γ_N event; the rows i ≤ ⌊τM⌋ must have σ_i ≥ τ.
TailProbeReport necessary_probe(const ExperimentConfig& cfg, double s, const std::vector<std::size_t>& N_ladder,
                                double tau = 0.9, const RunOptions& run = {});

struct RigidityTrial {
  double raw_top_gap = 0.0;  // |λ₁ - γ₁|
  double max_normalized = 0.0;
  double median_normalized = 0.0;
};

struct RigidityReport {
  std::size_t N = 0;
  double c1 = 0.0;
  std::vector<double> gammas;              // γ_1 … γ_J over the window γ_j ≥ λ_r - c1
  std::vector<double> median_per_j;        // median over trials of j^{1/3} N^{2/3} |λ_j - γ_j|
  std::vector<RigidityTrial> trials;
  double median_raw_top_gap = 0.0;
  double median_normalized = 0.0;          // median over trials of the per-trial median
  double max_normalized = 0.0;
};

RigidityReport rigidity_check(const ExperimentConfig& cfg, double c1 = 1.0, const RunOptions& run = {});

struct SpectralDomain {
  double E_lo = 0.0, E_hi = 0.0;
  double eta_lo = 0.0, eta_hi = 0.0;
  std::size_t n_E = 1, n_eta = 1;  // log-spaced in η
  void validate() const;
  std::vector<std::complex<double>> grid() const;
};

struct LocalLawPoint {
  std::complex<double> z;
  std::complex<double> m2c;
  double psi = 0.0;
  std::vector<double> averaged;     // per trial: Nη |m₂ - m₂c|
  std::vector<double> entrywise;    // per trial: max over sampled pairs of |G - Π| / Ψ
  std::vector<double> offdiag_ok;   // per trial: fraction of off-diagonal pairs with |G_ab| ≤ allowance·Ψ
};

struct LocalLawReport {
  std::size_t N = 0;
  double eta_floor = 0.0;
  double allowance = 10.0;
  std::vector<LocalLawPoint> points;
};

inline constexpr std::size_t kLocalLawPairs = 200;

// Grid points with η below eta_floor = floor_factor / N are rejected.
LocalLawReport locallaw_scan(const ExperimentConfig& cfg, const SpectralDomain& domain, double allowance = 10.0,
                             double floor_factor = 1.0, const RunOptions& run = {});

struct CutoffReport {
  double epsilon = 0.0;
  double threshold = 0.0;  // N^{1/2 - ε}
  double alpha_N = 0.0;
  double beta_N = 0.0;
  double shift = 0.0;      // β/(1-α)/√N
  double alpha_rate = 0.0; // N^{-2+4ε}
  double beta_rate = 0.0;  // N^{-3/2+3ε}
  bool rates_hold = false;
  std::size_t large_count = 0;
  double expected_large = 0.0;  // M N α
  double reconstruction_error = 0.0;
  double lambda1_original = 0.0;
  double lambda1_small_part = 0.0;
  double gap = 0.0;
  double gap_bound = 0.0;  // N^{-2/3}
  bool gap_ok = false;
};

struct CutoffParts {
  Eigen::MatrixXd small;  // (q + b)/√N on entries with |q| ≤ T, zero elsewhere
  Eigen::MatrixXd large;  // (q + b)/√N on entries with |q| > T, zero elsewhere
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> large_mask;
  CutoffReport report;
};

// X = small + large - shift entrywise.
CutoffParts cutoff_decompose(const SampleMatrix& X, double epsilon);
// λ₁ of D X against λ₁ of D (small - shift) with the large entries dropped.
CutoffReport cutoff_verify(const SampleMatrix& X, const CovarianceModel& model, double epsilon);

struct CutoffExperiment {
  std::vector<CutoffReport> trials;
  std::size_t large_total = 0;
  double expected_total = 0.0;
  double sigma_total = 0.0;
  bool count_within_3sigma = false;
  double gap_ok_fraction = 0.0;
  double max_reconstruction_error = 0.0;
};

CutoffExperiment run_cutoff_experiment(const ExperimentConfig& cfg, double epsilon, const RunOptions& run = {});

}  // namespace mpedge
