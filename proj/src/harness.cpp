#include "mpedge/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "mpedge/errors.hpp"
#include "mpedge/report_io.hpp"
#include "mpedge/rng.hpp"

namespace mpedge {

namespace {

// Runs fn(i) for i in [0, n). Work is claimed through an atomic counter and
// every result lands in a slot indexed by i, so scheduling never shows in the output.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

void check_failures(std::size_t failures, std::size_t trials, const char* what) {
  if (static_cast<double>(failures) > kMaxTrialFailureRate * static_cast<double>(trials))
    throw NumericalError(std::string(what) + ": " + std::to_string(failures) + " of " + std::to_string(trials) +
                         " trials failed");
}

double ecdf_at(const std::vector<double>& sorted, double x) {
  return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) /
         static_cast<double>(sorted.size());
}

CovarianceModel model_for_N(const CovarianceModel& base, std::size_t N) {
  const double d = base.d().value();
  const auto M = static_cast<std::size_t>(std::llround(static_cast<double>(N) / d));
  if (M == 0 || std::abs(static_cast<double>(M) * d - static_cast<double>(N)) > 1e-9 * static_cast<double>(N))
    throw ValidationError("N = " + std::to_string(N) + " is not compatible with d = " + format_double(d));
  return {base.pop().resized(M), AspectRatio(N, M)};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (trials < 1) throw ValidationError("trials must be >= 1");
  if (k < 1 || k > kMaxStatisticK) throw ValidationError("k must lie in [1, 8]");
  if (comparison == Comparison::TwoSample && !other)
    throw ValidationError("two-sample comparison needs a second distribution");
  if (event && !(event->first > 0.0 && event->second > 0.0 && event->second < 1.0))
    throw ValidationError("event needs s > 0 and 0 < tau < 1");
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig cfg;
    const auto M = j.at("M").get<std::size_t>();
    const auto N = j.at("N").get<std::size_t>();
    const double tau = j.value("tau", kDefaultTau);
    PopulationSpectrum pop = PopulationSpectrum::identity(M);
    if (j.contains("population")) {
      const auto& p = j.at("population");
      pop = p.is_string() ? parse_population(p.get<std::string>(), M, tau) : population_from_json(p, M, tau);
    }
    cfg.model = CovarianceModel(std::move(pop), AspectRatio(N, M));
    cfg.dist = EntryDistribution::parse(j.value("dist", std::string("gaussian")));
    cfg.trials = j.value("trials", std::size_t{1});
    cfg.master_seed = j.at("seed").get<std::uint64_t>();
    cfg.k = j.value("k", 1);
    const auto cmp = j.value("comparison", std::string("tw1"));
    if (cmp == "tw1") {
      cfg.comparison = Comparison::TwF1;
    } else if (cmp == "two_sample") {
      cfg.comparison = Comparison::TwoSample;
    } else {
      throw ValidationError("comparison must be tw1 or two_sample");
    }
    if (j.contains("other")) cfg.other = EntryDistribution::parse(j.at("other").get<std::string>());
    if (j.contains("event")) cfg.event = std::pair{j.at("event").at("s").get<double>(), j.at("event").at("tau").get<double>()};
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("experiment config: ") + e.what());
  }
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["M"] = cfg.model.M();
  j["N"] = cfg.model.N();
  j["tau"] = cfg.model.pop().tau();
  j["population"] = population_to_json(cfg.model.pop());
  j["dist"] = cfg.dist.name();
  j["trials"] = cfg.trials;
  j["seed"] = cfg.master_seed;
  j["k"] = cfg.k;
  j["comparison"] = cfg.comparison == Comparison::TwF1 ? "tw1" : "two_sample";
  if (cfg.other) j["other"] = cfg.other->name();
  if (cfg.event) j["event"] = {{"s", cfg.event->first}, {"tau", cfg.event->second}};
  return j;
}

double rescale(double lambda, const EdgeReport& edge, std::size_t N) {
  return edge.gamma0 * std::pow(static_cast<double>(N), 2.0 / 3.0) * (lambda - edge.lambda_r);
}

EnsembleResult run_edge_ensemble(const ExperimentConfig& cfg, const RunOptions& run) {
  cfg.validate();
  EnsembleResult out;
  const auto& model = cfg.model;
  out.edge = edge_report(model.pop(), model.d(), model.pop().tau());
  std::vector<std::optional<TrialRecord>> slots(cfg.trials);
  parallel_for(cfg.trials, run.threads, [&](std::size_t t) {
    try {
      const auto X = sample_entries(cfg.dist, model.M(), model.N(), split_seed(cfg.master_seed, t));
      TrialRecord r;
      r.trial_index = t;
      r.lambda_top = eigens(model, X, EigenMethod::topk(cfg.k)).eigenvalues;
      for (double l : r.lambda_top) r.rescaled.push_back(rescale(l, out.edge, model.N()));
      if (cfg.event) r.triggered_gamma_event = largest_entry_event(X, model, cfg.event->first, cfg.event->second).triggered;
      slots[t] = std::move(r);
    } catch (const NumericalError&) {
    }
  });
  for (auto& s : slots) {
    if (s) {
      out.records.push_back(std::move(*s));
    } else {
      ++out.failures;
    }
  }
  check_failures(out.failures, cfg.trials, "edge ensemble");
  return out;
}

std::vector<double> rescaled_lambda1(const std::vector<TrialRecord>& records) {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(r.rescaled.at(0));
  return v;
}

KSReport ks_against_tw(std::vector<double> values, TWOrder order, double threshold) {
  if (values.size() < 100) throw ValidationError("ks_against_tw needs at least 100 values");
  std::sort(values.begin(), values.end());
  const auto& table = TwTable::shared(order);
  const double n = static_cast<double>(values.size());
  KSReport r;
  r.n = values.size();
  r.threshold = threshold;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double F = table.cdf(values[i]);
    r.ks_stat = std::max({r.ks_stat, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  r.ks_stat = std::clamp(r.ks_stat, 0.0, 1.0);
  r.pass = r.ks_stat < threshold;
  for (int q = 0; q <= 10; ++q) {
    const double x = values[static_cast<std::size_t>(std::lround(q / 10.0 * (n - 1.0)))];
    r.snapshot.push_back({x, ecdf_at(values, x), table.cdf(x)});
  }
  return r;
}

KSReport ks_against_tw(const std::vector<TrialRecord>& records, TWOrder order, double threshold) {
  return ks_against_tw(rescaled_lambda1(records), order, threshold);
}

KSReport two_sample_ks(std::vector<double> a, std::vector<double> b, double threshold) {
  if (a.size() < 100 || b.size() < 100) throw ValidationError("two_sample_ks needs at least 100 values per side");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  KSReport r;
  r.n = a.size();
  r.n_other = b.size();
  r.threshold = threshold;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    r.ks_stat = std::max(r.ks_stat, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  r.pass = r.ks_stat < threshold;
  for (int q = 0; q <= 10; ++q) {
    const double x = a[static_cast<std::size_t>(std::lround(q / 10.0 * (na - 1.0)))];
    r.snapshot.push_back({x, ecdf_at(a, x), ecdf_at(b, x)});
  }
  return r;
}

KSReport two_sample_ks(const std::vector<TrialRecord>& a, const std::vector<TrialRecord>& b, double threshold) {
  return two_sample_ks(rescaled_lambda1(a), rescaled_lambda1(b), threshold);
}

ProportionInterval wilson_interval(std::size_t hits, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n), p = static_cast<double>(hits) / nn, z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The bounds are exact at the extremes; the closed form leaves rounding residue there.
  return {hits == 0 ? 0.0 : std::max(0.0, center - half), hits == n ? 1.0 : std::min(1.0, center + half)};
}

TailProbeReport necessary_probe(const ExperimentConfig& cfg, double s, const std::vector<std::size_t>& N_ladder,
                                double tau, const RunOptions& run) {
  cfg.validate();
  const auto edge = edge_report(cfg.model.pop(), cfg.model.d(), cfg.model.pop().tau());
  if (!(s > edge.lambda_r)) throw ValidationError("necessary_probe needs s > lambda_r");
  if (N_ladder.empty()) throw ValidationError("necessary_probe needs a non-empty N ladder");
  TailProbeReport rep;
  rep.s = s;
  rep.tau = tau;
  for (std::size_t N : N_ladder) {
    const auto model = model_for_N(cfg.model, N);
    struct Outcome {
      bool ok = false, hit = false, triggered = false;
    };
    std::vector<Outcome> outcomes(cfg.trials);
    const std::uint64_t rung = split_seed(cfg.master_seed, N);
    parallel_for(cfg.trials, run.threads, [&](std::size_t t) {
      try {
        const auto X = sample_entries(cfg.dist, model.M(), N, split_seed(rung, t));
        const auto ev = largest_entry_event(X, model, s, tau);
        const double l1 = eigens(model, X, EigenMethod::topk(1)).eigenvalues.at(0);
        outcomes[t] = {true, l1 >= s, ev.triggered};
      } catch (const NumericalError&) {
      }
    });
    TailProbeRow row;
    row.N = N;
    row.M = model.M();
    std::size_t failures = 0;
    for (const auto& o : outcomes) {
      if (!o.ok) {
        ++failures;
        continue;
      }
      ++row.trials;
      row.hits += o.hit;
      row.triggered += o.triggered;
      row.witness_violations += o.triggered && !o.hit;
    }
    check_failures(failures, cfg.trials, "necessary probe");
    row.estimate = static_cast<double>(row.hits) / static_cast<double>(row.trials);
    row.wilson = wilson_interval(row.hits, row.trials);
    rep.rows.push_back(row);
  }
  return rep;
}

RigidityReport rigidity_check(const ExperimentConfig& cfg, double c1, const RunOptions& run) {
  cfg.validate();
  if (!(c1 > 0.0)) throw ValidationError("rigidity_check needs c1 > 0");
  const auto& model = cfg.model;
  const auto edge = edge_report(model.pop(), model.d(), model.pop().tau());
  const TailMass tail(model.pop(), model.d());
  const std::size_t N = model.N();
  const std::size_t r = std::min(model.M(), N);
  const double floor_x = edge.lambda_r - c1;
  const double mass = floor_x <= tail.atlas().intervals.front().lo ? tail.total() : tail(floor_x);
  const auto J = std::min<std::size_t>(r, static_cast<std::size_t>(std::floor(mass * static_cast<double>(N))) + 1);

  RigidityReport rep;
  rep.N = N;
  rep.c1 = c1;
  rep.gammas = classical_locations(tail, N, 1, J);
  while (!rep.gammas.empty() && rep.gammas.back() < floor_x) rep.gammas.pop_back();
  const std::size_t W = rep.gammas.size();
  const double n23 = std::pow(static_cast<double>(N), 2.0 / 3.0);

  std::vector<std::vector<double>> norm(cfg.trials);
  std::vector<double> top_gap(cfg.trials, std::nan(""));
  parallel_for(cfg.trials, run.threads, [&](std::size_t t) {
    try {
      const auto X = sample_entries(cfg.dist, model.M(), N, split_seed(cfg.master_seed, t));
      const auto lam = eigens(model, X, EigenMethod::full()).eigenvalues;
      std::vector<double> g(W);
      for (std::size_t j = 0; j < W; ++j)
        g[j] = std::cbrt(static_cast<double>(j + 1)) * n23 * std::abs(lam[j] - rep.gammas[j]);
      top_gap[t] = std::abs(lam[0] - rep.gammas[0]);
      norm[t] = std::move(g);
    } catch (const NumericalError&) {
    }
  });
  std::size_t failures = 0;
  std::vector<double> raw, medians;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    if (norm[t].empty()) {
      ++failures;
      continue;
    }
    RigidityTrial tr;
    tr.raw_top_gap = top_gap[t];
    tr.max_normalized = *std::max_element(norm[t].begin(), norm[t].end());
    tr.median_normalized = median(norm[t]);
    rep.max_normalized = std::max(rep.max_normalized, tr.max_normalized);
    raw.push_back(tr.raw_top_gap);
    medians.push_back(tr.median_normalized);
    rep.trials.push_back(tr);
  }
  check_failures(failures, cfg.trials, "rigidity");
  for (std::size_t j = 0; j < W; ++j) {
    std::vector<double> col;
    for (const auto& v : norm)
      if (!v.empty()) col.push_back(v[j]);
    rep.median_per_j.push_back(median(std::move(col)));
  }
  rep.median_raw_top_gap = median(raw);
  rep.median_normalized = median(medians);
  return rep;
}

void SpectralDomain::validate() const {
  if (!(E_lo <= E_hi) || !(eta_lo > 0.0 && eta_lo <= eta_hi && eta_hi <= 1.0) || n_E == 0 || n_eta == 0)
    throw ValidationError("spectral domain needs E_lo <= E_hi and 0 < eta_lo <= eta_hi <= 1");
  if ((n_E > 1 && !(E_lo < E_hi)) || (n_eta > 1 && !(eta_lo < eta_hi)))
    throw ValidationError("spectral domain with several grid points needs a non-degenerate range");
}

std::vector<std::complex<double>> SpectralDomain::grid() const {
  validate();
  std::vector<std::complex<double>> out;
  for (std::size_t a = 0; a < n_E; ++a) {
    const double E = n_E == 1 ? E_lo : E_lo + (E_hi - E_lo) * static_cast<double>(a) / static_cast<double>(n_E - 1);
    for (std::size_t b = 0; b < n_eta; ++b) {
      const double eta = n_eta == 1 ? eta_lo
                                    : eta_lo * std::pow(eta_hi / eta_lo, static_cast<double>(b) /
                                                                             static_cast<double>(n_eta - 1));
      out.emplace_back(E, eta);
    }
  }
  return out;
}

LocalLawReport locallaw_scan(const ExperimentConfig& cfg, const SpectralDomain& domain, double allowance,
                             double floor_factor, const RunOptions& run) {
  cfg.validate();
  const auto& model = cfg.model;
  const std::size_t M = model.M(), N = model.N();
  LocalLawReport rep;
  rep.N = N;
  rep.allowance = allowance;
  rep.eta_floor = floor_factor / static_cast<double>(N);
  const auto zs = domain.grid();
  for (const auto z : zs) {
    if (z.imag() < rep.eta_floor)
      throw ValidationError("locallaw grid point below the eta floor " + format_double(rep.eta_floor));
    LocalLawPoint p;
    p.z = z;
    p.m2c = solve_m2c(z, model.pop(), model.d()).m2c;
    const double neta = static_cast<double>(N) * z.imag();
    p.psi = std::sqrt(p.m2c.imag() / neta) + 1.0 / neta;
    p.averaged.assign(cfg.trials, 0.0);
    p.entrywise.assign(cfg.trials, 0.0);
    p.offdiag_ok.assign(cfg.trials, 0.0);
    rep.points.push_back(std::move(p));
  }
  const auto sig = model.pop().sigmas();
  std::vector<char> ok(cfg.trials, 0);
  parallel_for(cfg.trials, run.threads, [&](std::size_t t) {
    try {
      const std::uint64_t seed = split_seed(cfg.master_seed, t);
      const auto X = sample_entries(cfg.dist, M, N, seed);
      const GreenFunction g(model, X);
      CounterRng pick(split_seed(seed, 0x5041495253ULL));
      std::vector<std::pair<std::size_t, std::size_t>> pairs(kLocalLawPairs);
      for (auto& [a, b] : pairs) {
        a = static_cast<std::size_t>(pick.uniform() * static_cast<double>(M + N));
        b = static_cast<std::size_t>(pick.uniform() * static_cast<double>(M + N));
      }
      for (auto& p : rep.points) {
        const double neta = static_cast<double>(N) * p.z.imag();
        p.averaged[t] = neta * std::abs(g.m2(p.z) - p.m2c);
        double worst = 0.0;
        std::size_t off = 0, off_ok = 0;
        for (const auto& [a, b] : pairs) {
          const cplx G = g.entry(a, b, p.z);
          cplx Pi = 0.0;
          if (a == b) Pi = a < M ? -1.0 / (1.0 + p.m2c * sig[a]) : p.m2c;
          worst = std::max(worst, std::abs(G - Pi) / p.psi);
          if (a != b) {
            ++off;
            off_ok += std::abs(G) <= allowance * p.psi;
          }
        }
        p.entrywise[t] = worst;
        p.offdiag_ok[t] = off ? static_cast<double>(off_ok) / static_cast<double>(off) : 1.0;
      }
      ok[t] = 1;
    } catch (const NumericalError&) {
    }
  });
  check_failures(static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 0)), cfg.trials, "local law");
  return rep;
}

CutoffParts cutoff_decompose(const SampleMatrix& X, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ValidationError("cutoff needs 0 < epsilon < 1/2");
  const double N = static_cast<double>(X.N);
  const double sqrtN = std::sqrt(N);
  CutoffParts parts;
  auto& rep = parts.report;
  rep.epsilon = epsilon;
  rep.threshold = std::pow(N, 0.5 - epsilon);
  const auto tm = X.dist.tail_moments(rep.threshold);
  rep.alpha_N = tm.alpha;
  rep.beta_N = tm.beta;
  const double b = tm.alpha < 1.0 ? tm.beta / (1.0 - tm.alpha) : 0.0;
  rep.shift = b / sqrtN;
  rep.alpha_rate = std::pow(N, -2.0 + 4.0 * epsilon);
  rep.beta_rate = std::pow(N, -1.5 + 3.0 * epsilon);
  rep.rates_hold = rep.alpha_N <= rep.alpha_rate && std::abs(rep.beta_N) <= rep.beta_rate;
  rep.expected_large = static_cast<double>(X.M) * N * rep.alpha_N;

  const auto rows = X.x.rows(), cols = X.x.cols();
  parts.small = Eigen::MatrixXd::Zero(rows, cols);
  parts.large = Eigen::MatrixXd::Zero(rows, cols);
  parts.large_mask.setConstant(rows, cols, false);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double x = X.x(i, j);
      const double shifted = x + rep.shift;
      if (std::abs(x * sqrtN) > rep.threshold) {
        parts.large(i, j) = shifted;
        parts.large_mask(i, j) = true;
        ++rep.large_count;
      } else {
        parts.small(i, j) = shifted;
      }
    }
  }
  rep.reconstruction_error = ((parts.small + parts.large - X.x).array() - rep.shift).abs().maxCoeff();
  return parts;
}

CutoffReport cutoff_verify(const SampleMatrix& X, const CovarianceModel& model, double epsilon) {
  model.check(X);
  auto parts = cutoff_decompose(X, epsilon);
  auto& rep = parts.report;
  const Eigen::MatrixXd Y = model.apply(X);
  const Eigen::MatrixXd Ys = model.diag().asDiagonal() * (parts.small.array() - rep.shift).matrix();
  rep.lambda1_original = eigens_of_product(Y, EigenMethod::topk(1)).eigenvalues.at(0);
  rep.lambda1_small_part = eigens_of_product(Ys, EigenMethod::topk(1)).eigenvalues.at(0);
  rep.gap = std::abs(rep.lambda1_original - rep.lambda1_small_part);
  rep.gap_bound = std::pow(static_cast<double>(X.N), -2.0 / 3.0);
  rep.gap_ok = rep.gap <= rep.gap_bound;
  return rep;
}

CutoffExperiment run_cutoff_experiment(const ExperimentConfig& cfg, double epsilon, const RunOptions& run) {
  cfg.validate();
  const auto& model = cfg.model;
  std::vector<std::optional<CutoffReport>> slots(cfg.trials);
  parallel_for(cfg.trials, run.threads, [&](std::size_t t) {
    try {
      const auto X = sample_entries(cfg.dist, model.M(), model.N(), split_seed(cfg.master_seed, t));
      slots[t] = cutoff_verify(X, model, epsilon);
    } catch (const QuadratureFailure&) {
      throw;
    } catch (const NumericalError&) {
    }
  });
  CutoffExperiment out;
  std::size_t failures = 0, gap_ok = 0;
  for (auto& s : slots) {
    if (!s) {
      ++failures;
      continue;
    }
    out.large_total += s->large_count;
    out.expected_total += s->expected_large;
    gap_ok += s->gap_ok;
    out.max_reconstruction_error = std::max(out.max_reconstruction_error, s->reconstruction_error);
    out.trials.push_back(*s);
  }
  check_failures(failures, cfg.trials, "cutoff");
  const double alpha = out.trials.empty() ? 0.0 : out.trials.front().alpha_N;
  out.sigma_total = std::sqrt(out.expected_total * (1.0 - alpha));
  out.count_within_3sigma =
      std::abs(static_cast<double>(out.large_total) - out.expected_total) <= 3.0 * out.sigma_total;
  out.gap_ok_fraction = static_cast<double>(gap_ok) / static_cast<double>(out.trials.size());
  return out;
}

}  // namespace mpedge
