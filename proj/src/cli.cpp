#include "mpedge/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mpedge/deformed_mp.hpp"
#include "mpedge/errors.hpp"
#include "mpedge/harness.hpp"
#include "mpedge/report_io.hpp"
#include "mpedge/tracy_widom.hpp"

namespace mpedge {

namespace {

using nlohmann::json;

constexpr const char* kPopHelp =
    "Population spectrum: null (sigma = 1) | two:sigma_a,sigma_b,w (weight w on sigma_a) | FILE.json "
    "holding {\"sigmas\": [M values]} or {\"atoms\": [{\"sigma\": s, \"weight\": w}, ...]}";
constexpr const char* kDistHelp = "Entry distribution: gaussian | rademacher | heavy | pareto:a (a > 2) | tabulated:FILE";
constexpr const char* kCsvFooter =
    "Output: with --out DIR the command writes trials.csv (columns trial,lambda1,rescaled,triggered) and "
    "report.json; without it the primary result goes to stdout. Numbers use '.' and lines end in '\\n'.";
constexpr const char* kJsonFooter =
    "Output: a JSON report, written to DIR/report.json with --out DIR and to stdout otherwise.";
constexpr const char* kConfigHelp =
    "Experiment config JSON (keys M, N, population, tau, dist, trials, seed, k, comparison, other, event; "
    "see docs/config.md). Excludes the model, distribution, trial and seed flags";

struct ModelFlags {
  std::string pop = "null";
  std::size_t M = 0;
  std::size_t N = 0;
  double d = 0.0;
  double tau = kDefaultTau;
  std::vector<CLI::Option*> opts;
};

struct StochasticFlags {
  ModelFlags model;
  std::string dist = "gaussian";
  std::size_t trials = 1;
  std::optional<std::uint64_t> seed;
  std::string config;
};

struct Common {
  std::string out_dir;
  unsigned threads = 0;
  bool timing = false;
};

void add_model_flags(CLI::App* c, ModelFlags& f) {
  f.opts.push_back(c->add_option("--pop", f.pop, kPopHelp)->capture_default_str());
  f.opts.push_back(c->add_option("--M", f.M, "Number of rows M (population size)"));
  f.opts.push_back(c->add_option("--N", f.N, "Number of columns N"));
  f.opts.push_back(c->add_option("--d", f.d, "Aspect ratio d = N/M, used when --N is absent (d*M must be an integer)"));
  f.opts.push_back(c->add_option("--tau", f.tau, "Threshold tau of the population bounds and regularity gate")
                       ->capture_default_str());
}

void add_stochastic_flags(CLI::App* c, StochasticFlags& f, Common& common) {
  add_model_flags(c, f.model);
  std::vector<CLI::Option*> cfg_excl = f.model.opts;
  cfg_excl.push_back(c->add_option("--dist", f.dist, kDistHelp)->capture_default_str());
  cfg_excl.push_back(c->add_option("--trials", f.trials, "Number of independent trials")->capture_default_str());
  cfg_excl.push_back(c->add_option("--seed", f.seed, "Master seed (required unless --config supplies one); trial t uses "
                                                     "split_seed(seed, t)"));
  auto* cfg = c->add_option("--config", f.config, kConfigHelp)->check(CLI::ExistingFile);
  for (auto* o : cfg_excl) cfg->excludes(o);
  c->add_option("--threads", common.threads, "Worker threads (0 = all cores); results do not depend on it")
      ->capture_default_str();
}

void add_output_flags(CLI::App* c, Common& common) {
  c->add_option("--out", common.out_dir, "Output directory (created if missing)");
  c->add_flag("--timing", common.timing, "Add wall-clock seconds to the JSON report (breaks byte-identical reruns)");
}

CovarianceModel build_model(const ModelFlags& f) {
  if (f.M == 0) throw ValidationError("--M is required and must be >= 1");
  std::optional<AspectRatio> ar;
  if (f.N > 0) {
    ar.emplace(f.N, f.M);
    if (f.d > 0.0 && std::abs(ar->value() - f.d) > 1e-12 * f.d)
      throw ValidationError("--N and --d disagree");
  } else if (f.d > 0.0) {
    ar = AspectRatio::from_ratio(f.M, f.d);
  } else {
    throw ValidationError("one of --N or --d is required");
  }
  return {parse_population(f.pop, f.M, f.tau), *ar};
}

ExperimentConfig build_config(const StochasticFlags& f) {
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ValidationError("config file: " + std::string(e.what()));
    }
    if (!j.contains("seed")) throw ValidationError("config file must supply a seed");
    return config_from_json(j);
  }
  if (!f.seed) throw ValidationError("--seed is required for stochastic commands");
  ExperimentConfig cfg;
  cfg.model = build_model(f.model);
  cfg.dist = EntryDistribution::parse(f.dist);
  cfg.trials = f.trials;
  cfg.master_seed = *f.seed;
  cfg.validate();
  return cfg;
}

class Emitter {
 public:
  Emitter(const Common& c, std::ostream& out) : c_(c), out_(out) {
    if (!c_.out_dir.empty()) std::filesystem::create_directories(c_.out_dir);
  }
  bool to_dir() const { return !c_.out_dir.empty(); }
  // Files land in the output directory; only the primary result reaches stdout.
  void file(const std::string& name, const std::string& content, bool primary) {
    if (to_dir()) {
      write_file((std::filesystem::path(c_.out_dir) / name).string(), content);
    } else if (primary) {
      out_ << content;
    }
  }
  void report(json j, double seconds, bool primary = true) {
    if (c_.timing) j["timing_seconds"] = seconds;
    file("report.json", j.dump(2) + "\n", primary);
  }

 private:
  const Common& c_;
  std::ostream& out_;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json model_json(const CovarianceModel& m) {
  return {{"M", m.M()}, {"N", m.N()}, {"d", m.d().value()}, {"population", population_to_json(m.pop())}};
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deformed Marchenko-Pastur edge toolkit and Tracy-Widom universality harness", "mpedge"};
  app.require_subcommand(1, 1);
  app.footer("Exit codes: 0 success, 2 invalid input or usage, 3 numerical failure.");
  Common common;
  std::function<void()> action;

  // edge
  ModelFlags edge_f;
  auto* edge = app.add_subcommand("edge", "Soft edge lambda_r, b1, gamma0, regularity margin and the support atlas");
  add_model_flags(edge, edge_f);
  add_output_flags(edge, common);
  edge->footer(kJsonFooter);
  edge->callback([&] {
    action = [&] {
      Stopwatch sw;
      const auto model = build_model(edge_f);
      const auto rep = edge_report(model.pop(), model.d(), edge_f.tau);
      json j = to_json(rep);
      j["model"] = model_json(model);
      j["atlas"] = to_json(support_edges(model.pop(), model.d()));
      Emitter(common, out).report(j, sw.seconds());
    };
  });

  // density
  ModelFlags dens_f;
  double dens_lo = 0.0, dens_hi = -1.0, dens_floor = kDensityEtaFloor;
  std::size_t dens_points = 200;
  auto* dens = app.add_subcommand("density", "Density of the deformed Marchenko-Pastur law on a uniform grid");
  add_model_flags(dens, dens_f);
  dens->add_option("--E-lo", dens_lo, "Left end of the grid")->capture_default_str();
  dens->add_option("--E-hi", dens_hi, "Right end of the grid (default 1.2 lambda_r)");
  dens->add_option("--points", dens_points, "Number of grid points")->capture_default_str()->check(CLI::Range(2, 1000000));
  dens->add_option("--eta-floor", dens_floor, "Smallest eta used by the extrapolation")->capture_default_str();
  add_output_flags(dens, common);
  dens->footer("Output: CSV with columns E,rho (DIR/density.csv with --out DIR, stdout otherwise).");
  dens->callback([&] {
    action = [&] {
      const auto model = build_model(dens_f);
      double hi = dens_hi;
      if (hi < 0.0) hi = 1.2 * edge_report_unchecked(model.pop(), model.d()).lambda_r;
      if (!(hi > dens_lo)) throw ValidationError("--E-hi must exceed --E-lo");
      std::string csv = "E,rho\n";
      for (std::size_t i = 0; i < dens_points; ++i) {
        const double E = dens_lo + (hi - dens_lo) * static_cast<double>(i) / static_cast<double>(dens_points - 1);
        csv += format_double(E) + "," + format_double(E > 0.0 ? density_at(E, model.pop(), model.d(), dens_floor) : 0.0) + "\n";
      }
      Emitter(common, out).file("density.csv", csv, true);
    };
  });

  // tw
  int tw_order_flag = 1;
  std::vector<double> tw_s;
  std::optional<double> tw_p;
  int tw_nodes = kTwNodes;
  auto* tw = app.add_subcommand("tw", "Tracy-Widom CDF F_beta(s) or quantile");
  tw->add_option("--order", tw_order_flag, "1 for F1 (GOE), 2 for F2 (GUE)")->capture_default_str();
  auto* tw_s_opt = tw->add_option("--s", tw_s, "Evaluation points (repeatable)");
  auto* tw_p_opt = tw->add_option("--p", tw_p, "Probability in (0,1); prints the quantile instead");
  tw_s_opt->excludes(tw_p_opt);
  tw->add_option("--nodes", tw_nodes, "Gauss-Legendre nodes")->capture_default_str();
  tw->footer("Output: one value per line on stdout, shortest round-trip decimal form.");
  tw->callback([&] {
    action = [&] {
      const auto order = tw_order(tw_order_flag);
      TwOptions opts;
      opts.n_nodes = tw_nodes;
      if (tw_p) {
        out << format_double(tw_quantile(*tw_p, order, opts)) << "\n";
        return;
      }
      if (tw_s.empty()) throw ValidationError("tw needs --s or --p");
      for (double s : tw_s) out << format_double(tw_cdf(s, order, opts)) << "\n";
    };
  });

  // tw-table
  double tt_lo = -8.0, tt_hi = 4.0, tt_step = 0.1;
  int tt_nodes = kTwNodes;
  auto* tt = app.add_subcommand("tw-table", "Tabulate F1 and F2 on a uniform grid");
  tt->add_option("--lo", tt_lo, "First grid point")->capture_default_str();
  tt->add_option("--hi", tt_hi, "Last grid point")->capture_default_str();
  tt->add_option("--step", tt_step, "Grid step")->capture_default_str();
  tt->add_option("--nodes", tt_nodes, "Gauss-Legendre nodes")->capture_default_str();
  add_output_flags(tt, common);
  tt->footer("Output: CSV with columns s,F1,F2 (DIR/tw_table.csv with --out DIR, stdout otherwise).");
  tt->callback([&] {
    action = [&] {
      if (!(tt_step > 0.0) || !(tt_hi >= tt_lo)) throw ValidationError("tw-table needs lo <= hi and step > 0");
      TwOptions opts;
      opts.n_nodes = tt_nodes;
      std::string csv = "s,F1,F2\n";
      const auto n = static_cast<std::size_t>(std::floor((tt_hi - tt_lo) / tt_step + 1e-9)) + 1;
      for (std::size_t i = 0; i < n; ++i) {
        const double s = tt_lo + tt_step * static_cast<double>(i);
        csv += format_double(s) + "," + format_double(tw_cdf(s, TWOrder::GOE, opts)) + "," +
               format_double(tw_cdf(s, TWOrder::GUE, opts)) + "\n";
      }
      Emitter(common, out).file("tw_table.csv", csv, true);
    };
  });

  // simulate
  StochasticFlags sim_f;
  int sim_k = 1;
  auto* sim = app.add_subcommand("simulate", "Run an edge ensemble and record the top eigenvalues per trial");
  add_stochastic_flags(sim, sim_f, common);
  sim->add_option("--k", sim_k, "Number of top eigenvalues per trial (<= 8)")->capture_default_str();
  add_output_flags(sim, common);
  sim->footer(kCsvFooter);
  sim->callback([&] {
    action = [&] {
      Stopwatch sw;
      auto cfg = build_config(sim_f);
      if (sim_f.config.empty()) cfg.k = sim_k;
      cfg.validate();
      const auto res = run_edge_ensemble(cfg, {common.threads});
      Emitter em(common, out);
      em.file("trials.csv", records_csv(res.records), true);
      json j = {{"config", config_to_json(cfg)}, {"edge", to_json(res.edge)}, {"failures", res.failures}};
      if (res.records.size() >= 100) j["ks_tw1"] = to_json(ks_against_tw(res.records, TWOrder::GOE));
      em.report(j, sw.seconds(), false);
    };
  });

  // universality
  StochasticFlags uni_f;
  std::string uni_other;
  double uni_threshold = 0.05;
  auto* uni = app.add_subcommand("universality",
                                 "KS test of rescaled lambda_1 against F1, or two-sample against a second distribution");
  add_stochastic_flags(uni, uni_f, common);
  uni->add_option("--other", uni_other, "Second distribution for a two-sample test; its trials use seed split_seed(seed, 1)");
  uni->add_option("--threshold", uni_threshold, "Pass threshold for the KS statistic")->capture_default_str();
  add_output_flags(uni, common);
  uni->footer(std::string(kJsonFooter) + " With --out DIR the per-trial CSVs trials.csv and other_trials.csv are written too.");
  uni->callback([&] {
    action = [&] {
      Stopwatch sw;
      auto cfg = build_config(uni_f);
      if (!uni_other.empty()) {
        cfg.comparison = Comparison::TwoSample;
        cfg.other = EntryDistribution::parse(uni_other);
      }
      cfg.validate();
      const auto a = run_edge_ensemble(cfg, {common.threads});
      Emitter em(common, out);
      em.file("trials.csv", records_csv(a.records), false);
      json j = {{"config", config_to_json(cfg)}, {"edge", to_json(a.edge)}, {"failures", a.failures}};
      if (cfg.comparison == Comparison::TwoSample) {
        auto cfg_b = cfg;
        cfg_b.dist = *cfg.other;
        cfg_b.master_seed = split_seed(cfg.master_seed, 1);
        const auto b = run_edge_ensemble(cfg_b, {common.threads});
        em.file("other_trials.csv", records_csv(b.records), false);
        j["failures_other"] = b.failures;
        j["ks"] = to_json(two_sample_ks(a.records, b.records, uni_threshold));
      } else {
        j["ks"] = to_json(ks_against_tw(a.records, TWOrder::GOE, uni_threshold));
      }
      em.report(j, sw.seconds());
    };
  });

  // probe-tail
  StochasticFlags probe_f;
  std::vector<std::size_t> probe_ladder{100, 200, 400};
  std::optional<double> probe_s;
  double probe_tau = 0.9;
  auto* probe = app.add_subcommand("probe-tail", "Estimate P(lambda_1 >= s) along a ladder of N with Wilson intervals");
  add_stochastic_flags(probe, probe_f, common);
  probe->add_option("--ladder", probe_ladder, "Values of N, comma separated; M = N/d")->delimiter(',')->capture_default_str();
  probe->add_option("--s", probe_s, "Level s (default 2 lambda_r); must exceed lambda_r");
  probe->add_option("--event-tau", probe_tau, "tau of the single-large-entry event (rows i <= tau M, threshold sqrt(s/tau))")
      ->capture_default_str();
  add_output_flags(probe, common);
  probe->footer(kJsonFooter);
  probe->callback([&] {
    action = [&] {
      Stopwatch sw;
      const auto cfg = build_config(probe_f);
      const auto edge = edge_report(cfg.model.pop(), cfg.model.d(), cfg.model.pop().tau());
      const double s = probe_s.value_or(2.0 * edge.lambda_r);
      const auto rep = necessary_probe(cfg, s, probe_ladder, probe_tau, {common.threads});
      Emitter(common, out).report({{"config", config_to_json(cfg)}, {"edge", to_json(edge)}, {"probe", to_json(rep)}},
                                  sw.seconds());
    };
  });

  // rigidity
  StochasticFlags rig_f;
  double rig_c1 = 1.0;
  auto* rig = app.add_subcommand("rigidity", "Normalized gaps j^(1/3) N^(2/3) |lambda_j - gamma_j| over the edge window");
  add_stochastic_flags(rig, rig_f, common);
  rig->add_option("--c1", rig_c1, "Window depth: indices with gamma_j >= lambda_r - c1")->capture_default_str();
  add_output_flags(rig, common);
  rig->footer(kJsonFooter);
  rig->callback([&] {
    action = [&] {
      Stopwatch sw;
      const auto cfg = build_config(rig_f);
      const auto rep = rigidity_check(cfg, rig_c1, {common.threads});
      Emitter(common, out).report({{"config", config_to_json(cfg)}, {"rigidity", to_json(rep)}}, sw.seconds());
    };
  });

  // locallaw
  StochasticFlags ll_f;
  SpectralDomain ll_dom{-1.0, -1.0, 0.01, 1.0, 1, 5};
  double ll_allow = 10.0, ll_floor = 1.0;
  auto* ll = app.add_subcommand("locallaw", "Averaged and entrywise local-law errors on a spectral grid");
  add_stochastic_flags(ll, ll_f, common);
  ll->add_option("--E-lo", ll_dom.E_lo, "Smallest E (default lambda_r + 1)");
  ll->add_option("--E-hi", ll_dom.E_hi, "Largest E (default E-lo)");
  ll->add_option("--n-E", ll_dom.n_E, "Number of E values")->capture_default_str();
  ll->add_option("--eta-lo", ll_dom.eta_lo, "Smallest eta")->capture_default_str();
  ll->add_option("--eta-hi", ll_dom.eta_hi, "Largest eta (<= 1)")->capture_default_str();
  ll->add_option("--n-eta", ll_dom.n_eta, "Number of eta values, log spaced")->capture_default_str();
  ll->add_option("--allowance", ll_allow, "Off-diagonal allowance: |G_ab| <= allowance * Psi")->capture_default_str();
  ll->add_option("--floor", ll_floor, "eta floor as a multiple of 1/N")->capture_default_str();
  add_output_flags(ll, common);
  ll->footer(kJsonFooter);
  ll->callback([&] {
    action = [&] {
      Stopwatch sw;
      const auto cfg = build_config(ll_f);
      auto dom = ll_dom;
      if (dom.E_lo < 0.0) dom.E_lo = edge_report(cfg.model.pop(), cfg.model.d(), cfg.model.pop().tau()).lambda_r + 1.0;
      if (dom.E_hi < 0.0) dom.E_hi = dom.E_lo;
      const auto rep = locallaw_scan(cfg, dom, ll_allow, ll_floor, {common.threads});
      Emitter(common, out).report({{"config", config_to_json(cfg)}, {"locallaw", to_json(rep)}}, sw.seconds());
    };
  });

  // cutoff
  StochasticFlags cut_f;
  double cut_eps = 0.1;
  auto* cut = app.add_subcommand("cutoff", "Split entries at N^(1/2-epsilon) and compare lambda_1 with and without the large part");
  add_stochastic_flags(cut, cut_f, common);
  cut->add_option("--epsilon", cut_eps, "Cutoff exponent in (0, 1/2)")->capture_default_str();
  add_output_flags(cut, common);
  cut->footer(kJsonFooter);
  cut->callback([&] {
    action = [&] {
      Stopwatch sw;
      const auto cfg = build_config(cut_f);
      const auto rep = run_cutoff_experiment(cfg, cut_eps, {common.threads});
      Emitter(common, out).report({{"config", config_to_json(cfg)}, {"cutoff", to_json(rep)}}, sw.seconds());
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n";
    const CLI::App* shown = &app;
    for (const auto* sub : app.get_subcommands()) shown = sub;
    err << shown->help();
    return kExitValidation;
  }

  try {
    action();
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace mpedge
