#include "mpedge/report_io.hpp"

#include <charconv>
#include <fstream>

#include "mpedge/errors.hpp"

namespace mpedge {

using nlohmann::json;

PopulationSpectrum population_from_json(const json& j, std::size_t M, double tau) {
  try {
    if (j.contains("M") && j.at("M").get<std::size_t>() != M)
      throw ValidationError("population file declares M = " + std::to_string(j.at("M").get<std::size_t>()) +
                            " but the model has M = " + std::to_string(M));
    if (j.contains("sigmas")) {
      auto sig = j.at("sigmas").get<std::vector<double>>();
      if (sig.size() != M)
        throw ValidationError("population lists " + std::to_string(sig.size()) + " sigmas but M = " +
                              std::to_string(M));
      return PopulationSpectrum::from_sigmas(std::move(sig), tau);
    }
    if (j.contains("atoms")) {
      std::vector<Atom> atoms;
      for (const auto& a : j.at("atoms")) atoms.push_back({a.at("sigma").get<double>(), a.at("weight").get<double>()});
      return PopulationSpectrum::from_atoms(atoms, M, tau);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("population JSON: ") + e.what());
  }
  throw ValidationError("population JSON needs a \"sigmas\" or \"atoms\" key");
}

json population_to_json(const PopulationSpectrum& pop) {
  json atoms = json::array();
  for (const auto& a : pop.atoms()) atoms.push_back({{"sigma", a.sigma}, {"weight", a.weight}});
  return {{"atoms", atoms}};
}

PopulationSpectrum parse_population(std::string_view text, std::size_t M, double tau) {
  if (text == "null") return PopulationSpectrum::identity(M);
  if (text.starts_with("two:")) {
    std::vector<double> v;
    std::string_view rest = text.substr(4);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto tok = rest.substr(0, comma);
      double x = 0.0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (ec != std::errc{} || p != tok.data() + tok.size())
        throw ValidationError("bad number in population '" + std::string(text) + "'");
      v.push_back(x);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    if (v.size() != 3 || !(v[2] > 0.0 && v[2] < 1.0))
      throw ValidationError("two-atom population is two:sigma_a,sigma_b,w with 0 < w < 1");
    const Atom atoms[] = {{v[0], v[2]}, {v[1], 1.0 - v[2]}};
    return PopulationSpectrum::from_atoms(atoms, M, tau);
  }
  std::ifstream in{std::string(text)};
  if (!in) throw ValidationError("population must be null, two:a,b,w or a readable JSON file: '" + std::string(text) + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("population file: " + std::string(e.what()));
  }
  return population_from_json(j, M, tau);
}

std::string format_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, p);
}

std::string records_csv(const std::vector<TrialRecord>& records) {
  std::string out = "trial,lambda1,rescaled,triggered\n";
  for (const auto& r : records) {
    out += std::to_string(r.trial_index);
    out += ',';
    out += format_double(r.lambda_top.at(0));
    out += ',';
    out += format_double(r.rescaled.at(0));
    out += r.triggered_gamma_event ? ",1\n" : ",0\n";
  }
  return out;
}

json to_json(const EdgeReport& e) {
  return {{"lambda_r", e.lambda_r},         {"b1", e.b1},
          {"gamma0", e.gamma0},             {"regularity_margin", e.margin_sigma1},
          {"margin_min", e.margin_min},     {"tau", e.tau},
          {"regular", e.regular}};
}

json to_json(const SupportAtlas& a) {
  json iv = json::array(), cp = json::array();
  for (const auto& i : a.intervals) iv.push_back({i.lo, i.hi});
  for (const auto& c : a.critical_points) cp.push_back({{"edge", c.edge}, {"m", c.m}});
  return {{"intervals", iv}, {"critical_points", cp}, {"merged", a.merged}, {"hard_edge_at_zero", a.hard_edge_at_zero}};
}

json to_json(const KSReport& r) {
  json snap = json::array();
  for (const auto& s : r.snapshot) snap.push_back({{"x", s[0]}, {"ecdf", s[1]}, {"reference", s[2]}});
  json j = {{"ks_stat", r.ks_stat}, {"n", r.n}, {"threshold", r.threshold}, {"pass", r.pass}, {"snapshot", snap}};
  if (r.n_other) j["n_other"] = r.n_other;
  return j;
}

json to_json(const TailProbeReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"N", row.N},
                    {"M", row.M},
                    {"trials", row.trials},
                    {"hits", row.hits},
                    {"estimate", row.estimate},
                    {"wilson", {row.wilson.lo, row.wilson.hi}},
                    {"triggered", row.triggered},
                    {"witness_violations", row.witness_violations}});
  return {{"s", r.s}, {"tau", r.tau}, {"rows", rows}};
}

json to_json(const RigidityReport& r) {
  json trials = json::array();
  for (const auto& t : r.trials)
    trials.push_back({{"raw_top_gap", t.raw_top_gap}, {"max_normalized", t.max_normalized}, {"median_normalized", t.median_normalized}});
  return {{"N", r.N},
          {"c1", r.c1},
          {"window", r.gammas.size()},
          {"gammas", r.gammas},
          {"median_per_j", r.median_per_j},
          {"median_raw_top_gap", r.median_raw_top_gap},
          {"median_normalized", r.median_normalized},
          {"max_normalized", r.max_normalized},
          {"trials", trials}};
}

json to_json(const LocalLawReport& r) {
  json pts = json::array();
  for (const auto& p : r.points)
    pts.push_back({{"z", {p.z.real(), p.z.imag()}},
                   {"m2c", {p.m2c.real(), p.m2c.imag()}},
                   {"psi", p.psi},
                   {"averaged", p.averaged},
                   {"entrywise", p.entrywise},
                   {"offdiag_ok", p.offdiag_ok}});
  return {{"N", r.N}, {"eta_floor", r.eta_floor}, {"allowance", r.allowance}, {"points", pts}};
}

json to_json(const CutoffReport& r) {
  return {{"epsilon", r.epsilon},
          {"threshold", r.threshold},
          {"alpha_N", r.alpha_N},
          {"beta_N", r.beta_N},
          {"shift", r.shift},
          {"alpha_rate", r.alpha_rate},
          {"beta_rate", r.beta_rate},
          {"rates_hold", r.rates_hold},
          {"large_count", r.large_count},
          {"expected_large", r.expected_large},
          {"reconstruction_error", r.reconstruction_error},
          {"lambda1_original", r.lambda1_original},
          {"lambda1_small_part", r.lambda1_small_part},
          {"gap", r.gap},
          {"gap_bound", r.gap_bound},
          {"gap_ok", r.gap_ok}};
}

json to_json(const CutoffExperiment& r) {
  json trials = json::array();
  for (const auto& t : r.trials) trials.push_back(to_json(t));
  return {{"large_total", r.large_total},
          {"expected_total", r.expected_total},
          {"sigma_total", r.sigma_total},
          {"count_within_3sigma", r.count_within_3sigma},
          {"gap_ok_fraction", r.gap_ok_fraction},
          {"max_reconstruction_error", r.max_reconstruction_error},
          {"trials", trials}};
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ValidationError("write failed for " + path);
}

}  // namespace mpedge
