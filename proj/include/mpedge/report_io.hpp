#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpedge/deformed_mp.hpp"
#include "mpedge/harness.hpp"

namespace mpedge {

// {"sigmas": [...]} with exactly M entries, or {"atoms": [{"sigma": s, "weight": w}, ...]};
// an optional "M" key must match.
PopulationSpectrum population_from_json(const nlohmann::json& j, std::size_t M, double tau = kDefaultTau);
nlohmann::json population_to_json(const PopulationSpectrum& pop);

// null | two:σa,σb,w | <path to a JSON population file>
PopulationSpectrum parse_population(std::string_view text, std::size_t M, double tau = kDefaultTau);

// Shortest round-trip decimal form; independent of the global locale.
std::string format_double(double x);

// trial,lambda1,rescaled,triggered
std::string records_csv(const std::vector<TrialRecord>& records);

nlohmann::json to_json(const EdgeReport& e);
nlohmann::json to_json(const SupportAtlas& a);
nlohmann::json to_json(const KSReport& r);
nlohmann::json to_json(const TailProbeReport& r);
nlohmann::json to_json(const RigidityReport& r);
nlohmann::json to_json(const LocalLawReport& r);
nlohmann::json to_json(const CutoffReport& r);
nlohmann::json to_json(const CutoffExperiment& r);

// Writes bytes exactly (binary mode, so '\n' stays '\n').
void write_file(const std::string& path, std::string_view content);

}  // namespace mpedge
