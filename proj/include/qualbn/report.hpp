#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qualbn/checker.hpp"
#include "qualbn/inference.hpp"

namespace qualbn {

/// Human-readable report; probabilities with 4 decimals.
std::string render_text(const CheckReport& report);
std::string render_text(const ComparisonReport& report);
std::string render_signs(const std::vector<ArcSignResult>& signs);

/// Structured documents; doubles at full precision, field order fixed.
nlohmann::ordered_json to_json(const CheckReport& report);
nlohmann::ordered_json to_json(const ComparisonReport& report);
nlohmann::ordered_json to_json(const std::vector<ArcSignResult>& signs);

/// Posterior of every node next to its prior, with signed deltas.
struct MarginalTable {
  Evidence evidence;
  std::vector<Posterior> posterior;
  std::vector<Posterior> prior;
};

MarginalTable marginal_table(const Network& net, const Evidence& evidence);

/// `only` restricts the text rendering to one node.
std::string render_text(const Network& net, const MarginalTable& table, double epsilon,
                        std::optional<std::size_t> only = std::nullopt);
nlohmann::ordered_json to_json(const Network& net, const MarginalTable& table);

}  // namespace qualbn
