// serialize.hpp -- JSON and file formats
//
// Rationals serialize as {"num": ..., "den": ...} pairs, never as decimals,
// so round trips are bit-exact. Monte Carlo values serialize as
// (estimate, half_width, confidence) triples. Property files come in two
// shapes: a JSON document {"alphabet", "n", "members"} or a plain text
// listing (alphabet line, n line, then one member per line; blank lines and
// '#' comments ignored).

#pragma once

#include <string>

#include <json.hpp>

#include "qfloor/adversary.hpp"
#include "qfloor/machines.hpp"
#include "qfloor/transforms.hpp"
#include "qfloor/words.hpp"

namespace qfloor {

nlohmann::json rational_to_json(const Rational& value);
Rational rational_from_json(const nlohmann::json& j);

nlohmann::json mc_estimate_to_json(const McEstimate& value);
nlohmann::json prob_value_to_json(const ProbValue& value);

nlohmann::json marginals_to_json(const MarginalMap& marginals);

nlohmann::json tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& j);

nlohmann::json certificate_to_json(const Certificate& certificate);

nlohmann::json graded_report_to_json(const GradedDistanceReport& report);
nlohmann::json distinguisher_report_to_json(const DistinguisherReport& report);
nlohmann::json epsilon_report_to_json(const EpsilonTestReport& report);
nlohmann::json equivalence_report_to_json(const EquivalenceReport& report);

nlohmann::json property_to_json(const Property& property);
Property property_from_json(const nlohmann::json& j);

/// Loads a property file, auto-detecting JSON (leading '{') vs plain text.
Property load_property_file(const std::string& path);

DecisionTree load_tree_file(const std::string& path);

/// Serializes with sorted keys and 2-space indentation; writes via a
/// temporary file and rename so output appears atomically.
void write_text_atomic(const std::string& path, const std::string& contents);

} // namespace qfloor
