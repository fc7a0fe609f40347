// catalog.hpp -- reference properties, instances, and testers
//
// The catalog pins everything the acceptance suite and the CLI demos run
// against. Entries are constructible from their parameters alone and are
// addressable by name plus a JSON parameter object.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfloor/machines.hpp"
#include "qfloor/words.hpp"

namespace qfloor {

struct CatalogEntry {
    enum class Kind { Property, Instance, Tester };

    std::string name;
    Kind kind;
    std::string doc;
};

const std::vector<CatalogEntry>& catalog_entries();

/// The binary alphabet "01" used by every catalog entry.
const Alphabet& binary_alphabet();

/// P = {0^n}: the single all-zeros member. With the all-ones far word the
/// difference set is every position.
Property zero_property(std::size_t n);

/// P = {0^n, 1^{n/2} 0^{n/2}} for even n >= 4: exercises nearest-member
/// selection with a difference count smaller than n.
Property two_member_property(std::size_t n);

/// Queries q uniform positions (with or without replacement) and accepts iff
/// every read symbol is 0. Non-adaptive by construction. The tree form is
/// built directly as a mixture over distinct query sets, so exact evaluation
/// stays cheap even for large q with replacement.
TesterHandle uniform_sampler_tester(std::size_t n, std::size_t q, bool with_replacement);

/// A deliberately adaptive tester: the first query is the smallest
/// difference-set position, and each later position depends on whether the
/// previous answer matched the nearest member. Accepts iff every answer
/// matched. Exists solely to exercise the non-adaptivization transform;
/// needs |D| >= 3 for q >= 2 so the answer branches actually diverge.
TesterHandle adaptive_probe_tester(const AttackInstance& instance, std::size_t q);

/// Decides immediately without querying.
TesterHandle constant_tester(const Alphabet& alphabet, std::size_t n, bool accept);

Property make_catalog_property(const std::string& name, const nlohmann::json& params);

AttackInstance make_catalog_instance(const std::string& name, const nlohmann::json& params);

/// `instance` supplies dimensions (and the probe's positions) when the
/// parameters leave them implicit.
TesterHandle make_catalog_tester(const std::string& name, const nlohmann::json& params,
                                 const AttackInstance* instance = nullptr);

} // namespace qfloor
