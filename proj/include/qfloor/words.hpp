// words.hpp -- alphabets, words, properties, exact distances, hybrid inputs
//
// Positions are 0-based everywhere. Distances are exact rationals; the graded
// distance checks need exact equality and never tolerate floating point.
// All types are immutable values after construction and every operation here
// is a pure function of its arguments.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qfloor/rational.hpp"

namespace qfloor {

/// An ordered finite alphabet of at least two distinct symbols. Symbol order
/// is total and fixed; it drives word comparisons and tie-breaking.
class Alphabet {
public:
    explicit Alphabet(std::string symbols);

    std::size_t size() const noexcept { return symbols_.size(); }
    char symbol(std::size_t index) const { return symbols_.at(index); }
    const std::string& symbols() const noexcept { return symbols_; }

    /// Index of `c` in the alphabet, or nullopt if absent.
    std::optional<std::size_t> index_of(char c) const noexcept;

    bool operator==(const Alphabet&) const noexcept = default;

private:
    std::string symbols_;
};

/// A fixed-length word over an alphabet, stored as symbol indices.
class Word {
public:
    Word(Alphabet alphabet, std::vector<std::uint8_t> values);

    /// Builds a word from its symbol string, e.g. parse(binary, "0110").
    static Word parse(const Alphabet& alphabet, std::string_view text);

    std::size_t size() const noexcept { return values_.size(); }
    std::uint8_t value(std::size_t position) const { return values_.at(position); }
    const std::vector<std::uint8_t>& values() const noexcept { return values_; }
    const Alphabet& alphabet() const noexcept { return alphabet_; }

    std::string str() const;

    bool operator==(const Word&) const noexcept = default;

    /// Lexicographic order under the alphabet's symbol order.
    bool operator<(const Word& other) const noexcept {
        return values_ < other.values_;
    }

private:
    Alphabet alphabet_;
    std::vector<std::uint8_t> values_;
};

/// An explicitly enumerated property: a finite set of words of one length.
/// Members are kept sorted and distinct. Constructing an empty property is
/// allowed; using one as a distance or attack target is not.
class Property {
public:
    Property(Alphabet alphabet, std::size_t word_length, std::vector<Word> members);

    const Alphabet& alphabet() const noexcept { return alphabet_; }
    std::size_t word_length() const noexcept { return word_length_; }
    const std::vector<Word>& members() const noexcept { return members_; }
    bool empty() const noexcept { return members_.empty(); }
    bool contains(const Word& word) const;

private:
    Alphabet alphabet_;
    std::size_t word_length_;
    std::vector<Word> members_;
};

/// Materializes a predicate-defined property by enumerating all words of the
/// given length. Refuses (EnumerationBoundError) when |alphabet|^n exceeds
/// `enum_bound`.
Property materialize_property(const Alphabet& alphabet, std::size_t word_length,
                              const std::function<bool(const Word&)>& predicate,
                              std::size_t enum_bound = std::size_t(1) << 20);

/// Normalized Hamming distance |{j : x(j) != y(j)}| / n as an exact rational.
Rational hamming_distance(const Word& x, const Word& y);

/// Exact minimum Hamming distance from `x` to any member of `property`.
Rational distance_to_property(const Word& x, const Property& property);

/// The member attaining the minimum distance from `u`; ties resolve to the
/// lexicographically smallest member so certificates are reproducible.
Word nearest_satisfying(const Word& u, const Property& property);

/// A far word, its nearest satisfying word, and the positions where the two
/// disagree. The seed of every hybrid attack.
class AttackInstance {
public:
    /// Computes the nearest member and the difference set. Throws
    /// DegenerateInstanceError when `u` already satisfies the property.
    AttackInstance(Word u, Property property);

    const Property& property() const noexcept { return property_; }
    const Word& far_word() const noexcept { return u_; }
    const Word& nearest_member() const noexcept { return v_; }

    /// Positions where the far word and its nearest member disagree, sorted.
    const std::vector<std::size_t>& difference_set() const noexcept { return diff_; }

    /// |difference set|; equals n * distance(far word, property).
    std::size_t difference_count() const noexcept { return diff_.size(); }

    std::size_t word_length() const noexcept { return u_.size(); }

private:
    Property property_;
    Word u_;
    Word v_;
    std::vector<std::size_t> diff_;
};

/// Same as the AttackInstance constructor; reads better at call sites.
AttackInstance build_attack_instance(Word u, Property property);

/// The hybrid word that takes the far word's symbols on `subset` and the
/// nearest member's symbols elsewhere. `subset` must be a subset of the
/// difference set (sorted, distinct).
Word hybrid(const AttackInstance& instance, const std::vector<std::size_t>& subset);

struct GradedDistanceCounterexample {
    std::vector<std::size_t> subset;
    Rational expected;
    Rational actual;
};

struct GradedDistanceReport {
    bool passed = false;
    bool exhaustive = false;
    std::size_t subsets_checked = 0;
    std::optional<GradedDistanceCounterexample> counterexample;
};

/// Checks d(hybrid(A), property) == |A|/n over subsets A of the difference
/// set: exhaustively when 2^|D| <= max_exhaustive, otherwise over the empty
/// set, all singletons, all co-singletons, D itself, and a seeded sample of
/// intermediate sizes.
GradedDistanceReport verify_graded_distances(const AttackInstance& instance,
                                             std::size_t max_exhaustive,
                                             std::uint64_t seed = 0x5eedULL,
                                             std::size_t samples_per_size = 8);

} // namespace qfloor
