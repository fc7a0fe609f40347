#include "qfloor/words.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "qfloor/coins.hpp"
#include "qfloor/errors.hpp"

namespace qfloor {

Alphabet::Alphabet(std::string symbols) : symbols_(std::move(symbols)) {
    if (symbols_.size() < 2)
        throw std::invalid_argument("Alphabet: need at least two symbols");
    if (symbols_.size() > 256)
        throw std::invalid_argument("Alphabet: at most 256 symbols supported");
    std::set<char> seen(symbols_.begin(), symbols_.end());
    if (seen.size() != symbols_.size())
        throw std::invalid_argument("Alphabet: symbols must be distinct");
}

std::optional<std::size_t> Alphabet::index_of(char c) const noexcept {
    const auto pos = symbols_.find(c);
    if (pos == std::string::npos)
        return std::nullopt;
    return pos;
}

Word::Word(Alphabet alphabet, std::vector<std::uint8_t> values)
  : alphabet_(std::move(alphabet)), values_(std::move(values)) {
    if (values_.empty())
        throw std::invalid_argument("Word: length must be at least 1");
    for (const std::uint8_t v : values_)
        if (v >= alphabet_.size())
            throw std::invalid_argument("Word: symbol index out of alphabet range");
}

Word Word::parse(const Alphabet& alphabet, std::string_view text) {
    std::vector<std::uint8_t> values;
    values.reserve(text.size());
    for (const char c : text) {
        const auto idx = alphabet.index_of(c);
        if (!idx)
            throw std::invalid_argument(std::string("Word: symbol '") + c +
                                        "' not in alphabet \"" + alphabet.symbols() + "\"");
        values.push_back(static_cast<std::uint8_t>(*idx));
    }
    return Word(alphabet, std::move(values));
}

std::string Word::str() const {
    std::string out;
    out.reserve(values_.size());
    for (const std::uint8_t v : values_)
        out.push_back(alphabet_.symbol(v));
    return out;
}

Property::Property(Alphabet alphabet, std::size_t word_length, std::vector<Word> members)
  : alphabet_(std::move(alphabet)), word_length_(word_length), members_(std::move(members)) {
    if (word_length_ == 0)
        throw std::invalid_argument("Property: word length must be at least 1");
    for (const Word& m : members_) {
        if (m.alphabet() != alphabet_)
            throw std::invalid_argument("Property: member alphabet mismatch");
        if (m.size() != word_length_)
            throw std::invalid_argument("Property: member length mismatch");
    }
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

bool Property::contains(const Word& word) const {
    return std::binary_search(members_.begin(), members_.end(), word);
}

Property materialize_property(const Alphabet& alphabet, std::size_t word_length,
                              const std::function<bool(const Word&)>& predicate,
                              std::size_t enum_bound) {
    double space = 1.0;
    for (std::size_t i = 0; i < word_length; ++i)
        space *= static_cast<double>(alphabet.size());
    if (space > static_cast<double>(enum_bound))
        throw EnumerationBoundError("materialize_property: word space exceeds enumeration bound");

    std::vector<Word> members;
    std::vector<std::uint8_t> values(word_length, 0);
    for (;;) {
        Word w(alphabet, values);
        if (predicate(w))
            members.push_back(std::move(w));
        // odometer increment over the symbol indices
        std::size_t j = word_length;
        while (j > 0) {
            --j;
            if (++values[j] < alphabet.size())
                break;
            values[j] = 0;
            if (j == 0)
                return Property(alphabet, word_length, std::move(members));
        }
    }
}

namespace {

void require_compatible(const Word& x, const Word& y) {
    if (x.alphabet() != y.alphabet())
        throw std::invalid_argument("hamming_distance: alphabet mismatch");
    if (x.size() != y.size())
        throw std::invalid_argument("hamming_distance: length mismatch");
}

} // namespace

Rational hamming_distance(const Word& x, const Word& y) {
    require_compatible(x, y);
    std::int64_t differences = 0;
    for (std::size_t j = 0; j < x.size(); ++j)
        if (x.value(j) != y.value(j))
            ++differences;
    return Rational(differences, static_cast<std::int64_t>(x.size()));
}

Rational distance_to_property(const Word& x, const Property& property) {
    if (property.empty())
        throw EmptyPropertyError("distance_to_property: empty property has no minimum");
    if (x.alphabet() != property.alphabet() || x.size() != property.word_length())
        throw std::invalid_argument("distance_to_property: word incompatible with property");
    Rational best(1);
    bool first = true;
    for (const Word& member : property.members()) {
        const Rational d = hamming_distance(x, member);
        if (first || d < best) {
            best = d;
            first = false;
        }
    }
    return best;
}

Word nearest_satisfying(const Word& u, const Property& property) {
    if (property.empty())
        throw EmptyPropertyError("nearest_satisfying: empty property has no nearest member");
    if (u.alphabet() != property.alphabet() || u.size() != property.word_length())
        throw std::invalid_argument("nearest_satisfying: word incompatible with property");
    // Members are sorted, so the first minimum is the lexicographic tie-break.
    const Word* best = nullptr;
    Rational best_distance(1);
    for (const Word& member : property.members()) {
        const Rational d = hamming_distance(u, member);
        if (best == nullptr || d < best_distance) {
            best = &member;
            best_distance = d;
        }
    }
    return *best;
}

AttackInstance::AttackInstance(Word u, Property property)
  : property_(std::move(property)), u_(std::move(u)), v_(nearest_satisfying(u_, property_)) {
    if (property_.contains(u_))
        throw DegenerateInstanceError(
            "AttackInstance: the far word satisfies the property; no attack exists");
    for (std::size_t j = 0; j < u_.size(); ++j)
        if (u_.value(j) != v_.value(j))
            diff_.push_back(j);
    // |D|/n must equal the distance to the property (not just to V).
    const Rational d = distance_to_property(u_, property_);
    if (Rational(static_cast<std::int64_t>(diff_.size()),
                 static_cast<std::int64_t>(u_.size())) != d)
        throw std::logic_error("AttackInstance: nearest member does not attain the distance");
}

AttackInstance build_attack_instance(Word u, Property property) {
    return AttackInstance(std::move(u), std::move(property));
}

Word hybrid(const AttackInstance& instance, const std::vector<std::size_t>& subset) {
    const auto& diff = instance.difference_set();
    std::vector<std::uint8_t> values = instance.nearest_member().values();
    std::size_t previous = 0;
    bool first = true;
    for (const std::size_t j : subset) {
        if (!first && j <= previous)
            throw std::invalid_argument("hybrid: subset must be sorted and distinct");
        if (!std::binary_search(diff.begin(), diff.end(), j))
            throw std::invalid_argument("hybrid: subset position outside the difference set");
        values[j] = instance.far_word().value(j);
        previous = j;
        first = false;
    }
    return Word(instance.far_word().alphabet(), std::move(values));
}

namespace {

std::vector<std::size_t> subset_from_mask(const std::vector<std::size_t>& diff,
                                          std::uint64_t mask) {
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < diff.size(); ++i)
        if (mask & (std::uint64_t(1) << i))
            subset.push_back(diff[i]);
    return subset;
}

bool check_subset(const AttackInstance& instance, const std::vector<std::size_t>& subset,
                  GradedDistanceReport& report) {
    const Rational expected(static_cast<std::int64_t>(subset.size()),
                            static_cast<std::int64_t>(instance.word_length()));
    const Rational actual = distance_to_property(hybrid(instance, subset), instance.property());
    ++report.subsets_checked;
    if (actual != expected) {
        report.counterexample = GradedDistanceCounterexample{subset, expected, actual};
        return false;
    }
    return true;
}

} // namespace

GradedDistanceReport verify_graded_distances(const AttackInstance& instance,
                                             std::size_t max_exhaustive,
                                             std::uint64_t seed,
                                             std::size_t samples_per_size) {
    const auto& diff = instance.difference_set();
    const std::size_t d = diff.size();
    GradedDistanceReport report;

    if (d < 64 && (std::uint64_t(1) << d) <= max_exhaustive) {
        report.exhaustive = true;
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << d); ++mask) {
            if (!check_subset(instance, subset_from_mask(diff, mask), report)) {
                report.passed = false;
                return report;
            }
        }
        report.passed = true;
        return report;
    }

    report.exhaustive = false;
    std::vector<std::vector<std::size_t>> picked;
    picked.push_back({});                                   // empty set
    picked.push_back(diff);                                 // D itself
    for (std::size_t i = 0; i < d; ++i) {
        picked.push_back({diff[i]});                        // singletons
        std::vector<std::size_t> co;                        // co-singletons
        for (std::size_t j = 0; j < d; ++j)
            if (j != i)
                co.push_back(diff[j]);
        picked.push_back(std::move(co));
    }
    // Seeded sample of intermediate sizes via partial Fisher-Yates.
    SplitMix64 rng(seed);
    for (std::size_t size = 2; size + 2 <= d; ++size) {
        for (std::size_t s = 0; s < samples_per_size; ++s) {
            std::vector<std::size_t> pool = diff;
            for (std::size_t i = 0; i < size; ++i) {
                const std::size_t pick = i + rng.next() % (pool.size() - i);
                std::swap(pool[i], pool[pick]);
            }
            std::vector<std::size_t> subset(pool.begin(), pool.begin() + size);
            std::sort(subset.begin(), subset.end());
            picked.push_back(std::move(subset));
        }
    }
    for (const auto& subset : picked) {
        if (!check_subset(instance, subset, report)) {
            report.passed = false;
            return report;
        }
    }
    report.passed = true;
    return report;
}

} // namespace qfloor
