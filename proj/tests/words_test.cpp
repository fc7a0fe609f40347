#include <doctest.h>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "qfloor/coins.hpp"
#include "qfloor/errors.hpp"
#include "qfloor/words.hpp"

using namespace qfloor;

namespace {

const Alphabet kBinary("01");

Word w(const std::string& text) { return Word::parse(kBinary, text); }

Property two_member8() {
    return Property(kBinary, 8, {w("00000000"), w("11110000")});
}

// Test-side distance oracle: a plain double loop, independent of the library
// implementation path.
Rational oracle_distance(const Word& x, const Property& p) {
    std::int64_t best = static_cast<std::int64_t>(x.size()) + 1;
    for (const Word& member : p.members()) {
        std::int64_t differences = 0;
        for (std::size_t j = 0; j < x.size(); ++j)
            if (x.value(j) != member.value(j))
                ++differences;
        best = std::min(best, differences);
    }
    return Rational(best, static_cast<std::int64_t>(x.size()));
}

Word random_word(SplitMix64& rng, std::size_t n) {
    std::vector<std::uint8_t> values(n);
    for (auto& v : values)
        v = static_cast<std::uint8_t>(rng.next() % 2);
    return Word(kBinary, values);
}

} // namespace

TEST_SUITE("words") {

TEST_CASE("alphabet validation") {
    CHECK_THROWS_AS(Alphabet("0"), std::invalid_argument);
    CHECK_THROWS_AS(Alphabet("001"), std::invalid_argument);
    const Alphabet abc("abc");
    CHECK(abc.size() == 3);
    CHECK(abc.index_of('b') == std::size_t(1));
    CHECK_FALSE(abc.index_of('z').has_value());
}

TEST_CASE("word parsing and printing") {
    const Word word = w("0110");
    CHECK(word.size() == 4);
    CHECK(word.value(1) == 1);
    CHECK(word.str() == "0110");
    CHECK_THROWS_AS(Word::parse(kBinary, "012"), std::invalid_argument);
    CHECK_THROWS_AS(Word(kBinary, {}), std::invalid_argument);
}

TEST_CASE("hamming distance examples") {
    CHECK(hamming_distance(w("01010101"), w("01010101")) == Rational(0));
    CHECK(hamming_distance(w("00000000"), w("11110000")) == Rational(1, 2));
    CHECK(hamming_distance(w("01"), w("10")) == Rational(1));
    CHECK_THROWS_AS(hamming_distance(w("01"), w("011")), std::invalid_argument);
    CHECK_THROWS_AS(hamming_distance(w("01"), Word::parse(Alphabet("ab"), "ab")),
                    std::invalid_argument);
}

TEST_CASE("hamming distance is a metric on sampled triples") {
    SplitMix64 rng(17);
    for (int i = 0; i < 300; ++i) {
        const Word x = random_word(rng, 12), y = random_word(rng, 12),
                   z = random_word(rng, 12);
        CHECK(hamming_distance(x, y) == hamming_distance(y, x));
        CHECK(hamming_distance(x, z) <= hamming_distance(x, y) + hamming_distance(y, z));
        CHECK((hamming_distance(x, y) == Rational(0)) == (x == y));
    }
}

TEST_CASE("distance to property examples") {
    const Property p = two_member8();
    CHECK(distance_to_property(w("11110000"), p) == Rational(0));
    CHECK(distance_to_property(w("11111111"), Property(kBinary, 8, {w("00000000")})) ==
          Rational(1));
    CHECK(distance_to_property(w("11111111"), p) == Rational(1, 2));
    CHECK(distance_to_property(w("11111111"), p) == oracle_distance(w("11111111"), p));
    CHECK_THROWS_AS(distance_to_property(w("11111111"), Property(kBinary, 8, {})),
                    EmptyPropertyError);
}

TEST_CASE("nearest satisfying with lexicographic tie-break") {
    const Property p = two_member8();
    CHECK(nearest_satisfying(w("11111111"), p) == w("11110000"));
    CHECK(nearest_satisfying(w("11110000"), p) == w("11110000"));

    const Property ties(kBinary, 2, {w("01"), w("10")});
    CHECK(nearest_satisfying(w("00"), ties) == w("01"));
    CHECK_THROWS_AS(nearest_satisfying(w("00"), Property(kBinary, 2, {})),
                    EmptyPropertyError);
}

TEST_CASE("attack instance construction") {
    const AttackInstance inst = build_attack_instance(w("11111111"), two_member8());
    CHECK(inst.nearest_member() == w("11110000"));
    CHECK(inst.difference_set() == std::vector<std::size_t>{4, 5, 6, 7});
    CHECK(inst.difference_count() == 4);

    const AttackInstance whole =
        build_attack_instance(w("11111111"), Property(kBinary, 8, {w("00000000")}));
    CHECK(whole.difference_count() == 8);

    CHECK_THROWS_AS(build_attack_instance(w("11110000"), two_member8()),
                    DegenerateInstanceError);
    CHECK_THROWS_AS(build_attack_instance(w("11111111"), Property(kBinary, 8, {})),
                    EmptyPropertyError);
}

TEST_CASE("attack instance is deterministic") {
    const AttackInstance a = build_attack_instance(w("11111111"), two_member8());
    const AttackInstance b = build_attack_instance(w("11111111"), two_member8());
    CHECK(a.nearest_member() == b.nearest_member());
    CHECK(a.difference_set() == b.difference_set());
}

TEST_CASE("hybrid words") {
    const AttackInstance inst = build_attack_instance(w("11111111"), two_member8());
    CHECK(hybrid(inst, {}) == inst.nearest_member());
    CHECK(hybrid(inst, {4, 5, 6, 7}) == inst.far_word());
    CHECK(hybrid(inst, {4, 5}) == w("11111100"));
    CHECK_THROWS_AS(hybrid(inst, {0}), std::invalid_argument);
    CHECK_THROWS_AS(hybrid(inst, {5, 4}), std::invalid_argument);
}

TEST_CASE("hybrid distance identities over random subsets") {
    const AttackInstance inst =
        build_attack_instance(w("11111111"), Property(kBinary, 8, {w("00000000")}));
    SplitMix64 rng(99);
    for (int i = 0; i < 200; ++i) {
        std::vector<std::size_t> subset;
        for (std::size_t j = 0; j < inst.difference_count(); ++j)
            if (rng.next() % 2)
                subset.push_back(inst.difference_set()[j]);
        const Word h = hybrid(inst, subset);
        const Rational size_fraction(static_cast<std::int64_t>(subset.size()), 8);
        CHECK(hamming_distance(h, inst.nearest_member()) == size_fraction);
        CHECK(hamming_distance(h, inst.far_word()) ==
              Rational(static_cast<std::int64_t>(inst.difference_count() - subset.size()), 8));
    }
}

TEST_CASE("graded distances verify exhaustively on the catalog instance") {
    const AttackInstance inst = build_attack_instance(w("11111111"), two_member8());
    const GradedDistanceReport report = verify_graded_distances(inst, 65536);
    CHECK(report.passed);
    CHECK(report.exhaustive);
    CHECK(report.subsets_checked == 16);
    CHECK_FALSE(report.counterexample.has_value());

    // Spot-check the boundary cases against the independent oracle.
    CHECK(oracle_distance(hybrid(inst, {}), inst.property()) == Rational(0));
    CHECK(oracle_distance(hybrid(inst, inst.difference_set()), inst.property()) ==
          Rational(4, 8));
}

TEST_CASE("graded distances hold exhaustively on random instances") {
    SplitMix64 rng(0xD157);
    std::size_t instances_checked = 0;
    while (instances_checked < 40) {
        const std::size_t member_count = 1 + rng.next() % 4;
        std::vector<Word> members;
        for (std::size_t m = 0; m < member_count; ++m)
            members.push_back(random_word(rng, 6));
        const Property p(kBinary, 6, std::move(members));
        const Word u = random_word(rng, 6);
        if (p.contains(u))
            continue;
        const AttackInstance inst = build_attack_instance(u, p);
        const GradedDistanceReport report = verify_graded_distances(inst, 65536);
        CHECK(report.passed);
        CHECK(report.exhaustive);
        ++instances_checked;
    }
}

TEST_CASE("graded distances sampled mode on a larger instance") {
    const Property p(kBinary, 16, {Word(kBinary, std::vector<std::uint8_t>(16, 0))});
    const AttackInstance inst =
        build_attack_instance(Word(kBinary, std::vector<std::uint8_t>(16, 1)), p);
    const GradedDistanceReport report = verify_graded_distances(inst, 1024);
    CHECK(report.passed);
    CHECK_FALSE(report.exhaustive);
    CHECK(report.subsets_checked > 2 * 16);
}

TEST_CASE("materialize property by predicate") {
    const Property evens = materialize_property(kBinary, 4, [](const Word& word) {
        int ones = 0;
        for (std::size_t j = 0; j < word.size(); ++j)
            ones += word.value(j);
        return ones % 2 == 0;
    });
    CHECK(evens.members().size() == 8);
    CHECK(evens.contains(w("0011")));
    CHECK_FALSE(evens.contains(w("0001")));
    CHECK_THROWS_AS(
        materialize_property(kBinary, 30, [](const Word&) { return true; }),
        EnumerationBoundError);
}

} // TEST_SUITE
