#include <doctest.h>

#include <json.hpp>

#include "qfloor/catalog.hpp"
#include "qfloor/errors.hpp"

using namespace qfloor;

namespace {

Word w(const std::string& text) { return Word::parse(binary_alphabet(), text); }

std::vector<Word> all_words(std::size_t n) {
    std::vector<Word> words;
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
        std::vector<std::uint8_t> values(n);
        for (std::size_t j = 0; j < n; ++j)
            values[j] = static_cast<std::uint8_t>((mask >> j) & 1);
        words.emplace_back(binary_alphabet(), values);
    }
    return words;
}

std::int64_t binomial(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n)
        return 0;
    std::int64_t result = 1;
    for (std::int64_t i = 0; i < k; ++i)
        result = result * (n - i) / (i + 1);
    return result;
}

std::size_t ones_count(const Word& word) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < word.size(); ++j)
        ones += word.value(j);
    return ones;
}

/// Closed-form sampler acceptance: all q draws must land on zero positions.
Rational sampler_closed_form(std::size_t n, std::size_t q, bool with_replacement,
                             std::size_t ones) {
    const std::int64_t zeros = static_cast<std::int64_t>(n - ones);
    if (with_replacement)
        return pow(Rational(zeros, static_cast<std::int64_t>(n)), q);
    return Rational(binomial(zeros, static_cast<std::int64_t>(q)),
                    binomial(static_cast<std::int64_t>(n), static_cast<std::int64_t>(q)));
}

} // namespace

TEST_SUITE("catalog") {

TEST_CASE("zero property") {
    const Property p = zero_property(4);
    CHECK(p.members().size() == 1);
    CHECK(p.contains(w("0000")));
    CHECK(distance_to_property(w("1111"), p) == Rational(1));
    CHECK(distance_to_property(w("0011"), p) == Rational(1, 2));
    CHECK_THROWS_AS(zero_property(0), ParameterRangeError);
}

TEST_CASE("two-member property and nearest selection") {
    const AttackInstance inst8 =
        build_attack_instance(w("11111111"), two_member_property(8));
    CHECK(inst8.nearest_member() == w("11110000"));
    CHECK(inst8.difference_count() == 4);

    CHECK_THROWS_AS(build_attack_instance(w("00000000"), two_member_property(8)),
                    DegenerateInstanceError);

    const AttackInstance inst6 = build_attack_instance(
        Word::parse(binary_alphabet(), "111111"), two_member_property(6));
    CHECK(inst6.nearest_member() == Word::parse(binary_alphabet(), "111000"));
    CHECK(inst6.difference_count() == 3);

    CHECK_THROWS_AS(two_member_property(5), ParameterRangeError);
    CHECK_THROWS_AS(two_member_property(2), ParameterRangeError);
}

TEST_CASE("sampler point examples") {
    // q = n without replacement decides exactly.
    const TesterHandle exact_decider = uniform_sampler_tester(8, 8, false);
    for (const Word& x : all_words(8)) {
        const Rational expected(x == w("00000000") ? 1 : 0);
        CHECK(acceptance_probability_exact(*exact_decider.tree, x) == expected);
    }

    const TesterHandle single = uniform_sampler_tester(8, 1, true);
    CHECK(acceptance_probability_exact(*single.tree, w("01000000")) == Rational(7, 8));

    const TesterHandle pair = uniform_sampler_tester(8, 2, true);
    CHECK(acceptance_probability_exact(*pair.tree, w("01000000")) == Rational(49, 64));
}

TEST_CASE("sampler acceptance matches the closed form on every input") {
    for (const bool with_replacement : {true, false}) {
        for (const std::size_t q : {std::size_t(1), std::size_t(2), std::size_t(3)}) {
            const TesterHandle sampler = uniform_sampler_tester(6, q, with_replacement);
            for (const Word& x : all_words(6))
                CHECK(acceptance_probability_exact(*sampler.tree, x) ==
                      sampler_closed_form(6, q, with_replacement, ones_count(x)));
        }
    }
    // Large q with replacement stays exactly evaluable.
    const TesterHandle big = uniform_sampler_tester(8, 16, true);
    for (const Word& x : all_words(8))
        CHECK(acceptance_probability_exact(*big.tree, x) ==
              sampler_closed_form(8, 16, true, ones_count(x)));
}

TEST_CASE("sampler marginals match the closed form") {
    const TesterHandle with = uniform_sampler_tester(8, 3, true);
    const MarginalMap m1 = query_marginals_exact(*with.tree, w("00000000"));
    const Rational miss = pow(Rational(7, 8), 3);
    for (std::size_t j = 0; j < 8; ++j)
        CHECK(m1.exact_at(j) == Rational(1) - miss);

    const TesterHandle without = uniform_sampler_tester(8, 2, false);
    const MarginalMap m2 = query_marginals_exact(*without.tree, w("00000000"));
    for (std::size_t j = 0; j < 8; ++j)
        CHECK(m2.exact_at(j) == Rational(2, 8));
}

TEST_CASE("sampler trees are non-adaptive by construction") {
    CHECK(is_nonadaptive(*uniform_sampler_tester(8, 2, true).tree));
    CHECK(is_nonadaptive(*uniform_sampler_tester(8, 3, false).tree));
}

TEST_CASE("sampler tree and stepwise forms agree exactly at small q") {
    for (const bool with_replacement : {true, false}) {
        for (const std::size_t q : {std::size_t(1), std::size_t(2), std::size_t(3)}) {
            const TesterHandle sampler = uniform_sampler_tester(6, q, with_replacement);
            const DecisionTree unrolled = unroll_to_tree(*sampler.stepwise, CoinSpace{q});
            for (const Word& x : all_words(6))
                CHECK(acceptance_probability_exact(unrolled, x) ==
                      acceptance_probability_exact(*sampler.tree, x));
        }
    }
}

TEST_CASE("sampler parameter validation") {
    CHECK_THROWS_AS(uniform_sampler_tester(8, 0, true), ParameterRangeError);
    CHECK_THROWS_AS(uniform_sampler_tester(8, 9, false), ParameterRangeError);
    CHECK_NOTHROW(uniform_sampler_tester(8, 9, true)); // replacement allows q > n
}

TEST_CASE("adaptive probe is adaptive exactly when it can branch") {
    const AttackInstance inst =
        build_attack_instance(w("11111111"), two_member_property(8));
    const TesterHandle probe2 = adaptive_probe_tester(inst, 2);
    CHECK_FALSE(is_nonadaptive(*probe2.tree));

    const TesterHandle probe1 = adaptive_probe_tester(inst, 1);
    CHECK(is_nonadaptive(*probe1.tree));

    const TesterHandle probe3 = adaptive_probe_tester(inst, 3);
    CHECK_FALSE(is_nonadaptive(*probe3.tree));
    CHECK(probe3.tree->query_budget <= 3);

    CHECK_THROWS_AS(adaptive_probe_tester(inst, 0), ParameterRangeError);
}

TEST_CASE("adaptive probe accepts exactly the nearest member's answer pattern") {
    const AttackInstance inst =
        build_attack_instance(w("11111111"), two_member_property(8));
    const TesterHandle probe = adaptive_probe_tester(inst, 2);
    // Deterministic adaptive walk: a tiny independent reimplementation.
    for (const Word& x : all_words(8)) {
        std::size_t first = inst.difference_set()[0];
        const bool matched = x.value(first) == inst.nearest_member().value(first);
        const std::size_t second = inst.difference_set()[matched ? 1 : 2];
        const bool expected =
            matched && x.value(second) == inst.nearest_member().value(second);
        CHECK(acceptance_probability_exact(*probe.tree, x) == Rational(expected ? 1 : 0));
    }
}

TEST_CASE("constant testers decide without querying") {
    const TesterHandle accept = constant_tester(binary_alphabet(), 8, true);
    const TesterHandle reject = constant_tester(binary_alphabet(), 8, false);
    CHECK(acceptance_probability_exact(*accept.tree, w("10101010")) == Rational(1));
    CHECK(acceptance_probability_exact(*reject.tree, w("10101010")) == Rational(0));
    SeededCoinSource coins(1);
    CHECK(run(*accept.stepwise, w("11111111"), coins).real_query_count == 0);
}

TEST_CASE("registry constructs entries from names and parameters") {
    using nlohmann::json;
    CHECK(make_catalog_property("zero_property", json{{"n", 4}}).members().size() == 1);
    CHECK(make_catalog_property("two_member_property", json{{"n", 8}}).members().size() == 2);
    CHECK_THROWS_AS(make_catalog_property("no_such", json{{"n", 4}}), std::invalid_argument);

    const AttackInstance inst = make_catalog_instance("two_member_all_ones", json{{"n", 8}});
    CHECK(inst.difference_count() == 4);
    CHECK(make_catalog_instance("zero_all_ones", json{{"n", 8}}).difference_count() == 8);
    CHECK_THROWS_AS(make_catalog_instance("no_such", json{{"n", 8}}), std::invalid_argument);

    const TesterHandle sampler = make_catalog_tester(
        "uniform_sampler", json{{"q", 2}, {"with_replacement", true}}, &inst);
    CHECK(sampler.query_budget() == 2);
    const TesterHandle probe = make_catalog_tester("adaptive_probe", json{{"q", 2}}, &inst);
    CHECK(probe.query_budget() == 2);
    const TesterHandle constant =
        make_catalog_tester("constant", json{{"accept", true}}, &inst);
    CHECK(constant.query_budget() == 0);
    CHECK_THROWS_AS(make_catalog_tester("adaptive_probe", json{{"q", 2}}, nullptr),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_catalog_tester("no_such", json::object(), &inst),
                    std::invalid_argument);
}

TEST_CASE("catalog entry names are unique") {
    const auto& entries = catalog_entries();
    for (std::size_t i = 0; i < entries.size(); ++i)
        for (std::size_t j = i + 1; j < entries.size(); ++j)
            CHECK(entries[i].name != entries[j].name);
}

} // TEST_SUITE
