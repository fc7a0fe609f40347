#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "qfloor/catalog.hpp"
#include "qfloor/coins.hpp"
#include "qfloor/errors.hpp"
#include "qfloor/serialize.hpp"

using namespace qfloor;
using nlohmann::json;

namespace {

struct TempFile {
    std::string path;

    explicit TempFile(const std::string& name, const std::string& contents)
      : path("/tmp/qfloor_test_" + name) {
        std::ofstream out(path, std::ios::trunc);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

/// Seeded generator of small valid trees for the round-trip property test.
DecisionTree random_tree(SplitMix64& rng, std::size_t n) {
    DecisionTree tree;
    tree.alphabet = Alphabet("01");
    tree.word_length = n;
    tree.query_budget = n;

    struct Builder {
        DecisionTree& tree;
        SplitMix64& rng;
        std::size_t n;

        std::uint32_t build(std::size_t depth, std::uint64_t used_mask) {
            const std::uint64_t kind = rng.next() % (depth >= 3 ? 1 : 3);
            if (kind == 0)
                return tree.add(LeafNode{(rng.next() % 2) == 0});
            if (kind == 1) {
                std::vector<std::size_t> free;
                for (std::size_t j = 0; j < n; ++j)
                    if (!(used_mask & (std::uint64_t(1) << j)))
                        free.push_back(j);
                if (free.empty())
                    return tree.add(LeafNode{true});
                const std::size_t position = free[rng.next() % free.size()];
                QueryNode query;
                query.position = position;
                for (std::size_t s = 0; s < 2; ++s)
                    query.children.push_back(
                        build(depth + 1, used_mask | (std::uint64_t(1) << position)));
                return tree.add(std::move(query));
            }
            ChanceNode chance;
            const std::size_t branches = 2 + rng.next() % 3;
            for (std::size_t b = 0; b < branches; ++b)
                chance.branches.push_back(
                    {Rational(1, static_cast<std::int64_t>(branches)),
                     build(depth + 1, used_mask)});
            return tree.add(std::move(chance));
        }
    } builder{tree, rng, n};

    tree.root = builder.build(0, 0);
    tree.validate();
    return tree;
}

} // namespace

TEST_SUITE("serialize") {

TEST_CASE("rationals round-trip bit-exactly and never as decimals") {
    const Rational r(33232930569601LL, 281474976710656LL);
    const json j = rational_to_json(r);
    CHECK(j.at("num").get<std::int64_t>() == 33232930569601LL);
    CHECK(rational_from_json(j) == r);
    CHECK(rational_from_json(json::parse("\"2/3\"")) == Rational(2, 3));
    CHECK(rational_from_json(json(5)) == Rational(5));
    CHECK_THROWS_AS(rational_from_json(json(0.5)), std::invalid_argument);
}

TEST_CASE("decision trees round-trip through JSON") {
    const TesterHandle sampler = uniform_sampler_tester(8, 2, false);
    const json j = tree_to_json(*sampler.tree);
    const DecisionTree back = tree_from_json(j);
    CHECK(tree_to_json(back) == j);
    // Identical evaluation after the round trip.
    const Word word = Word::parse(binary_alphabet(), "01100100");
    CHECK(acceptance_probability_exact(back, word) ==
          acceptance_probability_exact(*sampler.tree, word));
}

TEST_CASE("random trees round-trip and obey the marginal-sum bound") {
    SplitMix64 rng(8801);
    for (int i = 0; i < 50; ++i) {
        const DecisionTree tree = random_tree(rng, 5);
        const json j = tree_to_json(tree);
        CHECK(tree_to_json(tree_from_json(j)) == j);

        std::vector<std::uint8_t> values(5);
        for (auto& v : values)
            v = static_cast<std::uint8_t>(rng.next() % 2);
        const Word input(Alphabet("01"), values);
        Rational sum(0);
        for (const auto& [position, p] : query_marginals_exact(tree, input).exact)
            sum += p;
        CHECK(sum <= Rational(static_cast<std::int64_t>(tree.query_budget)));
        const Rational acceptance = acceptance_probability_exact(tree, input);
        CHECK(acceptance >= Rational(0));
        CHECK(acceptance <= Rational(1));
    }
}

TEST_CASE("malformed tree documents are rejected") {
    const TesterHandle sampler = uniform_sampler_tester(4, 1, true);
    json j = tree_to_json(*sampler.tree);
    j["nodes"][0]["kind"] = "mystery";
    CHECK_THROWS_AS(tree_from_json(j), std::invalid_argument);

    json bad_weights = tree_to_json(*sampler.tree);
    for (json& node : bad_weights["nodes"])
        if (node["kind"] == "chance")
            node["branches"][0]["weight"]["num"] = 2;
    CHECK_THROWS_AS(tree_from_json(bad_weights), TreeValidationError);
}

TEST_CASE("certificate JSON carries exact rationals and the verdict") {
    const AttackInstance inst =
        build_attack_instance(Word::parse(binary_alphabet(), "11111111"),
                              two_member_property(8));
    const Certificate cert = attack(uniform_sampler_tester(8, 1, true), inst, 1);
    const json j = certificate_to_json(cert);
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("verdict") == "RefutedByGap");
    CHECK(j.at("gap") == json{{"num", 1}, {"den", 8}});
    CHECK(j.at("union_bound") == json{{"num", 1}, {"den", 4}});
    CHECK(j.at("floor") == json{{"num", 4}, {"den", 3}});
    CHECK(j.at("flip_set") == json::array({4}));
    CHECK_FALSE(j.contains("trials")); // exact mode
}

TEST_CASE("property files load from JSON and plain text identically") {
    const TempFile as_json("prop.json",
                           R"({"alphabet":"01","n":8,"members":["00000000","11110000"]})");
    const TempFile as_text("prop.txt",
                           "# comment line\n01\n8\n00000000\n11110000\n");
    const Property from_json = load_property_file(as_json.path);
    const Property from_text = load_property_file(as_text.path);
    CHECK(from_json.members() == from_text.members());
    CHECK(from_json.word_length() == 8);
    CHECK(property_to_json(from_json) == property_to_json(from_text));
}

TEST_CASE("property file errors") {
    const TempFile bad_member("prop_bad.txt", "01\n8\n0000\n");
    CHECK_THROWS_AS(load_property_file(bad_member.path), std::invalid_argument);
    const TempFile bad_symbol("prop_sym.txt", "01\n4\n00x0\n");
    CHECK_THROWS_AS(load_property_file(bad_symbol.path), std::invalid_argument);
    CHECK_THROWS_AS(load_property_file("/tmp/qfloor_does_not_exist.txt"),
                    std::runtime_error);
}

TEST_CASE("empty properties load but stay unusable as targets") {
    const TempFile empty("prop_empty.json", R"({"alphabet":"01","n":4,"members":[]})");
    const Property p = load_property_file(empty.path);
    CHECK(p.empty());
    CHECK_THROWS_AS(distance_to_property(Word::parse(binary_alphabet(), "0000"), p),
                    EmptyPropertyError);
}

TEST_CASE("atomic text writes land complete") {
    const std::string path = "/tmp/qfloor_test_atomic.json";
    write_text_atomic(path, "{\"ok\": true}\n");
    std::ifstream in(path);
    std::string contents((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    CHECK(contents == "{\"ok\": true}\n");
    std::remove(path.c_str());
}

} // TEST_SUITE
