#include "qfloor/catalog.hpp"

#include <algorithm>
#include <stdexcept>

#include "qfloor/errors.hpp"

namespace qfloor {

const Alphabet& binary_alphabet() {
    static const Alphabet alphabet("01");
    return alphabet;
}

const std::vector<CatalogEntry>& catalog_entries() {
    static const std::vector<CatalogEntry> entries = {
        {"zero_property", CatalogEntry::Kind::Property,
         "single all-zeros member; params: n"},
        {"two_member_property", CatalogEntry::Kind::Property,
         "all-zeros plus a half-ones member; nearest-member selection with |D| < n; "
         "params: n (even, >= 4)"},
        {"zero_all_ones", CatalogEntry::Kind::Instance,
         "zero_property(n) attacked from the all-ones word; |D| = n; params: n"},
        {"two_member_all_ones", CatalogEntry::Kind::Instance,
         "two_member_property(n) attacked from the all-ones word; |D| = n/2; params: n"},
        {"uniform_sampler", CatalogEntry::Kind::Tester,
         "samples q uniform positions, accepts iff all reads are 0; "
         "params: n, q, with_replacement"},
        {"adaptive_probe", CatalogEntry::Kind::Tester,
         "answer-dependent probe of the difference set; accepts iff answers match the "
         "nearest member; params: q (instance required)"},
        {"constant", CatalogEntry::Kind::Tester,
         "decides without querying; params: accept, optional n"},
    };
    return entries;
}

Property zero_property(std::size_t n) {
    if (n < 1)
        throw ParameterRangeError("zero_property: need n >= 1");
    const Alphabet& alphabet = binary_alphabet();
    std::vector<std::uint8_t> zeros(n, 0);
    return Property(alphabet, n, {Word(alphabet, zeros)});
}

Property two_member_property(std::size_t n) {
    if (n < 4 || n % 2 != 0)
        throw ParameterRangeError("two_member_property: need even n >= 4");
    const Alphabet& alphabet = binary_alphabet();
    std::vector<std::uint8_t> zeros(n, 0);
    std::vector<std::uint8_t> half(n, 0);
    for (std::size_t j = 0; j < n / 2; ++j)
        half[j] = 1;
    return Property(alphabet, n, {Word(alphabet, zeros), Word(alphabet, half)});
}

// ---------------------------------------------------------------------------
// Uniform sampler
// ---------------------------------------------------------------------------

namespace {

StepAction sampler_step(const History& history, CoinSource& coins, std::size_t n,
                        std::size_t q, bool with_replacement) {
    if (history.size() == q) {
        for (const QueryRecord& record : history)
            if (record.answer != 0)
                return StepAction::decide(false);
        return StepAction::decide(true);
    }
    if (with_replacement)
        return StepAction::query(coins.draw(n));
    std::vector<char> taken(n, 0);
    for (const QueryRecord& record : history)
        taken[record.position] = 1;
    std::vector<std::size_t> remaining;
    remaining.reserve(n - history.size());
    for (std::size_t j = 0; j < n; ++j)
        if (!taken[j])
            remaining.push_back(j);
    return StepAction::query(remaining[coins.draw(remaining.size())]);
}

/// P[the set of distinct sampled positions equals a fixed s-subset], by
/// inclusion-exclusion over sub-subsets for with-replacement sampling.
Rational distinct_set_weight(std::size_t s, std::size_t n, std::size_t q) {
    Rational weight(0);
    Rational binom(1); // C(s, t), updated incrementally
    for (std::size_t t = 0; t <= s; ++t) {
        if (t > 0)
            binom *= Rational(static_cast<std::int64_t>(s - t + 1),
                              static_cast<std::int64_t>(t));
        const Rational term = binom * pow(Rational(static_cast<std::int64_t>(t),
                                                   static_cast<std::int64_t>(n)),
                                          q);
        weight += (t % 2 == s % 2 ? term : -term);
    }
    return weight;
}

struct SamplerTreeBuilder {
    DecisionTree& tree;

    // Fixed query order per branch; every answer branch continues through the
    // remaining positions, so the tree is structurally non-adaptive.
    std::uint32_t build_path(const std::vector<std::size_t>& positions, std::size_t i,
                             bool all_zero) {
        if (i == positions.size())
            return tree.add(LeafNode{all_zero});
        QueryNode query;
        query.position = positions[i];
        query.children.reserve(tree.alphabet.size());
        for (std::size_t symbol = 0; symbol < tree.alphabet.size(); ++symbol)
            query.children.push_back(build_path(positions, i + 1, all_zero && symbol == 0));
        return tree.add(std::move(query));
    }
};

DecisionTree sampler_tree(std::size_t n, std::size_t q, bool with_replacement) {
    DecisionTree tree;
    tree.alphabet = binary_alphabet();
    tree.word_length = n;
    tree.query_budget = q;
    SamplerTreeBuilder builder{tree};

    ChanceNode top;
    std::vector<std::size_t> subset;
    // Enumerate subsets of [n] in size-grouped lexicographic order.
    for (std::size_t size = 1; size <= std::min(n, q); ++size) {
        if (!with_replacement && size != q)
            continue;
        const Rational weight =
            with_replacement
                ? distinct_set_weight(size, n, q)
                : Rational(1); // divided by C(n, q) below, branch by branch
        subset.assign(size, 0);
        for (std::size_t i = 0; i < size; ++i)
            subset[i] = i;
        for (;;) {
            top.branches.push_back({weight, builder.build_path(subset, 0, true)});
            // next combination
            std::size_t i = size;
            bool advanced = false;
            while (i-- > 0) {
                if (subset[i] + (size - i) < n) {
                    ++subset[i];
                    for (std::size_t j = i + 1; j < size; ++j)
                        subset[j] = subset[j - 1] + 1;
                    advanced = true;
                    break;
                }
            }
            if (!advanced)
                break;
        }
    }
    if (!with_replacement) {
        const std::int64_t count = static_cast<std::int64_t>(top.branches.size());
        for (ChanceBranch& branch : top.branches)
            branch.weight = Rational(1, count);
    }
    if (top.branches.size() == 1)
        tree.root = top.branches[0].child;
    else
        tree.root = tree.add(std::move(top));
    tree.validate();
    return tree;
}

std::string bool_word(bool value) { return value ? "true" : "false"; }

} // namespace

TesterHandle uniform_sampler_tester(std::size_t n, std::size_t q, bool with_replacement) {
    if (n < 1 || q < 1)
        throw ParameterRangeError("uniform_sampler_tester: need n >= 1 and q >= 1");
    if (!with_replacement && q > n)
        throw ParameterRangeError(
            "uniform_sampler_tester: without replacement needs q <= n");

    TesterHandle handle;
    handle.name = "uniform_sampler(n=" + std::to_string(n) + ",q=" + std::to_string(q) +
                  ",with_replacement=" + bool_word(with_replacement) + ")";
    handle.stepwise = make_stateless_tester(
        binary_alphabet(), n, q,
        [n, q, with_replacement](const History& history, CoinSource& coins) {
            return sampler_step(history, coins, n, q, with_replacement);
        },
        handle.name);
    handle.tree = sampler_tree(n, q, with_replacement);
    return handle;
}

// ---------------------------------------------------------------------------
// Adaptive probe
// ---------------------------------------------------------------------------

TesterHandle adaptive_probe_tester(const AttackInstance& instance, std::size_t q) {
    if (q < 1)
        throw ParameterRangeError("adaptive_probe_tester: need q >= 1");
    const auto& diff = instance.difference_set();
    if (q >= 2 && diff.size() < 3)
        throw ParameterRangeError(
            "adaptive_probe_tester: need |D| >= 3 for an actually adaptive probe");

    const std::vector<std::uint8_t> nearest_values = instance.nearest_member().values();
    const std::vector<std::size_t> positions = diff;

    TesterHandle handle;
    handle.name = "adaptive_probe(q=" + std::to_string(q) + ")";
    handle.stepwise = make_stateless_tester(
        instance.far_word().alphabet(), instance.word_length(), q,
        [q, positions, nearest_values](const History& history, CoinSource&) {
            const std::size_t step_index = history.size();
            if (step_index == q) {
                for (const QueryRecord& record : history)
                    if (record.answer != nearest_values[record.position])
                        return StepAction::decide(false);
                return StepAction::decide(true);
            }
            if (step_index == 0)
                return StepAction::query(positions[0]);
            const QueryRecord& previous = history.back();
            const bool matched = previous.answer == nearest_values[previous.position];
            const std::size_t index = matched ? 2 * step_index - 1 : 2 * step_index;
            return StepAction::query(positions[index % positions.size()]);
        },
        handle.name);
    handle.tree = unroll_to_tree(*handle.stepwise, CoinSpace{0});
    return handle;
}

TesterHandle constant_tester(const Alphabet& alphabet, std::size_t n, bool accept) {
    TesterHandle handle;
    handle.name = accept ? "constant_accept" : "constant_reject";
    handle.stepwise = make_stateless_tester(
        alphabet, n, 0,
        [accept](const History&, CoinSource&) { return StepAction::decide(accept); },
        handle.name);
    DecisionTree tree;
    tree.alphabet = alphabet;
    tree.word_length = n;
    tree.query_budget = 0;
    tree.root = tree.add(LeafNode{accept});
    handle.tree = std::move(tree);
    return handle;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace {

std::size_t require_n(const nlohmann::json& params, const AttackInstance* instance) {
    if (params.contains("n"))
        return params.at("n").get<std::size_t>();
    if (instance)
        return instance->word_length();
    throw std::invalid_argument("catalog: parameter 'n' required");
}

} // namespace

Property make_catalog_property(const std::string& name, const nlohmann::json& params) {
    if (name == "zero_property")
        return zero_property(params.at("n").get<std::size_t>());
    if (name == "two_member_property")
        return two_member_property(params.at("n").get<std::size_t>());
    throw std::invalid_argument("catalog: unknown property '" + name + "'");
}

AttackInstance make_catalog_instance(const std::string& name, const nlohmann::json& params) {
    const std::size_t n = params.at("n").get<std::size_t>();
    const Alphabet& alphabet = binary_alphabet();
    const Word all_ones = Word(alphabet, std::vector<std::uint8_t>(n, 1));
    if (name == "zero_all_ones")
        return build_attack_instance(all_ones, zero_property(n));
    if (name == "two_member_all_ones")
        return build_attack_instance(all_ones, two_member_property(n));
    throw std::invalid_argument("catalog: unknown instance '" + name + "'");
}

TesterHandle make_catalog_tester(const std::string& name, const nlohmann::json& params,
                                 const AttackInstance* instance) {
    if (name == "uniform_sampler") {
        const std::size_t n = require_n(params, instance);
        const std::size_t q = params.at("q").get<std::size_t>();
        const bool with_replacement = params.value("with_replacement", true);
        return uniform_sampler_tester(n, q, with_replacement);
    }
    if (name == "adaptive_probe") {
        if (!instance)
            throw std::invalid_argument("catalog: adaptive_probe needs an attack instance");
        return adaptive_probe_tester(*instance, params.at("q").get<std::size_t>());
    }
    if (name == "constant") {
        const std::size_t n = require_n(params, instance);
        const Alphabet alphabet =
            instance ? instance->far_word().alphabet() : binary_alphabet();
        return constant_tester(alphabet, n, params.at("accept").get<bool>());
    }
    throw std::invalid_argument("catalog: unknown tester '" + name + "'");
}

} // namespace qfloor
