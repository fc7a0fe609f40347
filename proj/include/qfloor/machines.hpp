// machines.hpp -- randomized query-making algorithms and their evaluation
//
// Two representations are supported. The stepwise form is a black box driven
// by the harness: a per-run stepper looks at the history of (position, answer)
// pairs plus a coin source and emits the next query or a decision. The
// decision-tree form is explicit and enables exact analysis: chance nodes
// carry rational weights, query nodes branch per alphabet symbol, leaves
// decide. Probability arithmetic on trees is exact rational; Monte Carlo
// estimation uses doubles with explicit Hoeffding half-widths, and the two
// are never mixed silently.
//
// Repeat queries: the harness answers a repeated position from cache without
// consuming budget, and tree paths never query a position twice. A query
// marginal is therefore always "queried at least once".

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qfloor/coins.hpp"
#include "qfloor/rational.hpp"
#include "qfloor/words.hpp"

namespace qfloor {

// ---------------------------------------------------------------------------
// Stepwise form
// ---------------------------------------------------------------------------

struct QueryRecord {
    std::size_t position;
    std::uint8_t answer;

    bool operator==(const QueryRecord&) const noexcept = default;
};

using History = std::vector<QueryRecord>;

/// One step outcome: either the next query position or the final decision.
class StepAction {
public:
    static StepAction query(std::size_t position) {
        StepAction a;
        a.is_query_ = true;
        a.position_ = position;
        return a;
    }
    static StepAction decide(bool accept) {
        StepAction a;
        a.is_query_ = false;
        a.accept_ = accept;
        return a;
    }

    bool is_query() const noexcept { return is_query_; }
    std::size_t position() const noexcept { return position_; }
    bool accept() const noexcept { return accept_; }

private:
    StepAction() = default;
    bool is_query_ = false;
    std::size_t position_ = 0;
    bool accept_ = false;
};

/// Per-run state of a stepwise tester. Given identical histories and coin
/// outcomes a stepper emits identical actions; replay testing asserts this.
class Stepper {
public:
    virtual ~Stepper() = default;

    virtual StepAction step(const History& history, CoinSource& coins) = 0;

    /// Queries resolved internally without touching the input (transform
    /// wrappers report these); 0 for ordinary testers.
    virtual std::size_t virtual_answer_count() const { return 0; }

    /// True when the final rejection was forced by an answer differing from
    /// the reference word of a non-adaptive wrapper.
    virtual bool mismatch_rejected() const { return false; }
};

struct StepwiseTester {
    Alphabet alphabet{"01"};
    std::size_t word_length = 0;
    std::size_t query_budget = 0;
    std::function<std::unique_ptr<Stepper>()> make_stepper;
    std::string name;
};

/// Wraps a stateless step function as a tester.
StepwiseTester make_stateless_tester(
    Alphabet alphabet, std::size_t word_length, std::size_t query_budget,
    std::function<StepAction(const History&, CoinSource&)> step, std::string name);

struct Transcript {
    std::vector<std::uint64_t> coin_outcomes;
    std::vector<QueryRecord> queries;      // emitted order, repeats included
    std::size_t real_query_count = 0;      // distinct positions, <= budget
    bool accepted = false;
    std::size_t virtual_answer_count = 0;
    bool mismatch_rejected = false;

    bool operator==(const Transcript&) const noexcept = default;
};

/// Executes one run of a stepwise tester over an input word. Answers queries
/// from the word, dedups repeats from cache, and enforces the query budget.
Transcript run(const StepwiseTester& tester, const Word& input, CoinSource& coins);

// ---------------------------------------------------------------------------
// Decision-tree form
// ---------------------------------------------------------------------------

struct LeafNode {
    bool accept = false;
};

struct QueryNode {
    std::size_t position = 0;
    std::vector<std::uint32_t> children; // one per alphabet symbol
};

struct ChanceBranch {
    Rational weight;
    std::uint32_t child = 0;
};

struct ChanceNode {
    std::vector<ChanceBranch> branches; // positive weights summing to 1
};

using TreeNode = std::variant<LeafNode, QueryNode, ChanceNode>;

struct DecisionTree {
    Alphabet alphabet{"01"};
    std::size_t word_length = 0;
    std::size_t query_budget = 0;
    std::uint32_t root = 0;
    std::vector<TreeNode> nodes;

    std::uint32_t add(TreeNode node) {
        nodes.push_back(std::move(node));
        return static_cast<std::uint32_t>(nodes.size() - 1);
    }

    /// Structural validation: weights positive and summing to exactly 1,
    /// query fan-out equal to the alphabet size, no node shared between
    /// paths, no position repeated on a path, path query counts within
    /// budget. Throws TreeValidationError.
    void validate() const;
};

/// Exact acceptance probability of the tree on an input word.
Rational acceptance_probability_exact(const DecisionTree& tree, const Word& input);

// ---------------------------------------------------------------------------
// Marginals and Monte Carlo estimates
// ---------------------------------------------------------------------------

struct McEstimate {
    double estimate = 0.0;
    double half_width = 0.0;
    double confidence = 0.0;
};

/// Exact rational analysis (tree form) or Monte Carlo estimation (stepwise
/// form). The two never mix silently: exact quantities are rationals, Monte
/// Carlo ones are (estimate, half-width, confidence) triples.
enum class EvalMode { Exact, MonteCarlo };

/// Hoeffding half-width sqrt(ln(2/delta) / (2 trials)).
double hoeffding_half_width(std::size_t trials, double delta);

/// Smallest trial count whose Hoeffding half-width at confidence 1-delta is
/// at most `half_width`.
std::size_t trials_for_half_width(double half_width, double delta);

struct McParams {
    double half_width = 0.02;
    double delta = 0.01;
    std::optional<std::size_t> trials; // overrides half_width when set

    std::size_t resolve_trials() const {
        return trials ? *trials : trials_for_half_width(half_width, delta);
    }
};

/// Per-position query probabilities: exact rationals or Monte Carlo triples.
/// Positions absent from the map have probability (estimate) zero.
struct MarginalMap {
    EvalMode mode = EvalMode::Exact;
    std::map<std::size_t, Rational> exact;
    std::map<std::size_t, McEstimate> mc;

    Rational exact_at(std::size_t position) const {
        const auto it = exact.find(position);
        return it == exact.end() ? Rational(0) : it->second;
    }
    double estimate_at(std::size_t position) const {
        const auto it = mc.find(position);
        return it == mc.end() ? 0.0 : it->second.estimate;
    }
};

/// Exact probability, per position, that a run of the tree on `input` queries
/// that position.
MarginalMap query_marginals_exact(const DecisionTree& tree, const Word& input);

/// Monte Carlo acceptance estimate over seeded independent trials. Trial i
/// uses the coin stream derive_seed(seed, i), so parallel and serial
/// execution would produce identical statistics.
McEstimate acceptance_probability_mc(const StepwiseTester& tester, const Word& input,
                                     std::size_t trials, std::uint64_t seed,
                                     double delta = 0.01);

/// Monte Carlo per-position query marginals with a shared half-width.
MarginalMap query_marginals_mc(const StepwiseTester& tester, const Word& input,
                               std::size_t trials, std::uint64_t seed,
                               double delta = 0.01);

// ---------------------------------------------------------------------------
// Structure checks and form conversions
// ---------------------------------------------------------------------------

/// True iff for every resolution of the chance nodes the sequence of query
/// positions is identical along every answer branch, i.e. query choices
/// depend only on coins.
bool is_nonadaptive(const DecisionTree& tree);

/// Declared finite coin budget for unrolling a stepwise tester.
struct CoinSpace {
    std::size_t max_draws = 16;
};

/// Unrolls a stepwise tester over all coin outcomes and answer branches into
/// an equivalent decision tree. Throws CoinSpaceExhaustedError when a run
/// wants more coins than the declared space provides.
DecisionTree unroll_to_tree(const StepwiseTester& tester, const CoinSpace& coin_space);

/// Adapts a decision tree into stepwise form: chance nodes consume coin
/// draws over the common denominator of their weights, so sampling stays
/// exact and deterministic given the coin stream.
StepwiseTester stepwise_from_tree(const DecisionTree& tree, std::string name);

/// A tester in whichever forms it has. Exact analysis needs the tree form,
/// Monte Carlo the stepwise form (a tree can stand in via stepwise_from_tree).
struct TesterHandle {
    std::string name;
    std::optional<StepwiseTester> stepwise;
    std::optional<DecisionTree> tree;

    /// Declared budget; the two forms must agree when both exist.
    std::size_t query_budget() const;
};

} // namespace qfloor
