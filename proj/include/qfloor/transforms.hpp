// transforms.hpp -- the two without-loss-of-generality reductions
//
// restrict_to_difference_set: intercept any query outside the instance's
// difference set and answer it with the nearest member's symbol (which equals
// the far word's there) without touching the input or consuming budget.
//
// make_nonadaptive: simulate the restricted tester feeding it the nearest
// member's values to pick its query positions, take those queries on the real
// input, reject if any real answer differs from the nearest member, otherwise
// output the simulated decision. One coin stream serves the simulation and
// the decision, consumed in order, so the simulated decision is exactly the
// one the restricted tester would have made with those coins. The mismatch
// check runs after all queries, not eagerly.
//
// Both exist as tree surgery (for exact analysis) and stepwise wrappers (for
// Monte Carlo); make_nonadaptive composes the restriction first.

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qfloor/machines.hpp"
#include "qfloor/words.hpp"

namespace qfloor {

struct TransformReport {
    std::size_t original_budget = 0;
    std::size_t transformed_budget = 0;      // <= original_budget
    /// Out-of-set query nodes bypassed by tree surgery; unset for stepwise
    /// wrappers, where virtual answers are counted per run in the Transcript.
    std::optional<std::size_t> virtual_answer_count;
    bool structural_nonadaptive = false;
};

/// Tree surgery: every query node outside the difference set is replaced by
/// the child the nearest member's symbol selects; unreachable branches are
/// pruned. Acceptance is preserved exactly on every input agreeing with the
/// far word outside the difference set.
std::pair<DecisionTree, TransformReport>
restrict_to_difference_set(const DecisionTree& tree, const AttackInstance& instance);

/// Stepwise wrapper form of the same reduction.
std::pair<StepwiseTester, TransformReport>
restrict_to_difference_set(const StepwiseTester& tester, const AttackInstance& instance);

/// Tree surgery: enumerates the restricted tree's chance resolutions along
/// the nearest member's answers, emits one fixed query sequence per
/// resolution, and routes every non-matching answer into branches that still
/// take the remaining queries but reject at every leaf.
std::pair<DecisionTree, TransformReport>
make_nonadaptive(const DecisionTree& tree, const AttackInstance& instance);

/// Stepwise wrapper form of the same reduction.
std::pair<StepwiseTester, TransformReport>
make_nonadaptive(const StepwiseTester& tester, const AttackInstance& instance);

struct EquivalenceRow {
    Word input;
    Rational acceptance_original;
    Rational acceptance_transformed;
    Rational mismatch_probability;
    bool ok = false;
};

struct EquivalenceReport {
    std::vector<EquivalenceRow> rows;
    bool all_ok = true;
};

/// Exact probability that a run of the tree on `input` visits a query node
/// whose answer differs from `reference` at that position.
Rational mismatch_probability_exact(const DecisionTree& tree, const Word& input,
                                    const Word& reference);

/// Checks the distinguisher-relevant contract between an original tree and
/// its transform: exact acceptance equality on the nearest member (where the
/// mismatch rejection is asserted never to fire) and, on every other input,
/// transformed acceptance at most original acceptance plus the probability of
/// a visible mismatch.
EquivalenceReport transform_equivalence_check(const DecisionTree& original,
                                              const DecisionTree& transformed,
                                              const AttackInstance& instance,
                                              const std::vector<Word>& inputs);

} // namespace qfloor
