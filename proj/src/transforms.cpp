#include "qfloor/transforms.hpp"

#include <algorithm>
#include <stdexcept>

#include "qfloor/errors.hpp"

namespace qfloor {

namespace {

void require_dimensions(const Alphabet& alphabet, std::size_t word_length,
                        const AttackInstance& instance, const char* who) {
    if (alphabet != instance.far_word().alphabet() || word_length != instance.word_length())
        throw std::invalid_argument(std::string(who) + ": tester/instance dimension mismatch");
}

std::vector<char> in_set_lookup(const AttackInstance& instance) {
    std::vector<char> in_set(instance.word_length(), 0);
    for (const std::size_t j : instance.difference_set())
        in_set[j] = 1;
    return in_set;
}

std::size_t max_query_depth(const DecisionTree& tree, std::uint32_t index) {
    const TreeNode& node = tree.nodes[index];
    if (std::holds_alternative<LeafNode>(node))
        return 0;
    if (const auto* query = std::get_if<QueryNode>(&node)) {
        std::size_t deepest = 0;
        for (const std::uint32_t child : query->children)
            deepest = std::max(deepest, max_query_depth(tree, child));
        return deepest + 1;
    }
    const auto& chance = std::get<ChanceNode>(node);
    std::size_t deepest = 0;
    for (const ChanceBranch& branch : chance.branches)
        deepest = std::max(deepest, max_query_depth(tree, branch.child));
    return deepest;
}

struct RestrictSurgeon {
    const DecisionTree& source;
    const Word& nearest;
    const std::vector<char>& in_set;
    DecisionTree out;
    std::size_t replaced = 0;

    std::uint32_t rebuild(std::uint32_t index) {
        const TreeNode& node = source.nodes[index];
        if (const auto* leaf = std::get_if<LeafNode>(&node))
            return out.add(*leaf);
        if (const auto* query = std::get_if<QueryNode>(&node)) {
            if (!in_set[query->position]) {
                // Answered without touching the input; other children pruned.
                ++replaced;
                return rebuild(query->children[nearest.value(query->position)]);
            }
            QueryNode rebuilt;
            rebuilt.position = query->position;
            rebuilt.children.reserve(query->children.size());
            for (const std::uint32_t child : query->children)
                rebuilt.children.push_back(rebuild(child));
            return out.add(std::move(rebuilt));
        }
        const auto& chance = std::get<ChanceNode>(node);
        ChanceNode rebuilt;
        rebuilt.branches.reserve(chance.branches.size());
        for (const ChanceBranch& branch : chance.branches)
            rebuilt.branches.push_back({branch.weight, rebuild(branch.child)});
        return out.add(std::move(rebuilt));
    }
};

} // namespace

std::pair<DecisionTree, TransformReport>
restrict_to_difference_set(const DecisionTree& tree, const AttackInstance& instance) {
    tree.validate();
    require_dimensions(tree.alphabet, tree.word_length, instance, "restrict_to_difference_set");

    const std::vector<char> in_set = in_set_lookup(instance);
    RestrictSurgeon surgeon{tree, instance.nearest_member(), in_set, DecisionTree{}, 0};
    surgeon.out.alphabet = tree.alphabet;
    surgeon.out.word_length = tree.word_length;
    surgeon.out.query_budget = tree.query_budget;
    surgeon.out.root = surgeon.rebuild(tree.root);
    surgeon.out.query_budget = max_query_depth(surgeon.out, surgeon.out.root);
    surgeon.out.validate();

    TransformReport report;
    report.original_budget = tree.query_budget;
    report.transformed_budget = surgeon.out.query_budget;
    report.virtual_answer_count = surgeon.replaced;
    report.structural_nonadaptive = is_nonadaptive(surgeon.out);
    return {std::move(surgeon.out), report};
}

namespace {

class RestrictStepper : public Stepper {
public:
    RestrictStepper(std::unique_ptr<Stepper> inner, std::vector<std::uint8_t> nearest_values,
                    std::vector<char> in_set, std::size_t step_cap)
      : inner_(std::move(inner)), nearest_values_(std::move(nearest_values)),
        in_set_(std::move(in_set)), step_cap_(step_cap) {}

    StepAction step(const History& history, CoinSource& coins) override {
        if (pending_real_query_) {
            inner_history_.push_back(history.back());
            pending_real_query_ = false;
        }
        for (std::size_t iteration = 0;; ++iteration) {
            if (iteration > step_cap_)
                throw BudgetViolationError("restrict wrapper: inner tester did not progress");
            const StepAction action = inner_->step(inner_history_, coins);
            if (!action.is_query())
                return action;
            const std::size_t j = action.position();
            if (j >= nearest_values_.size())
                throw InvalidQueryError("restrict wrapper: query position out of range");
            if (in_set_[j]) {
                pending_real_query_ = true;
                return action;
            }
            inner_history_.push_back({j, nearest_values_[j]});
            ++virtual_answers_;
        }
    }

    std::size_t virtual_answer_count() const override {
        return virtual_answers_ + inner_->virtual_answer_count();
    }
    bool mismatch_rejected() const override { return inner_->mismatch_rejected(); }

private:
    std::unique_ptr<Stepper> inner_;
    std::vector<std::uint8_t> nearest_values_;
    std::vector<char> in_set_;
    std::size_t step_cap_;
    History inner_history_;
    std::size_t virtual_answers_ = 0;
    bool pending_real_query_ = false;
};

} // namespace

std::pair<StepwiseTester, TransformReport>
restrict_to_difference_set(const StepwiseTester& tester, const AttackInstance& instance) {
    require_dimensions(tester.alphabet, tester.word_length, instance,
                       "restrict_to_difference_set");
    if (!tester.make_stepper)
        throw std::invalid_argument("restrict_to_difference_set: tester has no stepper factory");

    StepwiseTester wrapped;
    wrapped.alphabet = tester.alphabet;
    wrapped.word_length = tester.word_length;
    wrapped.query_budget = tester.query_budget;
    wrapped.name = tester.name + "|restricted";
    const std::size_t step_cap = 64 * (tester.query_budget + 4) + 1024;
    wrapped.make_stepper = [make_inner = tester.make_stepper,
                            values = instance.nearest_member().values(),
                            in_set = in_set_lookup(instance), step_cap]() {
        return std::make_unique<RestrictStepper>(make_inner(), values, in_set, step_cap);
    };

    TransformReport report;
    report.original_budget = tester.query_budget;
    report.transformed_budget = tester.query_budget;
    report.virtual_answer_count = std::nullopt; // counted per run in transcripts
    report.structural_nonadaptive = false;      // not established by this transform
    return {std::move(wrapped), report};
}

// ---------------------------------------------------------------------------
// Non-adaptivization
// ---------------------------------------------------------------------------

namespace {

struct Resolution {
    Rational weight;
    std::vector<std::size_t> sequence;
    bool accept = false;
};

constexpr std::size_t kMaxResolutions = std::size_t(1) << 20;

void enumerate_resolutions(const DecisionTree& tree, std::uint32_t index, const Word& nearest,
                           Rational weight, std::vector<std::size_t>& sequence,
                           std::vector<Resolution>& out) {
    if (out.size() > kMaxResolutions)
        throw std::runtime_error("make_nonadaptive: resolution limit exceeded");
    const TreeNode& node = tree.nodes[index];
    if (const auto* leaf = std::get_if<LeafNode>(&node)) {
        out.push_back({weight, sequence, leaf->accept});
        return;
    }
    if (const auto* query = std::get_if<QueryNode>(&node)) {
        sequence.push_back(query->position);
        enumerate_resolutions(tree, query->children[nearest.value(query->position)], nearest,
                              weight, sequence, out);
        sequence.pop_back();
        return;
    }
    const auto& chance = std::get<ChanceNode>(node);
    for (const ChanceBranch& branch : chance.branches)
        enumerate_resolutions(tree, branch.child, nearest, weight * branch.weight, sequence, out);
}

struct NonadaptiveBuilder {
    DecisionTree& out;
    const Word& nearest;

    // All remaining queries are still taken; every leaf below rejects.
    std::uint32_t reject_tail(const std::vector<std::size_t>& sequence, std::size_t i) {
        if (i == sequence.size())
            return out.add(LeafNode{false});
        QueryNode query;
        query.position = sequence[i];
        query.children.reserve(out.alphabet.size());
        for (std::size_t s = 0; s < out.alphabet.size(); ++s)
            query.children.push_back(reject_tail(sequence, i + 1));
        return out.add(std::move(query));
    }

    std::uint32_t matching_path(const std::vector<std::size_t>& sequence, std::size_t i,
                                bool accept) {
        if (i == sequence.size())
            return out.add(LeafNode{accept});
        QueryNode query;
        query.position = sequence[i];
        query.children.reserve(out.alphabet.size());
        const std::uint8_t expected = nearest.value(sequence[i]);
        for (std::size_t s = 0; s < out.alphabet.size(); ++s) {
            if (s == expected)
                query.children.push_back(matching_path(sequence, i + 1, accept));
            else
                query.children.push_back(reject_tail(sequence, i + 1));
        }
        return out.add(std::move(query));
    }
};

} // namespace

std::pair<DecisionTree, TransformReport>
make_nonadaptive(const DecisionTree& tree, const AttackInstance& instance) {
    auto [restricted, restrict_report] = restrict_to_difference_set(tree, instance);

    std::vector<Resolution> resolutions;
    std::vector<std::size_t> sequence;
    enumerate_resolutions(restricted, restricted.root, instance.nearest_member(), Rational(1),
                          sequence, resolutions);

    DecisionTree out;
    out.alphabet = tree.alphabet;
    out.word_length = tree.word_length;
    NonadaptiveBuilder builder{out, instance.nearest_member()};

    std::size_t longest = 0;
    for (const Resolution& resolution : resolutions)
        longest = std::max(longest, resolution.sequence.size());
    out.query_budget = longest;

    if (resolutions.size() == 1) {
        out.root = builder.matching_path(resolutions[0].sequence, 0, resolutions[0].accept);
    } else {
        ChanceNode top;
        top.branches.reserve(resolutions.size());
        for (const Resolution& resolution : resolutions)
            top.branches.push_back(
                {resolution.weight, builder.matching_path(resolution.sequence, 0, resolution.accept)});
        out.root = out.add(std::move(top));
    }
    out.validate();

    TransformReport report;
    report.original_budget = tree.query_budget;
    report.transformed_budget = out.query_budget;
    report.virtual_answer_count = restrict_report.virtual_answer_count;
    report.structural_nonadaptive = is_nonadaptive(out);
    if (!report.structural_nonadaptive)
        throw std::logic_error("make_nonadaptive: output tree is not structurally non-adaptive");
    return {std::move(out), report};
}

namespace {

class NonadaptiveStepper : public Stepper {
public:
    NonadaptiveStepper(std::unique_ptr<Stepper> restricted,
                       std::vector<std::uint8_t> nearest_values)
      : restricted_(std::move(restricted)), nearest_values_(std::move(nearest_values)) {}

    StepAction step(const History& history, CoinSource& coins) override {
        if (!simulation_done_) {
            // Query positions come from the simulated run against the nearest
            // member's values; the real answers in `history` play no part.
            const StepAction action = restricted_->step(simulated_history_, coins);
            if (action.is_query()) {
                const std::size_t j = action.position();
                if (j >= nearest_values_.size())
                    throw InvalidQueryError("nonadaptive wrapper: query position out of range");
                simulated_history_.push_back({j, nearest_values_[j]});
                return action;
            }
            simulation_done_ = true;
            simulated_accept_ = action.accept();
        }
        for (const QueryRecord& record : history) {
            if (record.answer != nearest_values_[record.position]) {
                mismatch_rejected_ = true;
                return StepAction::decide(false);
            }
        }
        return StepAction::decide(simulated_accept_);
    }

    std::size_t virtual_answer_count() const override {
        return restricted_->virtual_answer_count();
    }
    bool mismatch_rejected() const override { return mismatch_rejected_; }

private:
    std::unique_ptr<Stepper> restricted_;
    std::vector<std::uint8_t> nearest_values_;
    History simulated_history_;
    bool simulation_done_ = false;
    bool simulated_accept_ = false;
    bool mismatch_rejected_ = false;
};

} // namespace

std::pair<StepwiseTester, TransformReport>
make_nonadaptive(const StepwiseTester& tester, const AttackInstance& instance) {
    auto [restricted, restrict_report] = restrict_to_difference_set(tester, instance);

    StepwiseTester wrapped;
    wrapped.alphabet = tester.alphabet;
    wrapped.word_length = tester.word_length;
    wrapped.query_budget = tester.query_budget;
    wrapped.name = tester.name + "|nonadaptive";
    wrapped.make_stepper = [make_restricted = restricted.make_stepper,
                            values = instance.nearest_member().values()]() {
        return std::make_unique<NonadaptiveStepper>(make_restricted(), values);
    };

    TransformReport report;
    report.original_budget = tester.query_budget;
    report.transformed_budget = tester.query_budget;
    report.virtual_answer_count = std::nullopt;
    report.structural_nonadaptive = true; // by construction; tree form asserts it
    return {std::move(wrapped), report};
}

// ---------------------------------------------------------------------------
// Equivalence checking
// ---------------------------------------------------------------------------

namespace {

Rational mismatch_rec(const DecisionTree& tree, std::uint32_t index, const Word& input,
                      const Word& reference, const Rational& path_probability) {
    const TreeNode& node = tree.nodes[index];
    if (std::holds_alternative<LeafNode>(node))
        return Rational(0);
    if (const auto* query = std::get_if<QueryNode>(&node)) {
        if (input.value(query->position) != reference.value(query->position))
            return path_probability; // the event fires here, whole subtree counts once
        return mismatch_rec(tree, query->children[input.value(query->position)], input,
                            reference, path_probability);
    }
    const auto& chance = std::get<ChanceNode>(node);
    Rational total(0);
    for (const ChanceBranch& branch : chance.branches)
        total += mismatch_rec(tree, branch.child, input, reference,
                              path_probability * branch.weight);
    return total;
}

} // namespace

Rational mismatch_probability_exact(const DecisionTree& tree, const Word& input,
                                    const Word& reference) {
    tree.validate();
    if (input.size() != tree.word_length || reference.size() != tree.word_length)
        throw std::invalid_argument("mismatch_probability_exact: length mismatch");
    return mismatch_rec(tree, tree.root, input, reference, Rational(1));
}

EquivalenceReport transform_equivalence_check(const DecisionTree& original,
                                              const DecisionTree& transformed,
                                              const AttackInstance& instance,
                                              const std::vector<Word>& inputs) {
    EquivalenceReport report;
    const Word& nearest = instance.nearest_member();
    for (const Word& input : inputs) {
        EquivalenceRow row{input, acceptance_probability_exact(original, input),
                           acceptance_probability_exact(transformed, input),
                           mismatch_probability_exact(transformed, input, nearest), false};
        if (input == nearest)
            row.ok = row.acceptance_original == row.acceptance_transformed &&
                     row.mismatch_probability == Rational(0);
        else
            row.ok = row.acceptance_transformed <=
                     row.acceptance_original + row.mismatch_probability;
        report.all_ok = report.all_ok && row.ok;
        report.rows.push_back(std::move(row));
    }
    return report;
}

} // namespace qfloor
