#include "qfloor/machines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "qfloor/errors.hpp"

namespace qfloor {

namespace {

class FunctionStepper : public Stepper {
public:
    explicit FunctionStepper(std::function<StepAction(const History&, CoinSource&)> fn)
      : fn_(std::move(fn)) {}

    StepAction step(const History& history, CoinSource& coins) override {
        return fn_(history, coins);
    }

private:
    std::function<StepAction(const History&, CoinSource&)> fn_;
};

} // namespace

StepwiseTester make_stateless_tester(
    Alphabet alphabet, std::size_t word_length, std::size_t query_budget,
    std::function<StepAction(const History&, CoinSource&)> step, std::string name) {
    StepwiseTester tester;
    tester.alphabet = std::move(alphabet);
    tester.word_length = word_length;
    tester.query_budget = query_budget;
    tester.name = std::move(name);
    tester.make_stepper = [step = std::move(step)]() {
        return std::make_unique<FunctionStepper>(step);
    };
    return tester;
}

Transcript run(const StepwiseTester& tester, const Word& input, CoinSource& coins) {
    if (input.alphabet() != tester.alphabet || input.size() != tester.word_length)
        throw std::invalid_argument("run: input incompatible with tester");
    if (!tester.make_stepper)
        throw std::invalid_argument("run: tester has no stepper factory");

    RecordingCoinSource recording(coins);
    const auto stepper = tester.make_stepper();
    History history;
    std::map<std::size_t, std::uint8_t> cache;
    Transcript transcript;

    const std::size_t step_cap = 64 * (tester.query_budget + 4) + 1024;
    for (std::size_t iteration = 0;; ++iteration) {
        if (iteration > step_cap)
            throw BudgetViolationError("run: stepper did not decide within the step cap");
        const StepAction action = stepper->step(history, recording);
        if (!action.is_query()) {
            transcript.accepted = action.accept();
            break;
        }
        const std::size_t j = action.position();
        if (j >= tester.word_length)
            throw InvalidQueryError("run: query position out of range");
        std::uint8_t answer;
        const auto it = cache.find(j);
        if (it != cache.end()) {
            answer = it->second; // repeat: answered from cache, no budget
        } else {
            if (cache.size() == tester.query_budget)
                throw BudgetViolationError("run: query budget exceeded");
            answer = input.value(j);
            cache.emplace(j, answer);
        }
        history.push_back({j, answer});
        transcript.queries.push_back({j, answer});
    }

    transcript.coin_outcomes = recording.outcomes();
    transcript.real_query_count = cache.size();
    transcript.virtual_answer_count = stepper->virtual_answer_count();
    transcript.mismatch_rejected = stepper->mismatch_rejected();
    return transcript;
}

// ---------------------------------------------------------------------------
// Tree validation and exact evaluation
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kMaxTreeDepth = 20000;

struct TreeValidator {
    const DecisionTree& tree;
    std::vector<char> seen;

    void visit(std::uint32_t index, std::set<std::size_t>& path_positions,
               std::size_t query_count, std::size_t depth) {
        if (index >= tree.nodes.size())
            throw TreeValidationError("tree: child index out of range");
        if (depth > kMaxTreeDepth)
            throw TreeValidationError("tree: path too deep");
        if (seen[index])
            throw TreeValidationError("tree: node reachable along two paths");
        seen[index] = 1;

        const TreeNode& node = tree.nodes[index];
        if (std::holds_alternative<LeafNode>(node))
            return;
        if (const auto* query = std::get_if<QueryNode>(&node)) {
            if (query->position >= tree.word_length)
                throw TreeValidationError("tree: query position out of range");
            if (query->children.size() != tree.alphabet.size())
                throw TreeValidationError("tree: query fan-out differs from alphabet size");
            if (path_positions.count(query->position))
                throw TreeValidationError("tree: position queried twice on one path");
            if (query_count + 1 > tree.query_budget)
                throw TreeValidationError("tree: path exceeds query budget");
            path_positions.insert(query->position);
            for (const std::uint32_t child : query->children)
                visit(child, path_positions, query_count + 1, depth + 1);
            path_positions.erase(query->position);
            return;
        }
        const auto& chance = std::get<ChanceNode>(node);
        if (chance.branches.empty())
            throw TreeValidationError("tree: chance node with no branches");
        Rational total(0);
        for (const ChanceBranch& branch : chance.branches) {
            if (!(branch.weight > Rational(0)))
                throw TreeValidationError("tree: chance weight not positive");
            total += branch.weight;
        }
        if (total != Rational(1))
            throw TreeValidationError("tree: chance weights do not sum to 1");
        for (const ChanceBranch& branch : chance.branches)
            visit(branch.child, path_positions, query_count, depth + 1);
    }
};

void check_input(const DecisionTree& tree, const Word& input) {
    if (input.alphabet() != tree.alphabet || input.size() != tree.word_length)
        throw std::invalid_argument("tree evaluation: input incompatible with tree");
}

} // namespace

void DecisionTree::validate() const {
    if (nodes.empty())
        throw TreeValidationError("tree: no nodes");
    if (word_length == 0)
        throw TreeValidationError("tree: word length must be positive");
    TreeValidator validator{*this, std::vector<char>(nodes.size(), 0)};
    std::set<std::size_t> path_positions;
    validator.visit(root, path_positions, 0, 0);
}

namespace {

Rational acceptance_rec(const DecisionTree& tree, std::uint32_t index, const Word& input) {
    const TreeNode& node = tree.nodes[index];
    if (const auto* leaf = std::get_if<LeafNode>(&node))
        return Rational(leaf->accept ? 1 : 0);
    if (const auto* query = std::get_if<QueryNode>(&node))
        return acceptance_rec(tree, query->children[input.value(query->position)], input);
    const auto& chance = std::get<ChanceNode>(node);
    Rational total(0);
    for (const ChanceBranch& branch : chance.branches)
        total += branch.weight * acceptance_rec(tree, branch.child, input);
    return total;
}

} // namespace

Rational acceptance_probability_exact(const DecisionTree& tree, const Word& input) {
    tree.validate();
    check_input(tree, input);
    return acceptance_rec(tree, tree.root, input);
}

namespace {

void marginals_rec(const DecisionTree& tree, std::uint32_t index, const Word& input,
                   const Rational& path_probability, std::map<std::size_t, Rational>& out) {
    const TreeNode& node = tree.nodes[index];
    if (std::holds_alternative<LeafNode>(node))
        return;
    if (const auto* query = std::get_if<QueryNode>(&node)) {
        // No path repeats a position, so accumulating once per visit is exact.
        auto [it, inserted] = out.try_emplace(query->position, path_probability);
        if (!inserted)
            it->second += path_probability;
        marginals_rec(tree, query->children[input.value(query->position)], input,
                      path_probability, out);
        return;
    }
    const auto& chance = std::get<ChanceNode>(node);
    for (const ChanceBranch& branch : chance.branches)
        marginals_rec(tree, branch.child, input, path_probability * branch.weight, out);
}

} // namespace

MarginalMap query_marginals_exact(const DecisionTree& tree, const Word& input) {
    tree.validate();
    check_input(tree, input);
    MarginalMap map;
    map.mode = EvalMode::Exact;
    marginals_rec(tree, tree.root, input, Rational(1), map.exact);
    return map;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimation
// ---------------------------------------------------------------------------

double hoeffding_half_width(std::size_t trials, double delta) {
    if (trials == 0)
        throw std::invalid_argument("hoeffding_half_width: trials must be >= 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("hoeffding_half_width: delta must be in (0,1)");
    return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(trials)));
}

std::size_t trials_for_half_width(double half_width, double delta) {
    if (!(half_width > 0.0))
        throw std::invalid_argument("trials_for_half_width: half width must be positive");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("trials_for_half_width: delta must be in (0,1)");
    return static_cast<std::size_t>(
        std::ceil(std::log(2.0 / delta) / (2.0 * half_width * half_width)));
}

McEstimate acceptance_probability_mc(const StepwiseTester& tester, const Word& input,
                                     std::size_t trials, std::uint64_t seed, double delta) {
    if (trials == 0)
        throw std::invalid_argument("acceptance_probability_mc: trials must be >= 1");
    std::size_t accepts = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        SeededCoinSource coins(derive_seed(seed, i));
        if (run(tester, input, coins).accepted)
            ++accepts;
    }
    return McEstimate{static_cast<double>(accepts) / static_cast<double>(trials),
                      hoeffding_half_width(trials, delta), 1.0 - delta};
}

MarginalMap query_marginals_mc(const StepwiseTester& tester, const Word& input,
                               std::size_t trials, std::uint64_t seed, double delta) {
    if (trials == 0)
        throw std::invalid_argument("query_marginals_mc: trials must be >= 1");
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t i = 0; i < trials; ++i) {
        SeededCoinSource coins(derive_seed(seed, i));
        const Transcript transcript = run(tester, input, coins);
        std::set<std::size_t> distinct;
        for (const QueryRecord& record : transcript.queries)
            distinct.insert(record.position);
        for (const std::size_t j : distinct)
            ++counts[j];
    }
    MarginalMap map;
    map.mode = EvalMode::MonteCarlo;
    const double half_width = hoeffding_half_width(trials, delta);
    for (const auto& [position, count] : counts)
        map.mc.emplace(position,
                       McEstimate{static_cast<double>(count) / static_cast<double>(trials),
                                  half_width, 1.0 - delta});
    return map;
}

// ---------------------------------------------------------------------------
// Non-adaptivity check
// ---------------------------------------------------------------------------

namespace {

// Per-subtree summary: `uniform` means every chance resolution yields one
// query sequence shared by all answer branches; `constant` additionally means
// that sequence is the same for every resolution (then `seq` holds it).
struct NaSummary {
    bool uniform = false;
    bool constant = false;
    std::vector<std::size_t> seq;
};

NaSummary na_analyze(const DecisionTree& tree, std::uint32_t index) {
    const TreeNode& node = tree.nodes[index];
    if (std::holds_alternative<LeafNode>(node))
        return NaSummary{true, true, {}};

    if (const auto* query = std::get_if<QueryNode>(&node)) {
        // Answers must not influence future positions: every child needs the
        // same resolution-independent sequence.
        NaSummary first = na_analyze(tree, query->children[0]);
        if (!first.uniform || !first.constant)
            return NaSummary{};
        for (std::size_t s = 1; s < query->children.size(); ++s) {
            const NaSummary other = na_analyze(tree, query->children[s]);
            if (!other.uniform || !other.constant || other.seq != first.seq)
                return NaSummary{};
        }
        NaSummary out{true, true, {query->position}};
        out.seq.insert(out.seq.end(), first.seq.begin(), first.seq.end());
        return out;
    }

    const auto& chance = std::get<ChanceNode>(node);
    NaSummary out{true, true, {}};
    bool have_seq = false;
    for (const ChanceBranch& branch : chance.branches) {
        const NaSummary child = na_analyze(tree, branch.child);
        if (!child.uniform)
            return NaSummary{};
        if (!child.constant) {
            out.constant = false;
        } else if (!have_seq) {
            out.seq = child.seq;
            have_seq = true;
        } else if (child.seq != out.seq) {
            out.constant = false;
        }
    }
    if (!out.constant)
        out.seq.clear();
    return out;
}

} // namespace

bool is_nonadaptive(const DecisionTree& tree) {
    tree.validate();
    return na_analyze(tree, tree.root).uniform;
}

// ---------------------------------------------------------------------------
// Form conversions
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kMaxUnrollNodes = std::size_t(1) << 22;

struct UnrollDriver {
    const StepwiseTester& tester;
    std::size_t max_draws;
    DecisionTree tree;

    std::uint32_t build(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& coin_prefix,
                        const std::vector<std::uint8_t>& answers) {
        if (tree.nodes.size() > kMaxUnrollNodes)
            throw std::runtime_error("unroll_to_tree: node limit exceeded");

        const auto stepper = tester.make_stepper();
        ReplayCoinSource coins(coin_prefix, /*throw_on_exhaustion=*/true);
        History history;
        std::map<std::size_t, std::uint8_t> cache;
        std::size_t answers_used = 0;
        const std::size_t step_cap = 64 * (tester.query_budget + 4) + 1024;

        for (std::size_t iteration = 0;; ++iteration) {
            if (iteration > step_cap)
                throw BudgetViolationError("unroll_to_tree: stepper did not decide");
            StepAction action = StepAction::decide(false);
            try {
                action = stepper->step(history, coins);
            } catch (const ReplayCoinSource::NeedCoin& need) {
                if (coin_prefix.size() >= max_draws)
                    throw CoinSpaceExhaustedError(
                        "unroll_to_tree: tester drew more coins than the coin space provides");
                ChanceNode chance;
                chance.branches.reserve(need.num_outcomes);
                auto extended = coin_prefix;
                extended.emplace_back(need.num_outcomes, 0);
                for (std::uint64_t o = 0; o < need.num_outcomes; ++o) {
                    extended.back().second = o;
                    chance.branches.push_back(
                        {Rational(1, static_cast<std::int64_t>(need.num_outcomes)),
                         build(extended, answers)});
                }
                return tree.add(std::move(chance));
            }
            if (!action.is_query())
                return tree.add(LeafNode{action.accept()});

            const std::size_t j = action.position();
            if (j >= tester.word_length)
                throw InvalidQueryError("unroll_to_tree: query position out of range");
            const auto it = cache.find(j);
            if (it != cache.end()) {
                history.push_back({j, it->second});
                continue;
            }
            if (cache.size() == tester.query_budget)
                throw BudgetViolationError("unroll_to_tree: query budget exceeded");
            if (answers_used < answers.size()) {
                const std::uint8_t answer = answers[answers_used++];
                cache.emplace(j, answer);
                history.push_back({j, answer});
                continue;
            }
            QueryNode query;
            query.position = j;
            query.children.reserve(tester.alphabet.size());
            auto extended = answers;
            extended.push_back(0);
            for (std::size_t s = 0; s < tester.alphabet.size(); ++s) {
                extended.back() = static_cast<std::uint8_t>(s);
                query.children.push_back(build(coin_prefix, extended));
            }
            return tree.add(std::move(query));
        }
    }
};

} // namespace

DecisionTree unroll_to_tree(const StepwiseTester& tester, const CoinSpace& coin_space) {
    if (!tester.make_stepper)
        throw std::invalid_argument("unroll_to_tree: tester has no stepper factory");
    UnrollDriver driver{tester, coin_space.max_draws, DecisionTree{}};
    driver.tree.alphabet = tester.alphabet;
    driver.tree.word_length = tester.word_length;
    driver.tree.query_budget = tester.query_budget;
    driver.tree.root = driver.build({}, {});
    driver.tree.validate();
    return driver.tree;
}

namespace {

class TreeWalkStepper : public Stepper {
public:
    explicit TreeWalkStepper(const DecisionTree& tree) : tree_(tree), current_(tree.root) {}

    StepAction step(const History& history, CoinSource& coins) override {
        if (pending_query_) {
            const auto& query = std::get<QueryNode>(tree_.nodes[current_]);
            current_ = query.children[history.back().answer];
            pending_query_ = false;
        }
        for (;;) {
            const TreeNode& node = tree_.nodes[current_];
            if (const auto* leaf = std::get_if<LeafNode>(&node))
                return StepAction::decide(leaf->accept);
            if (const auto* query = std::get_if<QueryNode>(&node)) {
                pending_query_ = true;
                return StepAction::query(query->position);
            }
            const auto& chance = std::get<ChanceNode>(node);
            current_ = sample_branch(chance, coins);
        }
    }

private:
    static std::uint32_t sample_branch(const ChanceNode& chance, CoinSource& coins) {
        // Draw over the common denominator so sampling is exact.
        std::int64_t common = 1;
        for (const ChanceBranch& branch : chance.branches) {
            common = std::lcm(common, branch.weight.den());
            if (common > (std::int64_t(1) << 56))
                throw std::runtime_error("stepwise_from_tree: chance denominators too large");
        }
        const std::uint64_t x = coins.draw(static_cast<std::uint64_t>(common));
        std::int64_t cumulative = 0;
        for (const ChanceBranch& branch : chance.branches) {
            cumulative += branch.weight.num() * (common / branch.weight.den());
            if (static_cast<std::int64_t>(x) < cumulative)
                return branch.child;
        }
        throw std::logic_error("stepwise_from_tree: weights did not cover the draw");
    }

    const DecisionTree& tree_;
    std::uint32_t current_;
    bool pending_query_ = false;
};

} // namespace

StepwiseTester stepwise_from_tree(const DecisionTree& tree, std::string name) {
    tree.validate();
    StepwiseTester tester;
    tester.alphabet = tree.alphabet;
    tester.word_length = tree.word_length;
    tester.query_budget = tree.query_budget;
    tester.name = std::move(name);
    auto shared = std::make_shared<DecisionTree>(tree);
    tester.make_stepper = [shared]() { return std::make_unique<TreeWalkStepper>(*shared); };
    return tester;
}

std::size_t TesterHandle::query_budget() const {
    if (stepwise && tree && stepwise->query_budget != tree->query_budget)
        throw std::logic_error("TesterHandle: stepwise and tree budgets disagree");
    if (stepwise)
        return stepwise->query_budget;
    if (tree)
        return tree->query_budget;
    throw std::invalid_argument("TesterHandle: no tester form present");
}

} // namespace qfloor
