#include "qfloor/adversary.hpp"

#include <algorithm>
#include <stdexcept>

#include "qfloor/errors.hpp"
#include "qfloor/transforms.hpp"

namespace qfloor {

void Thresholds::validate() const {
    const Rational half(1, 2);
    if (!(accept_completeness > half) || !(reject_soundness > half))
        throw std::invalid_argument("Thresholds: both thresholds must exceed 1/2");
    if (accept_completeness > Rational(1) || reject_soundness > Rational(1))
        throw std::invalid_argument("Thresholds: thresholds cannot exceed 1");
}

std::string to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::RefutedByGap: return "RefutedByGap";
        case Verdict::Survives: return "Survives";
        case Verdict::NotApplicable: return "NotApplicable";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

std::string to_string(CheckOutcome outcome) {
    switch (outcome) {
        case CheckOutcome::Pass: return "pass";
        case CheckOutcome::Fail: return "fail";
        case CheckOutcome::Inconclusive: return "inconclusive";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Selection and floors
// ---------------------------------------------------------------------------

std::vector<std::size_t> select_low_marginal_set(const MarginalMap& marginals,
                                                 const std::vector<std::size_t>& difference_set,
                                                 std::size_t flip_count) {
    const std::size_t d = difference_set.size();
    if (flip_count < 1 || flip_count > d)
        throw ParameterRangeError("select_low_marginal_set: need 1 <= flip count <= |D|");

    std::vector<std::size_t> order = difference_set;
    if (marginals.mode == EvalMode::Exact) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const Rational pa = marginals.exact_at(a), pb = marginals.exact_at(b);
            if (pa != pb)
                return pa < pb;
            return a < b;
        });
    } else {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double pa = marginals.estimate_at(a), pb = marginals.estimate_at(b);
            if (pa != pb)
                return pa < pb;
            return a < b;
        });
    }
    std::vector<std::size_t> selected(order.begin(), order.begin() + flip_count);
    std::sort(selected.begin(), selected.end());

    if (marginals.mode == EvalMode::Exact) {
        // Sum of the l smallest never exceeds l/|D| of the total.
        Rational selected_sum(0), total(0);
        for (const std::size_t j : difference_set)
            total += marginals.exact_at(j);
        for (const std::size_t j : selected)
            selected_sum += marginals.exact_at(j);
        if (selected_sum * Rational(static_cast<std::int64_t>(d)) >
            total * Rational(static_cast<std::int64_t>(flip_count)))
            throw std::logic_error("select_low_marginal_set: selection sum bound violated");
    }
    return selected;
}

Rational query_floor(std::size_t difference_count, std::size_t flip_count) {
    if (flip_count < 1 || flip_count > difference_count)
        throw ParameterRangeError("query_floor: need 1 <= flip count <= |D|");
    return Rational(static_cast<std::int64_t>(difference_count),
                    3 * static_cast<std::int64_t>(flip_count));
}

FloorParams derive_floor_params(const Rational& alpha, const Rational& epsilon, std::size_t n) {
    if (!(alpha > Rational(0)) || alpha > Rational(1))
        throw ParameterRangeError("derive_floor_params: need 0 < alpha <= 1");
    if (!(epsilon > Rational(0)))
        throw ParameterRangeError("derive_floor_params: need epsilon > 0");
    if (!(epsilon < alpha))
        throw ParameterRangeError("derive_floor_params: need epsilon < alpha");
    const Rational rn(static_cast<std::int64_t>(n));
    if (!(rn * epsilon > Rational(1)))
        throw ParameterRangeError("derive_floor_params: need n > 1/epsilon");
    if (!(rn * (alpha - epsilon) > Rational(1)))
        throw ParameterRangeError("derive_floor_params: need n > 1/(alpha - epsilon)");

    FloorParams params;
    params.k = static_cast<std::size_t>(ceil_to_int(alpha * rn));
    params.l = static_cast<std::size_t>(ceil_to_int(epsilon * rn));
    if (!(params.l >= 1 && params.l < params.k))
        throw std::logic_error("derive_floor_params: derived parameters out of order");
    return params;
}

// ---------------------------------------------------------------------------
// Attack
// ---------------------------------------------------------------------------

namespace {

ProbValue exact_prob(Rational value) {
    ProbValue p;
    p.mode = EvalMode::Exact;
    p.exact = std::move(value);
    return p;
}

ProbValue mc_prob(McEstimate value) {
    ProbValue p;
    p.mode = EvalMode::MonteCarlo;
    p.mc = value;
    return p;
}

bool position_in(const std::vector<std::size_t>& sorted, std::size_t j) {
    return std::binary_search(sorted.begin(), sorted.end(), j);
}

// Seed substream tags so the marginal, nearest-member, and attack estimates
// draw from disjoint deterministic streams.
constexpr std::uint64_t kMarginalStream = 101;
constexpr std::uint64_t kAcceptVStream = 102;
constexpr std::uint64_t kAcceptAttackStream = 103;
constexpr std::uint64_t kSampleStream = 7;
constexpr std::uint64_t kVerifyStream = 11;

} // namespace

Certificate attack(const TesterHandle& tester, const AttackInstance& instance,
                   std::size_t flip_count, const AttackOptions& options) {
    options.thresholds.validate();
    const auto& diff = instance.difference_set();
    const std::size_t d = diff.size();
    if (flip_count < 1 || flip_count > d)
        throw ParameterRangeError("attack: need 1 <= flip count <= |D|");

    Certificate cert;
    cert.tester_name = tester.name;
    cert.mode = options.mode;
    cert.seed = options.seed;
    cert.word_length = instance.word_length();
    cert.difference_count = d;
    cert.flip_count = flip_count;
    cert.query_budget = tester.query_budget();
    cert.thresholds = options.thresholds;

    const Word& nearest = instance.nearest_member();
    const std::int64_t q = static_cast<std::int64_t>(cert.query_budget);
    const std::int64_t dd = static_cast<std::int64_t>(d);
    const std::int64_t ll = static_cast<std::int64_t>(flip_count);

    if (options.mode == EvalMode::Exact) {
        if (!tester.tree)
            throw ModeUnavailableError("attack: exact mode needs a decision-tree form");
        auto [reduced, report] = make_nonadaptive(*tester.tree, instance);
        cert.transformed_budget = report.transformed_budget;

        const MarginalMap observed = query_marginals_exact(reduced, nearest);
        cert.marginals.mode = EvalMode::Exact;
        Rational marginal_sum(0);
        for (const auto& [position, p] : observed.exact) {
            if (!position_in(diff, position))
                throw std::logic_error("attack: reduced tester queried outside the difference set");
            marginal_sum += p;
        }
        if (marginal_sum > Rational(q))
            throw std::logic_error("attack: marginal sum exceeds the query budget");
        for (const std::size_t j : diff)
            cert.marginals.exact.emplace(j, observed.exact_at(j));

        cert.flip_set = select_low_marginal_set(cert.marginals, diff, flip_count);
        const Word attack_word = hybrid(instance, cert.flip_set);
        cert.attack_word = attack_word.str();

        const Rational accept_v = acceptance_probability_exact(reduced, nearest);
        const Rational accept_attack = acceptance_probability_exact(reduced, attack_word);
        const Rational gap = abs(accept_v - accept_attack);
        cert.accept_on_v = exact_prob(accept_v);
        cert.accept_on_attack = exact_prob(accept_attack);
        cert.gap = exact_prob(gap);

        cert.union_bound = Rational(q * ll, dd);
        if (gap > cert.union_bound)
            throw std::logic_error("attack: gap exceeds the union bound");
    } else {
        StepwiseTester stepwise = tester.stepwise
                                      ? *tester.stepwise
                                      : stepwise_from_tree(*tester.tree, tester.name);
        auto [reduced, report] = make_nonadaptive(stepwise, instance);
        cert.transformed_budget = report.transformed_budget;
        const std::size_t trials = options.mc.resolve_trials();
        cert.trials = trials;

        const MarginalMap observed = query_marginals_mc(
            reduced, nearest, trials, derive_seed(options.seed, kMarginalStream),
            options.mc.delta);
        cert.marginals.mode = EvalMode::MonteCarlo;
        const double half_width = hoeffding_half_width(trials, options.mc.delta);
        for (const auto& [position, estimate] : observed.mc)
            if (!position_in(diff, position))
                throw std::logic_error("attack: reduced tester queried outside the difference set");
        for (const std::size_t j : diff) {
            const auto it = observed.mc.find(j);
            cert.marginals.mc.emplace(j, it == observed.mc.end()
                                             ? McEstimate{0.0, half_width, 1.0 - options.mc.delta}
                                             : it->second);
        }

        cert.flip_set = select_low_marginal_set(cert.marginals, diff, flip_count);
        const Word attack_word = hybrid(instance, cert.flip_set);
        cert.attack_word = attack_word.str();

        const McEstimate accept_v = acceptance_probability_mc(
            reduced, nearest, trials, derive_seed(options.seed, kAcceptVStream),
            options.mc.delta);
        const McEstimate accept_attack = acceptance_probability_mc(
            reduced, attack_word, trials, derive_seed(options.seed, kAcceptAttackStream),
            options.mc.delta);
        cert.accept_on_v = mc_prob(accept_v);
        cert.accept_on_attack = mc_prob(accept_attack);
        McEstimate gap;
        gap.estimate = std::abs(accept_v.estimate - accept_attack.estimate);
        gap.half_width = accept_v.half_width + accept_attack.half_width;
        gap.confidence = 1.0 - 2.0 * options.mc.delta;
        cert.gap = mc_prob(gap);

        cert.union_bound = Rational(q * ll, dd);
    }

    const Rational gamma = options.thresholds.gap_constant();
    cert.floor = gamma * Rational(dd, ll);
    if (options.claimed_difference_bound) {
        if (*options.claimed_difference_bound > d)
            throw std::invalid_argument(
                "attack: claimed difference bound exceeds the actual difference count");
        cert.floor_claimed =
            gamma * Rational(static_cast<std::int64_t>(*options.claimed_difference_bound), ll);
    }

    const bool below_floor = Rational(q) < cert.floor;
    if (flip_count == d) {
        cert.verdict = Verdict::NotApplicable;
    } else if (options.mode == EvalMode::Exact) {
        cert.verdict = below_floor ? Verdict::RefutedByGap : Verdict::Survives;
    } else if (below_floor) {
        // Refute only when the demonstrated gap clears the boundary with the
        // sampling noise accounted for; never refute from noise alone.
        const double boundary = gamma.to_double();
        cert.verdict = (cert.gap.mc.estimate + cert.gap.mc.half_width < boundary)
                           ? Verdict::RefutedByGap
                           : Verdict::Inconclusive;
    } else {
        cert.verdict = Verdict::Survives;
    }
    return cert;
}

// ---------------------------------------------------------------------------
// Validity checkers
// ---------------------------------------------------------------------------

namespace {

std::uint64_t binomial_capped(std::size_t n, std::size_t k, std::uint64_t cap) {
    if (k > n)
        return 0;
    k = std::min(k, n - k);
    unsigned __int128 result = 1;
    for (std::size_t i = 0; i < k; ++i) {
        result = result * (n - i) / (i + 1);
        if (result > cap)
            return cap + 1;
    }
    return static_cast<std::uint64_t>(result);
}

bool next_combination(std::vector<std::size_t>& combo, std::size_t n) {
    const std::size_t l = combo.size();
    for (std::size_t i = l; i-- > 0;) {
        if (combo[i] + (l - i) < n) {
            ++combo[i];
            for (std::size_t j = i + 1; j < l; ++j)
                combo[j] = combo[j - 1] + 1;
            return true;
        }
    }
    return false;
}

/// Evaluates the submitted tester's acceptance on one word under the chosen
/// mode. Monte Carlo draws a fresh substream per call.
struct Evaluator {
    const TesterHandle& tester;
    EvalMode mode;
    std::size_t trials;
    double delta;
    std::uint64_t seed;
    std::uint64_t stream = 0;
    std::optional<StepwiseTester> stepwise_fallback;

    explicit Evaluator(const TesterHandle& handle, EvalMode eval_mode,
                       const McParams& mc, std::uint64_t master_seed)
      : tester(handle), mode(eval_mode), trials(mc.resolve_trials()), delta(mc.delta),
        seed(master_seed) {
        if (mode == EvalMode::Exact) {
            if (!tester.tree)
                throw ModeUnavailableError("verify: exact mode needs a decision-tree form");
        } else if (!tester.stepwise) {
            if (!tester.tree)
                throw ModeUnavailableError("verify: no tester form present");
            stepwise_fallback = stepwise_from_tree(*tester.tree, tester.name);
        }
    }

    ProbValue acceptance(const Word& input) {
        if (mode == EvalMode::Exact)
            return exact_prob(acceptance_probability_exact(*tester.tree, input));
        const StepwiseTester& form = tester.stepwise ? *tester.stepwise : *stepwise_fallback;
        return mc_prob(acceptance_probability_mc(form, input, trials,
                                                 derive_seed(seed, kVerifyStream + stream++),
                                                 delta));
    }
};

/// Three-way comparison of an evaluated probability against "at least
/// `bound`" (when `at_least`) or "at most `bound`".
CheckOutcome compare(const ProbValue& value, const Rational& bound, bool at_least) {
    if (value.mode == EvalMode::Exact) {
        const bool ok = at_least ? value.exact >= bound : value.exact <= bound;
        return ok ? CheckOutcome::Pass : CheckOutcome::Fail;
    }
    const double b = bound.to_double();
    if (at_least) {
        if (value.mc.estimate - value.mc.half_width >= b)
            return CheckOutcome::Pass;
        if (value.mc.estimate + value.mc.half_width < b)
            return CheckOutcome::Fail;
    } else {
        if (value.mc.estimate + value.mc.half_width <= b)
            return CheckOutcome::Pass;
        if (value.mc.estimate - value.mc.half_width > b)
            return CheckOutcome::Fail;
    }
    return CheckOutcome::Inconclusive;
}

CheckOutcome combine(CheckOutcome a, CheckOutcome b) {
    if (a == CheckOutcome::Fail || b == CheckOutcome::Fail)
        return CheckOutcome::Fail;
    if (a == CheckOutcome::Inconclusive || b == CheckOutcome::Inconclusive)
        return CheckOutcome::Inconclusive;
    return CheckOutcome::Pass;
}

} // namespace

DistinguisherReport verify_distinguisher(const TesterHandle& tester,
                                         const AttackInstance& instance,
                                         std::size_t flip_count, const VerifyOptions& options) {
    options.thresholds.validate();
    const auto& diff = instance.difference_set();
    const std::size_t d = diff.size();
    if (flip_count < 1 || flip_count > d)
        throw std::invalid_argument("verify_distinguisher: need 1 <= flip count <= |D|");

    Evaluator evaluator(tester, options.mode, options.mc, options.seed);
    DistinguisherReport report;
    report.accept_on_v = evaluator.acceptance(instance.nearest_member());
    const CheckOutcome completeness =
        compare(report.accept_on_v, options.thresholds.accept_completeness, /*at_least=*/true);
    report.completeness_ok = completeness == CheckOutcome::Pass;

    const Rational accept_cap = Rational(1) - options.thresholds.reject_soundness;
    CheckOutcome soundness = CheckOutcome::Pass;

    std::vector<std::vector<std::size_t>> subsets;
    const std::uint64_t total = binomial_capped(d, flip_count, options.coverage);
    if (total <= options.coverage) {
        report.exhaustive = true;
        std::vector<std::size_t> combo(flip_count);
        for (std::size_t i = 0; i < flip_count; ++i)
            combo[i] = i;
        do {
            std::vector<std::size_t> subset(flip_count);
            for (std::size_t i = 0; i < flip_count; ++i)
                subset[i] = diff[combo[i]];
            subsets.push_back(std::move(subset));
        } while (next_combination(combo, d));
    } else {
        report.exhaustive = false;
        // Seeded sample plus the adversarial flip set.
        SplitMix64 rng(derive_seed(options.seed, kSampleStream));
        for (std::size_t s = 0; s < options.coverage; ++s) {
            std::vector<std::size_t> pool = diff;
            for (std::size_t i = 0; i < flip_count; ++i) {
                const std::size_t pick = i + rng.next() % (pool.size() - i);
                std::swap(pool[i], pool[pick]);
            }
            std::vector<std::size_t> subset(pool.begin(), pool.begin() + flip_count);
            std::sort(subset.begin(), subset.end());
            subsets.push_back(std::move(subset));
        }
        AttackOptions attack_options;
        attack_options.mode = options.mode;
        attack_options.seed = options.seed;
        attack_options.mc = options.mc;
        attack_options.thresholds = options.thresholds;
        subsets.push_back(attack(tester, instance, flip_count, attack_options).flip_set);
    }

    for (const auto& subset : subsets) {
        HybridCheck check;
        check.subset = subset;
        check.acceptance = evaluator.acceptance(hybrid(instance, subset));
        const CheckOutcome outcome = compare(check.acceptance, accept_cap, /*at_least=*/false);
        check.ok = outcome == CheckOutcome::Pass;
        soundness = combine(soundness, outcome);
        if (!report.worst || check.acceptance.value() > report.worst->acceptance.value())
            report.worst = check;
        if (outcome == CheckOutcome::Fail)
            report.failures.push_back(check);
        ++report.hybrids_checked;
    }

    report.outcome = combine(completeness, soundness);
    return report;
}

EpsilonTestReport verify_epsilon_test(const TesterHandle& tester, const Property& property,
                                      const Rational& epsilon, const EpsilonTestOptions& options) {
    options.thresholds.validate();
    if (property.empty())
        throw EmptyPropertyError("verify_epsilon_test: empty property");
    if (!(epsilon > Rational(0)) || epsilon > Rational(1))
        throw std::invalid_argument("verify_epsilon_test: need 0 < epsilon <= 1");

    const Alphabet& alphabet = property.alphabet();
    const std::size_t n = property.word_length();
    double space = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        space *= static_cast<double>(alphabet.size());
    if (space > static_cast<double>(options.enum_bound))
        throw EnumerationBoundError(
            "verify_epsilon_test: word space exceeds the enumeration bound");

    Evaluator evaluator(tester, options.mode, options.mc, options.seed);
    const Rational accept_cap = Rational(1) - options.thresholds.reject_soundness;

    EpsilonTestReport report;
    CheckOutcome overall = CheckOutcome::Pass;

    std::vector<std::uint8_t> values(n, 0);
    bool done = false;
    while (!done) {
        const Word word(alphabet, values);
        const Rational distance = distance_to_property(word, property);
        ++report.words_swept;

        if (distance == Rational(0)) {
            EpsilonFailure entry{word.str(), distance, evaluator.acceptance(word), true};
            const CheckOutcome outcome =
                compare(entry.acceptance, options.thresholds.accept_completeness, true);
            overall = combine(overall, outcome);
            ++report.members_checked;
            if (!report.worst_member ||
                entry.acceptance.value() < report.worst_member->acceptance.value())
                report.worst_member = entry;
            if (outcome == CheckOutcome::Fail)
                report.failures.push_back(std::move(entry));
        } else if (distance >= epsilon) {
            EpsilonFailure entry{word.str(), distance, evaluator.acceptance(word), false};
            const CheckOutcome outcome = compare(entry.acceptance, accept_cap, false);
            overall = combine(overall, outcome);
            ++report.far_words_checked;
            if (!report.worst_far_word ||
                entry.acceptance.value() > report.worst_far_word->acceptance.value())
                report.worst_far_word = entry;
            if (outcome == CheckOutcome::Fail)
                report.failures.push_back(std::move(entry));
        }

        std::size_t j = n;
        done = true;
        while (j > 0) {
            --j;
            if (++values[j] < alphabet.size()) {
                done = false;
                break;
            }
            values[j] = 0;
        }
    }

    report.outcome = overall;
    return report;
}

} // namespace qfloor
