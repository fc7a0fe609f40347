// adversary.hpp -- the marginal attack, certificates, and validity checkers
//
// The attack non-adaptivizes the tester, measures per-position query
// marginals on the nearest member (after non-adaptivization the query
// distribution no longer depends on the input, so this loses no generality),
// flips the lowest-marginal positions, and compares acceptance on the nearest
// member against acceptance on the resulting hybrid. A valid distinguisher
// needs those probabilities to differ by the gap constant (completeness +
// soundness - 1, i.e. 1/3 at the default 2/3 thresholds), while the union
// bound caps the difference at q*l/|D|. Below the query floor that is a
// contradiction and the certificate's verdict says so.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qfloor/machines.hpp"
#include "qfloor/rational.hpp"
#include "qfloor/words.hpp"

namespace qfloor {

/// Acceptance/rejection probability thresholds. Both must exceed 1/2.
struct Thresholds {
    Rational accept_completeness{2, 3};
    Rational reject_soundness{2, 3};

    void validate() const;

    /// The contradiction constant: a valid distinguisher's acceptance
    /// probabilities on the nearest member and on any attack hybrid must
    /// differ by at least this much.
    Rational gap_constant() const {
        return accept_completeness + reject_soundness - Rational(1);
    }
};

enum class Verdict { RefutedByGap, Survives, NotApplicable, Inconclusive };

std::string to_string(Verdict verdict);

/// A probability under one evaluation mode.
struct ProbValue {
    EvalMode mode = EvalMode::Exact;
    Rational exact;
    McEstimate mc;

    double value() const {
        return mode == EvalMode::Exact ? exact.to_double() : mc.estimate;
    }
};

/// Machine-readable record of one attack.
struct Certificate {
    int schema_version = 1;
    std::string tester_name;
    EvalMode mode = EvalMode::Exact;
    std::uint64_t seed = 0;
    std::size_t trials = 0; // Monte Carlo only

    std::size_t word_length = 0;
    std::size_t difference_count = 0; // |D|
    std::size_t flip_count = 0;       // l
    std::size_t query_budget = 0;     // the submitted tester's q
    std::size_t transformed_budget = 0;

    MarginalMap marginals;              // over the difference set, zeros explicit
    std::vector<std::size_t> flip_set;  // the l lowest-marginal positions
    std::string attack_word;

    ProbValue accept_on_v;
    ProbValue accept_on_attack;
    ProbValue gap; // |accept_on_v - accept_on_attack|

    Rational union_bound; // q*l/|D|
    Rational floor;       // gap_constant*|D|/l; |D|/(3l) at default thresholds
    /// Floor derived from an externally guaranteed distance bound k <= |D|,
    /// when the caller supplies one.
    std::optional<Rational> floor_claimed;

    Thresholds thresholds;
    Verdict verdict = Verdict::Survives;
};

struct AttackOptions {
    EvalMode mode = EvalMode::Exact;
    std::uint64_t seed = 1;
    McParams mc;
    Thresholds thresholds;
    /// Externally guaranteed lower bound k on the difference count, for the
    /// additional floor_claimed field.
    std::optional<std::size_t> claimed_difference_bound;
};

/// The l positions with the smallest marginals, ties broken by smallest
/// position index. Exact mode asserts sum over the selection <= (l/|D|) *
/// (sum over the whole set).
std::vector<std::size_t> select_low_marginal_set(const MarginalMap& marginals,
                                                 const std::vector<std::size_t>& difference_set,
                                                 std::size_t flip_count);

/// Runs the full attack and fills a certificate. flip_count == |D| is allowed
/// but the verdict is NotApplicable (the floor needs flip_count < |D|).
Certificate attack(const TesterHandle& tester, const AttackInstance& instance,
                   std::size_t flip_count, const AttackOptions& options = {});

/// The query floor |D|/(3l): any distinguisher with fewer queries is
/// refutable at the default thresholds.
Rational query_floor(std::size_t difference_count, std::size_t flip_count);

struct FloorParams {
    std::size_t k = 0; // minimum difference count, ceil(alpha*n)
    std::size_t l = 0; // flip count, ceil(epsilon*n)
};

/// Scales relative distance alpha and test radius epsilon at input length n
/// into the integer attack parameters (k, l). Requires 0 < epsilon < alpha
/// <= 1 and n > max(1/epsilon, 1/(alpha-epsilon)); violations raise
/// ParameterRangeError naming the failing inequality.
FloorParams derive_floor_params(const Rational& alpha, const Rational& epsilon, std::size_t n);

// ---------------------------------------------------------------------------
// Validity checkers
// ---------------------------------------------------------------------------

enum class CheckOutcome { Pass, Fail, Inconclusive };

std::string to_string(CheckOutcome outcome);

struct HybridCheck {
    std::vector<std::size_t> subset;
    ProbValue acceptance;
    bool ok = false;
};

struct DistinguisherReport {
    CheckOutcome outcome = CheckOutcome::Fail;
    ProbValue accept_on_v;
    bool completeness_ok = false;
    bool exhaustive = false;
    std::size_t hybrids_checked = 0;
    /// The checked hybrid with the highest acceptance.
    std::optional<HybridCheck> worst;
    std::vector<HybridCheck> failures;
};

struct VerifyOptions {
    EvalMode mode = EvalMode::Exact;
    std::uint64_t seed = 1;
    McParams mc;
    Thresholds thresholds;
    /// Exhaustive hybrid sweep when C(|D|, l) is at most this; otherwise a
    /// seeded sample of this size plus the adversarial hybrid.
    std::size_t coverage = 4096;
};

/// Checks the distinguisher contract: the nearest member accepted with
/// probability >= accept_completeness and every flip_count-sized hybrid
/// rejected with probability >= reject_soundness.
DistinguisherReport verify_distinguisher(const TesterHandle& tester,
                                         const AttackInstance& instance,
                                         std::size_t flip_count,
                                         const VerifyOptions& options = {});

struct EpsilonFailure {
    std::string word;
    Rational distance;
    ProbValue acceptance;
    bool is_member = false;
};

struct EpsilonTestReport {
    CheckOutcome outcome = CheckOutcome::Fail;
    std::size_t words_swept = 0;
    std::size_t members_checked = 0;
    std::size_t far_words_checked = 0;
    /// Lowest member acceptance and highest far-word acceptance seen.
    std::optional<EpsilonFailure> worst_member;
    std::optional<EpsilonFailure> worst_far_word;
    std::vector<EpsilonFailure> failures;
};

struct EpsilonTestOptions {
    EvalMode mode = EvalMode::Exact;
    std::uint64_t seed = 1;
    McParams mc;
    Thresholds thresholds;
    /// The sweep enumerates every word of the property's length; word spaces
    /// larger than this bound are refused outright, never sampled.
    std::size_t enum_bound = std::size_t(1) << 20;
};

/// Sweeps every word: members must be accepted with probability >=
/// accept_completeness, words at distance >= epsilon rejected with
/// probability >= reject_soundness, anything in between is unconstrained.
EpsilonTestReport verify_epsilon_test(const TesterHandle& tester, const Property& property,
                                      const Rational& epsilon,
                                      const EpsilonTestOptions& options = {});

} // namespace qfloor
