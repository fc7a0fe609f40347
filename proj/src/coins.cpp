#include "qfloor/coins.hpp"

#include <limits>
#include <stdexcept>

namespace qfloor {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    SplitMix64 mix(master ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    return mix.next();
}

std::uint64_t SeededCoinSource::draw(std::uint64_t num_outcomes) {
    if (num_outcomes == 0)
        throw std::invalid_argument("CoinSource: draw from empty outcome set");
    if (num_outcomes == 1)
        return 0;
    // Rejection sampling below 2^64 mod num_outcomes keeps draws exactly uniform.
    const std::uint64_t threshold = (0 - num_outcomes) % num_outcomes;
    for (;;) {
        const std::uint64_t x = rng_.next();
        if (x >= threshold)
            return x % num_outcomes;
    }
}

std::uint64_t ReplayCoinSource::draw(std::uint64_t num_outcomes) {
    if (num_outcomes == 0)
        throw std::invalid_argument("CoinSource: draw from empty outcome set");
    if (next_ >= outcomes_.size()) {
        if (throw_on_exhaustion_)
            throw NeedCoin{num_outcomes};
        throw std::logic_error("ReplayCoinSource: outcome list exhausted");
    }
    const auto& [bound, outcome] = outcomes_[next_];
    if (bound != num_outcomes)
        throw std::logic_error(
            "ReplayCoinSource: draw bound differs from the recorded run; "
            "the tester is not deterministic modulo coins");
    ++next_;
    return outcome;
}

std::uint64_t RecordingCoinSource::draw(std::uint64_t num_outcomes) {
    const std::uint64_t outcome = inner_.draw(num_outcomes);
    outcomes_.push_back(outcome);
    return outcome;
}

} // namespace qfloor
