// coins.hpp -- deterministic randomness for stepwise testers
//
// Stepwise testers draw coins through the CoinSource interface. The seeded
// source is a SplitMix64 stream with rejection sampling, so draws are exactly
// uniform and a fixed seed reproduces the same outcome sequence on every
// platform. The replay source feeds back a recorded outcome list; the tree
// unroller uses it to branch over all coin outcomes.

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace qfloor {

class CoinSource {
public:
    virtual ~CoinSource() = default;

    /// Uniform draw from {0, ..., num_outcomes - 1}. num_outcomes >= 1.
    virtual std::uint64_t draw(std::uint64_t num_outcomes) = 0;
};

/// SplitMix64 generator state; the building block for all seeded randomness.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Derives the seed for a numbered substream (e.g. a Monte Carlo trial) from
/// a master seed. Parallel and serial trial execution agree because every
/// trial's stream depends only on (master, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

class SeededCoinSource : public CoinSource {
public:
    explicit SeededCoinSource(std::uint64_t seed) noexcept : rng_(seed) {}

    std::uint64_t draw(std::uint64_t num_outcomes) override;

private:
    SplitMix64 rng_;
};

/// Replays a fixed outcome list. Signals NeedCoin past the end when
/// `throw_on_exhaustion` is set; otherwise exhaustion is an error.
class ReplayCoinSource : public CoinSource {
public:
    /// Thrown (as control flow) when a draw is requested beyond the recorded
    /// prefix and the caller asked to be told about it.
    struct NeedCoin {
        std::uint64_t num_outcomes;
    };

    explicit ReplayCoinSource(std::vector<std::pair<std::uint64_t, std::uint64_t>> outcomes,
                              bool throw_on_exhaustion = false)
      : outcomes_(std::move(outcomes)), throw_on_exhaustion_(throw_on_exhaustion) {}

    std::uint64_t draw(std::uint64_t num_outcomes) override;

    std::size_t consumed() const noexcept { return next_; }

private:
    std::vector<std::pair<std::uint64_t, std::uint64_t>> outcomes_; // (bound, outcome)
    bool throw_on_exhaustion_;
    std::size_t next_ = 0;
};

/// Records every outcome passing through to an inner source.
class RecordingCoinSource : public CoinSource {
public:
    explicit RecordingCoinSource(CoinSource& inner) noexcept : inner_(inner) {}

    std::uint64_t draw(std::uint64_t num_outcomes) override;

    const std::vector<std::uint64_t>& outcomes() const noexcept { return outcomes_; }

private:
    CoinSource& inner_;
    std::vector<std::uint64_t> outcomes_;
};

} // namespace qfloor
