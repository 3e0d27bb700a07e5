#pragma once

#include <array>
#include <cstdint>

namespace wt {

/// Counter-based generator (Philox4x32-10). A (seed, stream) pair addresses an
/// independent substream; draws are a pure function of (seed, stream, counter),
/// so replays are bit-identical regardless of what other streams consumed.
class Rng {
public:
    explicit Rng(uint64_t seed, uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    uint64_t next_u64();
    /// Uniform double in [0, 1).
    double uniform();
    /// Uniform double in the open interval (0, 1).
    double uniform_open();
    /// Standard normal via Box-Muller (caches the paired draw).
    double normal();
    /// Uniform integer in [0, n).
    uint64_t uniform_below(uint64_t n);

    uint64_t seed() const { return seed_; }
    uint64_t stream() const { return stream_; }

    /// Raw Philox4x32-10 block function, exposed for known-answer tests.
    static std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter,
                                              const std::array<uint32_t, 2>& key);

private:
    void refill();

    uint64_t seed_;
    uint64_t stream_;
    uint64_t block_ = 0;
    std::array<uint64_t, 2> buf_{};
    int buf_pos_ = 2;  // empty
    bool have_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

/// Purpose tags for deriving substreams; keeps stream ids collision-free
/// across modules without a central registry of magic numbers.
enum class StreamPurpose : uint64_t {
    Init = 1,
    PriorSamples = 2,
    BasisSubsample = 3,
    TargetSamples = 4,
    UlaNoise = 5,
    Oracle = 6,
    BiasSplit = 7,
    Scratch = 8,
};

inline uint64_t substream(StreamPurpose p, uint64_t index = 0) {
    return (static_cast<uint64_t>(p) << 48) ^ index;
}

}  // namespace wt
