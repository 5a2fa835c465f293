#pragma once

#include <array>
#include <cstdint>

namespace noiselab {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds.
PhiloxBlock philox4x32(PhiloxBlock counter, PhiloxKey key);

// Purpose tags keep independent draw families apart under one seed.
enum class StreamTag : std::uint32_t {
    SourceSample = 1,
    TargetSample = 2,
    SymmetricFlip = 3,
    MarginData = 4,
    MulticlassGeometry = 5,
    MulticlassSource = 6,
    MulticlassTarget = 7,
    Shuffle = 8,
    ModelInit = 9,
    Perturbation = 10,
    RegionChain = 11,
    MonteCarlo = 12,
    Subset = 13,
};

// A counter-based stream: every draw is a pure function of (seed, tag, index, position),
// so sample i of a dataset does not depend on how many samples precede it.
class Stream {
public:
    Stream(std::uint64_t seed, StreamTag tag, std::uint64_t index);

    std::uint64_t next_u64();
    double uniform();              // in (0, 1), never exactly 0 or 1
    double normal();
    std::uint64_t below(std::uint64_t bound);

private:
    void refill();

    PhiloxKey key_;
    std::uint64_t stream_;
    std::uint64_t position_ = 0;
    PhiloxBlock block_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace noiselab
