#pragma once

#include <cstdint>

namespace hemsim {

// splitmix64 (Steele, Lea, Flood). One fixed, documented generator is part of
// the reproducibility contract: a (master_seed, run_index) pair must produce
// the same trace on any platform and at any thread count.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Draw in [0, n) via 128-bit multiply-shift. Bias is bounded by n / 2^64,
    // far below anything observable at simulation scale.
    std::size_t next_below(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    double next_unit() {  // uniform in [0, 1)
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// Per-run seed derivation: run_seed = splitmix64 output of
// master_seed + (run_index + 1) * golden-ratio gamma.
inline std::uint64_t derive_run_seed(std::uint64_t master_seed, std::uint64_t run_index) {
    SplitMix64 g(master_seed + (run_index + 1) * 0x9E3779B97F4A7C15ULL);
    return g.next();
}

}  // namespace hemsim
