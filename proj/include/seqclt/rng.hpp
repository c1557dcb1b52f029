#ifndef SEQCLT_RNG_HPP
#define SEQCLT_RNG_HPP

#include <cstdint>

namespace seqclt {

// Counter-based random streams. Each (seed, stream) pair yields an
// independent deterministic sequence, so work can be partitioned across
// any number of workers without changing the draws.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream)
        : state_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // uniform in [0,1) with 53 random bits
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in {0,...,n-1}; n is tiny in this codebase, modulo bias is
    // below any tolerance we test
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    int next_bit() { return static_cast<int>(next_u64() >> 63); }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

private:
    std::uint64_t state_;
};

} // namespace seqclt

#endif
