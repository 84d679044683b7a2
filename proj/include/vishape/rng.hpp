#ifndef VISHAPE_RNG_HPP
#define VISHAPE_RNG_HPP

#include <cstdint>

namespace vishape {

// Xorshift generator; sampling-based diagnostics stay identical across
// platforms and standard libraries.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return state;
    }
    double uniform(double lo = 0.0, double hi = 1.0) {
        const double u = double(next() >> 11) / 9007199254740992.0;
        return lo + (hi - lo) * u;
    }
    int uniform_int(int lo, int hi) { return lo + int(next() % std::uint64_t(hi - lo + 1)); }
};

} // namespace vishape

#endif
