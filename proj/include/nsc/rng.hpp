#ifndef NSC_RNG_HPP
#define NSC_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace nsc {

/// Seeded PRNG with portable derived distributions. std::mt19937 gives a fixed
/// bit stream; the float transforms below are spelled out so the same seed
/// yields the same numbers on every platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(static_cast<uint32_t>(seed ^ (seed >> 32))) {}

    uint32_t next_u32() { return gen_(); }

    /// Uniform in [0, 1) with 24 bits of mantissa.
    float uniform() { return static_cast<float>(gen_() >> 8) * (1.0f / 16777216.0f); }

    float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

    /// Box-Muller standard normal.
    float normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        float u1 = uniform();
        float u2 = uniform();
        if (u1 < 1e-12f) u1 = 1e-12f;
        const float r = std::sqrt(-2.0f * std::log(u1));
        const float a = 6.28318530717958647692f * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform integer in [0, n).
    uint32_t below(uint32_t n) {
        // Rejection sampling keeps the draw unbiased.
        const uint32_t limit = UINT32_MAX - UINT32_MAX % n;
        uint32_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = below(static_cast<uint32_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937 gen_;
    float spare_ = 0.0f;
    bool have_spare_ = false;
};

/// Stable stream split so init, batching and data generation draw
/// independent sequences from one user seed.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
    uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

}  // namespace nsc

#endif
