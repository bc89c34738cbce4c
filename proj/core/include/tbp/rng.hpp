#pragma once

// Project-fixed deterministic PRNG. Every random draw in the engine flows
// from one 64-bit seed through named streams, so results are reproducible
// across platforms and independent of any scheduling.
//
//   generator : xoshiro256** (Blackman & Vigna), state seeded via splitmix64
//   doubles   : 53-bit mantissa mapping, uniform in [0, 1)
//   streams   : derive_stream(seed, tag, index) hashes the tag text (FNV-1a)
//               into the seed so unrelated purposes never share a sequence

#include <array>
#include <cstdint>
#include <cstddef>
#include <cmath>
#include <string_view>
#include <vector>

namespace tbp {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent, named sub-seed of a master seed.
inline std::uint64_t derive_stream(std::uint64_t seed, std::string_view tag,
                                   std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::uint64_t state = seed ^ h;
    state ^= index * 0x9e3779b97f4a7c15ULL;
    std::uint64_t mixed = state;
    return splitmix64(mixed);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1); 53 significant bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    bool bernoulli(double p) { return next_double() < p; }

    // Standard normal via Box-Muller; consumes exactly two uniforms per draw.
    double normal() {
        double u1 = 1.0 - next_double();  // (0, 1]
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Bounded draw without modulo bias.
    std::size_t below(std::size_t n) {
        std::uint64_t threshold = (~std::uint64_t{0} / n) * n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= threshold);
        return static_cast<std::size_t>(x % n);
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace tbp
