#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace camid {

// Deterministic, implementation-owned random number machinery. The
// standard <random> distributions are implementation-defined, so every
// randomized procedure in the library draws through this engine to keep
// outputs reproducible bit-for-bit across runs and toolchains.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a, for deriving stream keys from identifiers.
std::uint64_t hash_string(const std::string& s);

// Folds a list of 64-bit keys into a single stream seed.
std::uint64_t mix_keys(std::initializer_list<std::uint64_t> keys);

// xoshiro256++ seeded through splitmix64.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // [0, 1), 53-bit resolution.
    double uniform01();

    // (0, 1]; safe as a log() argument.
    double uniform_open01();

    // Box-Muller; the second value of each pair is cached.
    double normal();
    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Uniform integer in [0, n), rejection sampled.
    std::uint64_t below(std::uint64_t n);

    // First k entries of a random permutation of [0, n) (partial
    // Fisher-Yates); requires k <= n.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t state_[4];
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace camid
