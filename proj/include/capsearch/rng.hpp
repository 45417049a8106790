#pragma once
#include <cmath>
#include <cstdint>
#include <random>

namespace capsearch {

// Deterministic random source. The engine is std::mt19937_64 (its output
// sequence is pinned by the standard), and every derived draw below is
// implemented explicitly so the same seed produces the same stream on any
// platform; std::*_distribution is avoided because its mapping is
// implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform integer in [0, n), unbiased via rejection on the top range.
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (second value discarded).
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

  private:
    std::mt19937_64 eng_;
};

// splitmix64 step; used to derive independent seed streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ULL + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform-with-replacement sampler over instance indices [0, n).
class InstanceSampler {
  public:
    InstanceSampler(std::int64_t n_instances, std::uint64_t seed)
        : rng_(seed), n_(n_instances) {}

    std::int64_t next() { return static_cast<std::int64_t>(rng_.bounded(static_cast<std::uint64_t>(n_))); }

    std::int64_t universe_size() const { return n_; }

  private:
    Rng rng_;
    std::int64_t n_;
};

}  // namespace capsearch
