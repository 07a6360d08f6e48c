#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tuq {

// splitmix64 finalizer; used to derive independent per-block / per-sample
// seeds and to decorrelate sequential seeds.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic normal/uniform generator. std::normal_distribution is
// implementation-defined, so the Gaussian mapping is done by hand (Box-Muller)
// on top of the standardized mt19937_64 stream; identical seeds give identical
// streams on every platform. Seeds pass through splitmix64 first: mt19937
// carries visible first-output correlations across sequential raw seeds, and
// per-sample seeds are sequential by convention.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(mix_seed(seed, 0)) {}

    // Uniform in the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t next_u64() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tuq
