#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cglearn {

// splitmix64; used to derive independent engine seeds from (seed, counter) pairs
// so per-sample draws do not depend on scheduling or generation order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 0x243f6a8885a308d3ULL));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(seed, a), b);
}

// Thin deterministic draw helper over mt19937_64. Normal variates use Box-Muller
// on explicit uniforms, keeping the stream layout under our control instead of
// relying on std::normal_distribution's unspecified state.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : eng_(seed) {}

    double uniform01() {
        // (0,1): rejects exact zeros so log() below is always finite
        double u;
        do {
            u = std::uniform_real_distribution<double>(0.0, 1.0)(eng_);
        } while (u <= 0.0);
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t integer(std::uint64_t n) { // in [0, n)
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_);
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double th = 2.0 * M_PI * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace cglearn
