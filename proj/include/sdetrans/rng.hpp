#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sdetrans {

/// Small counter-seeded generator (splitmix64 core). Each Monte Carlo sample
/// gets its own stream keyed by (seed, sample index), so results do not
/// depend on how samples are distributed across threads.
class SampleRng {
public:
    SampleRng(uint64_t seed, uint64_t sample_index) {
        state_ = mix(seed ^ mix(sample_index + 0x9e3779b97f4a7c15ull));
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    /// Uniform in (0,1), never exactly 0 or 1.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (pairs cached).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_uniform();
        double u2 = next_uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Poisson by inversion; means above 60 are split into summands so the
    /// running product never underflows.
    uint64_t next_poisson(double mean) {
        uint64_t total = 0;
        while (mean > 60.0) {
            total += poisson_knuth(30.0);
            mean -= 30.0;
        }
        return total + poisson_knuth(mean);
    }

private:
    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    uint64_t poisson_knuth(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= next_uniform();
        } while (p > limit);
        return k - 1;
    }

    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace sdetrans
