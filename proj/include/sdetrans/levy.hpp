#pragma once

#include "sdetrans/rng.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace sdetrans {

/// Intensity constant of the symmetric alpha-stable jump measure
/// nu(dx) = C_alpha |x|^{-1-alpha} dx restricted to |x| < c:
///   C_alpha = alpha Gamma((1+alpha)/2) / (2^{1-alpha} sqrt(pi) Gamma(1-alpha/2)).
inline double c_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0))
        throw std::invalid_argument("c_alpha: alpha must lie in (0,2)");
    return alpha * std::tgamma((1.0 + alpha) / 2.0) /
           (std::pow(2.0, 1.0 - alpha) * std::sqrt(std::numbers::pi) * std::tgamma(1.0 - alpha / 2.0));
}

/// Second moment of the truncated jump measure per unit time:
///   C~ = C_alpha * int_{|y|<c} y^2 |y|^{-1-alpha} dy = 2 C_alpha c^{2-alpha} / (2-alpha).
inline double levy_second_moment(double alpha, double c) {
    if (c <= 0.0) throw std::invalid_argument("levy_second_moment: c must be positive");
    return 2.0 * c_alpha(alpha) * std::pow(c, 2.0 - alpha) / (2.0 - alpha);
}

/// Symmetric alpha-stable Levy motion with jumps bounded by c,
/// i.e. component triple (0, 0, nu) with nu as in c_alpha above.
struct LevySpec {
    double alpha = 1.0;          // stability index, in (0,2)
    double c = 1.0;              // jump bound
    uint64_t seed = 0;
    double small_jump_cutoff = 0.01;  // epsilon; jumps below it become Gaussian

    void validate() const {
        if (!(alpha > 0.0 && alpha < 2.0))
            throw std::invalid_argument("LevySpec: alpha must lie in (0,2)");
        if (!(c > 0.0)) throw std::invalid_argument("LevySpec: c must be positive");
        if (!(small_jump_cutoff > 0.0 && small_jump_cutoff < c))
            throw std::invalid_argument("LevySpec: cutoff must satisfy 0 < eps < c");
    }

    /// Compound-Poisson intensity of jumps with magnitude in [eps, c).
    double big_jump_rate() const {
        double eps = small_jump_cutoff;
        return 2.0 * c_alpha(alpha) * (std::pow(eps, -alpha) - std::pow(c, -alpha)) / alpha;
    }

    /// Std deviation per sqrt(dt) of the Gaussian replacing jumps below eps.
    double small_jump_sigma() const {
        return std::sqrt(levy_second_moment(alpha, small_jump_cutoff));
    }
};

struct JumpStats {
    uint64_t jump_count = 0;
    double max_jump_magnitude = 0.0;
};

/// One increment of the compensated bounded-jump process over dt,
/// via the Asmussen-Rosinski decomposition: jumps in [eps, c) drawn as a
/// compound Poisson process (inverse-CDF magnitudes), jumps below eps
/// replaced by a centered Gaussian with matched variance. The measure is
/// symmetric, so no compensator drift is needed.
inline double sample_levy_increment(const LevySpec& spec, double dt, SampleRng& rng,
                                    JumpStats* stats = nullptr) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_levy_increment: dt must be positive");
    const double eps = spec.small_jump_cutoff;
    double increment = spec.small_jump_sigma() * std::sqrt(dt) * rng.next_normal();

    const uint64_t n_jumps = rng.next_poisson(spec.big_jump_rate() * dt);
    const double eps_pow = std::pow(eps, -spec.alpha);
    const double c_pow = std::pow(spec.c, -spec.alpha);
    for (uint64_t j = 0; j < n_jumps; ++j) {
        double u = rng.next_uniform();
        double magnitude = std::pow(eps_pow - u * (eps_pow - c_pow), -1.0 / spec.alpha);
        double sign = (rng.next_u64() & 1ull) ? 1.0 : -1.0;
        increment += sign * magnitude;
        if (stats) {
            ++stats->jump_count;
            stats->max_jump_magnitude = std::max(stats->max_jump_magnitude, magnitude);
        }
    }
    return increment;
}

}  // namespace sdetrans
