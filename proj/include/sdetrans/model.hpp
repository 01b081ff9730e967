#pragma once

#include "sdetrans/levy.hpp"
#include "sdetrans/polynomial.hpp"

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace sdetrans {

/// SDE with polynomial drift, diagonal polynomial Gaussian diffusion
/// (each sigma1[i] a polynomial in x_i alone) and diagonal constant
/// Levy amplitudes:
///   dX = b(X) dt + sigma1(X) dW + sigma2 dL.
struct SdeModel {
    std::shared_ptr<MonomialBasis> basis;   // basis the coefficient vectors live in
    std::vector<PolyCoeffs> drift;          // b_i, one per coordinate
    std::vector<PolyCoeffs> sigma1;         // (sigma1)_ii, polynomial in x_i only
    std::vector<double> sigma2;             // (sigma2)_ii, constant, >= 0
    std::optional<LevySpec> levy;           // absent => Brownian-only

    int dim() const { return basis ? basis->dim() : 0; }

    void validate() const {
        if (!basis) throw std::invalid_argument("SdeModel: missing basis");
        const auto d = static_cast<size_t>(basis->dim());
        if (drift.size() != d || sigma1.size() != d || sigma2.size() != d)
            throw std::invalid_argument("SdeModel: coefficient lists must have one entry per coordinate");
        for (double s : sigma2)
            if (s < 0.0) throw std::invalid_argument("SdeModel: sigma2 entries must be >= 0");
        for (size_t i = 0; i < d; ++i)
            for (size_t k = 0; k < basis->size(); ++k) {
                if (sigma1[i].values(static_cast<Eigen::Index>(k)) == 0.0) continue;
                const auto& exps = basis->exponents(k);
                for (size_t j = 0; j < d; ++j)
                    if (j != i && exps[j] != 0)
                        throw std::invalid_argument("SdeModel: sigma1[i] may only involve x_i");
            }
        if (levy) levy->validate();
    }

    bool has_levy() const {
        if (!levy) return false;
        for (double s : sigma2)
            if (s > 0.0) return true;
        return false;
    }

    /// One Euler-Maruyama step from x using the given per-sample stream.
    void euler_step(std::span<const double> x, double dt, SampleRng& rng,
                    std::span<double> out, JumpStats* stats = nullptr) const {
        const int d = dim();
        Vector row = basis->evaluate_row(x);
        const double sqrt_dt = std::sqrt(dt);
        for (int i = 0; i < d; ++i) {
            const auto ui = static_cast<size_t>(i);
            double y = x[ui] + drift[ui].values.dot(row) * dt +
                       sigma1[ui].values.dot(row) * sqrt_dt * rng.next_normal();
            if (levy && sigma2[ui] > 0.0)
                y += sigma2[ui] * sample_levy_increment(*levy, dt, rng, stats);
            out[ui] = y;
        }
    }
};

}  // namespace sdetrans
