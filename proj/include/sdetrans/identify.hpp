#pragma once

#include "sdetrans/edmd.hpp"
#include "sdetrans/levy.hpp"
#include "sdetrans/polynomial.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdetrans {

enum class NoiseMode { BrownianOnly, Levy };

/// Model recovered from a generator matrix: drift polynomials, squared
/// Gaussian diffusion polynomials a_ii = sigma1_ii^2 and Levy amplitudes
/// squared. The stability index alpha is an input, never estimated.
struct IdentifiedModel {
    std::shared_ptr<MonomialBasis> basis;
    std::vector<PolyCoeffs> drift;       // xi per coordinate
    std::vector<PolyCoeffs> a_diag;      // coefficients of sigma1_ii^2
    std::vector<double> sigma2_sq;       // per coordinate, >= 0
    double alpha = 1.0;
    double c = 1.0;
    NoiseMode mode = NoiseMode::BrownianOnly;

    std::vector<double> sigma2() const {
        std::vector<double> s;
        s.reserve(sigma2_sq.size());
        for (double v : sigma2_sq) s.push_back(std::sqrt(std::max(v, 0.0)));
        return s;
    }
};

/// Drift coefficients via the generator acting on the coordinate
/// observables f_i(x) = x_i:  xi_i = L B_{1i}.
inline std::vector<PolyCoeffs> identify_drift(const Matrix& L, const MonomialBasis& basis) {
    std::vector<PolyCoeffs> drift;
    drift.reserve(static_cast<size_t>(basis.dim()));
    for (int i = 0; i < basis.dim(); ++i) {
        Vector b1 = coordinate_selector(basis, i, 1).values;
        drift.emplace_back(basis, L * b1);
    }
    return drift;
}

struct SeparationOptions {
    double clamp_tolerance = 0.1;    // negative estimates within this are clamped to 0
    double degeneracy_floor = 1e-6;  // minimum admissible leading sigma1 coefficient
};

struct SeparationDiagnostics {
    // Residual of the over-determined eta equations, per coordinate:
    // max_k |rho_k - conv(eta,eta)_k| over k >= 1.
    std::vector<double> eta_residual;
    // Largest |rho| entry on monomials mixing coordinates (should be ~0
    // under the diagonal-structure assumption), per coordinate.
    std::vector<double> cross_coordinate_leakage;
    std::vector<std::string> warnings;
};

struct SeparationResult {
    std::vector<PolyCoeffs> a_diag;
    std::vector<double> sigma2_sq;
    SeparationDiagnostics diagnostics;
};

namespace detail {

inline Vector self_convolution(const Vector& eta) {
    Vector out = Vector::Zero(2 * eta.size() - 1);
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        for (Eigen::Index j = 0; j < eta.size(); ++j) out(i + j) += eta(i) * eta(j);
    return out;
}

/// Backward iteration recovering conv(eta,eta) from rho_1..rho_{2p2} and
/// then sigma2^2 from the constant entry. rho holds entries 0..2p2.
inline void separate_scalar(const Vector& rho, int p2, double c_tilde,
                            const SeparationOptions& opts, Vector& eta_tilde_out,
                            double& sigma2_sq_out, double& residual_out,
                            std::vector<std::string>& warnings, const std::string& tag) {
    const Eigen::Index top = 2 * p2;
    double lead = rho(top);
    if (lead < -opts.clamp_tolerance)
        throw std::runtime_error("separate_diffusions: leading coefficient rho_{2p2} = " +
                                 std::to_string(lead) + " is negative beyond tolerance (" + tag + ")");
    if (lead < 0.0) {
        warnings.push_back(tag + ": clamped negative leading coefficient " + std::to_string(lead));
        lead = 0.0;
    }
    Vector eta = Vector::Zero(p2 + 1);
    eta(p2) = std::sqrt(lead);
    if (eta(p2) < opts.degeneracy_floor)
        throw std::runtime_error(
            "separate_diffusions: estimated leading sigma1 coefficient is ~0 (" + tag +
            "); declare p2=0 and rerun in Brownian mode, or note that constant sigma1 "
            "cannot be separated from the Levy amplitude");
    for (Eigen::Index k = top - 1; k >= p2; --k) {
        const Eigen::Index j = k - p2;
        double cross = 0.0;
        for (Eigen::Index a = j + 1; a <= p2; ++a) {
            const Eigen::Index b = k - a;
            if (b > j && b <= p2 && b >= a) cross += (a == b ? 1.0 : 2.0) * eta(a) * eta(b);
        }
        eta(j) = (rho(k) - cross) / (2.0 * eta(p2));
    }
    Vector eta_tilde = self_convolution(eta);
    double residual = 0.0;
    for (Eigen::Index k = 1; k <= top; ++k) residual = std::max(residual, std::abs(rho(k) - eta_tilde(k)));
    double s2 = (rho(0) - eta_tilde(0)) / c_tilde;
    if (s2 < 0.0) {
        if (s2 < -opts.clamp_tolerance)
            throw std::runtime_error("separate_diffusions: sigma2^2 = " + std::to_string(s2) +
                                     " is negative beyond tolerance (" + tag + ")");
        warnings.push_back(tag + ": clamped negative sigma2^2 " + std::to_string(s2));
        s2 = 0.0;
    }
    eta_tilde_out = eta_tilde;
    sigma2_sq_out = s2;
    residual_out = residual;
}

}  // namespace detail

/// Split the generator's action on x_i^2 into the Gaussian diffusion
/// polynomial a_ii and the constant Levy contribution sigma2_ii^2 * C~.
/// Per coordinate, rho = L B_{2i} - 2 (x_i * xi_i); in Brownian mode rho
/// is a_ii directly, in Levy mode the backward iteration runs on the
/// x_i-aligned sub-vector of rho (the diagonal structure assumption).
inline SeparationResult separate_diffusions(const Matrix& L, const MonomialBasis& basis,
                                            const std::vector<PolyCoeffs>& drift, double alpha,
                                            double c, NoiseMode mode,
                                            const std::vector<int>& p2,
                                            const SeparationOptions& opts = {}) {
    const int d = basis.dim();
    if (static_cast<int>(drift.size()) != d)
        throw std::invalid_argument("separate_diffusions: drift size mismatch");
    if (mode == NoiseMode::Levy && static_cast<int>(p2.size()) != d)
        throw std::invalid_argument("separate_diffusions: need one p2 entry per coordinate");

    SeparationResult result;
    const double c_tilde = mode == NoiseMode::Levy ? levy_second_moment(alpha, c) : 0.0;

    for (int i = 0; i < d; ++i) {
        Vector b2 = coordinate_selector(basis, i, 2).values;
        auto shifted = multiply_by_coordinate(basis, drift[static_cast<size_t>(i)], i);
        if (shifted.truncated)
            result.diagnostics.warnings.push_back(
                "coordinate " + std::to_string(i + 1) +
                ": x_i * drift overflowed the dictionary degree; increase max_degree");
        Vector rho_full = L * b2 - 2.0 * shifted.coeffs.values;

        if (mode == NoiseMode::BrownianOnly) {
            result.a_diag.emplace_back(basis, rho_full);
            result.sigma2_sq.push_back(0.0);
            result.diagnostics.eta_residual.push_back(0.0);
            result.diagnostics.cross_coordinate_leakage.push_back(0.0);
            continue;
        }

        const int pi2 = p2[static_cast<size_t>(i)];
        if (pi2 < 1)
            throw std::runtime_error(
                "separate_diffusions: constant sigma1 (p2=0) cannot be separated from the "
                "Levy amplitude; rerun in Brownian mode or supply p2 >= 1");
        if (2 * pi2 > basis.max_degree())
            throw std::invalid_argument("separate_diffusions: need max_degree >= 2*p2");

        // Sub-vector of rho on monomials in x_i alone; everything else is leakage.
        Vector rho = Vector::Zero(2 * pi2 + 1);
        double leakage = 0.0;
        for (size_t k = 0; k < basis.size(); ++k) {
            const auto& exps = basis.exponents(k);
            bool pure = true;
            for (int j = 0; j < d; ++j)
                if (j != i && exps[static_cast<size_t>(j)] != 0) pure = false;
            const double v = rho_full(static_cast<Eigen::Index>(k));
            if (pure && exps[static_cast<size_t>(i)] <= 2 * pi2) {
                rho(exps[static_cast<size_t>(i)]) = v;
            } else {
                leakage = std::max(leakage, std::abs(v));
            }
        }

        Vector eta_tilde;
        double s2 = 0.0;
        double residual = 0.0;
        detail::separate_scalar(rho, pi2, c_tilde, opts, eta_tilde, s2, residual,
                                result.diagnostics.warnings, "coordinate " + std::to_string(i + 1));

        auto a = PolyCoeffs::zero(basis);
        for (Eigen::Index k = 0; k < eta_tilde.size(); ++k) {
            std::vector<int> exps(static_cast<size_t>(d), 0);
            exps[static_cast<size_t>(i)] = static_cast<int>(k);
            a.values(static_cast<Eigen::Index>(basis.find(exps))) = eta_tilde(k);
        }
        result.a_diag.push_back(std::move(a));
        result.sigma2_sq.push_back(s2);
        result.diagnostics.eta_residual.push_back(residual);
        result.diagnostics.cross_coordinate_leakage.push_back(leakage);
    }
    return result;
}

inline IdentifiedModel assemble_model(std::shared_ptr<MonomialBasis> basis,
                                      std::vector<PolyCoeffs> drift, std::vector<PolyCoeffs> a_diag,
                                      std::vector<double> sigma2_sq, double alpha, double c,
                                      NoiseMode mode) {
    IdentifiedModel model;
    model.basis = std::move(basis);
    const auto d = static_cast<size_t>(model.basis->dim());
    if (drift.size() != d || a_diag.size() != d || sigma2_sq.size() != d)
        throw std::invalid_argument("assemble_model: inconsistent dimensions");
    model.drift = std::move(drift);
    model.a_diag = std::move(a_diag);
    model.sigma2_sq = std::move(sigma2_sq);
    model.alpha = alpha;
    model.c = c;
    model.mode = mode;
    return model;
}

/// Minimum of each a_ii over a uniform check grid on the box; negative
/// values indicate an inconsistent diffusion estimate and are reported as
/// warnings by the pipeline.
inline std::vector<double> min_a_diag_on_grid(const IdentifiedModel& model, const Box& box,
                                              int points_per_axis = 64) {
    std::vector<double> mins;
    const int d = model.basis->dim();
    std::vector<double> x(static_cast<size_t>(d), 0.0);
    for (const auto& a : model.a_diag) {
        double lo = std::numeric_limits<double>::infinity();
        const int64_t total = static_cast<int64_t>(std::pow(points_per_axis, d));
        for (int64_t m = 0; m < total; ++m) {
            int64_t rem = m;
            for (int i = 0; i < d; ++i) {
                const auto ui = static_cast<size_t>(i);
                int idx = static_cast<int>(rem % points_per_axis);
                rem /= points_per_axis;
                x[ui] = box.lo[ui] + (idx + 0.5) * (box.hi[ui] - box.lo[ui]) / points_per_axis;
            }
            lo = std::min(lo, a.evaluate(x));
        }
        mins.push_back(lo);
    }
    return mins;
}

}  // namespace sdetrans
