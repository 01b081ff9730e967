#pragma once

#include "sdetrans/identify.hpp"
#include "sdetrans/model.hpp"
#include "sdetrans/simulate.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace sdetrans {

/// Coefficients the elliptic problems need: drift b_i, squared Gaussian
/// diffusion a_ii and Levy amplitudes. Built from either a true SdeModel
/// or an IdentifiedModel.
struct PdeCoefficients {
    std::shared_ptr<MonomialBasis> basis;
    std::vector<PolyCoeffs> drift;
    std::vector<PolyCoeffs> a_diag;
    std::vector<double> sigma2;
    double alpha = 1.0;
    double c = 1.0;
    bool levy = false;

    static PdeCoefficients from_sde_model(const SdeModel& model) {
        model.validate();
        PdeCoefficients out;
        out.basis = model.basis;
        out.drift = model.drift;
        const auto& basis = *model.basis;
        const int d = basis.dim();
        for (int i = 0; i < d; ++i) {
            // a_ii = sigma1_ii^2: convolve the pure-x_i coefficients.
            std::vector<double> s1(static_cast<size_t>(basis.max_degree()) + 1, 0.0);
            int deg = 0;
            for (size_t k = 0; k < basis.size(); ++k) {
                double v = model.sigma1[static_cast<size_t>(i)].values(static_cast<Eigen::Index>(k));
                if (v == 0.0) continue;
                int p = basis.exponents(k)[static_cast<size_t>(i)];
                s1[static_cast<size_t>(p)] += v;
                deg = std::max(deg, p);
            }
            if (2 * deg > basis.max_degree())
                throw std::invalid_argument("PdeCoefficients: basis degree too small for sigma1^2");
            auto a = PolyCoeffs::zero(basis);
            for (int p = 0; p <= deg; ++p)
                for (int q = 0; q <= deg; ++q) {
                    std::vector<int> exps(static_cast<size_t>(d), 0);
                    exps[static_cast<size_t>(i)] = p + q;
                    a.values(static_cast<Eigen::Index>(basis.find(exps))) +=
                        s1[static_cast<size_t>(p)] * s1[static_cast<size_t>(q)];
                }
            out.a_diag.push_back(std::move(a));
        }
        out.sigma2 = model.sigma2;
        if (model.levy) {
            out.alpha = model.levy->alpha;
            out.c = model.levy->c;
        }
        out.levy = model.has_levy();
        return out;
    }

    static PdeCoefficients from_identified(const IdentifiedModel& model) {
        PdeCoefficients out;
        out.basis = model.basis;
        out.drift = model.drift;
        out.a_diag = model.a_diag;
        out.sigma2 = model.sigma2();
        out.alpha = model.alpha;
        out.c = model.c;
        out.levy = model.mode == NoiseMode::Levy;
        return out;
    }
};

/// Escape target: a band of the exterior (Levy) or a boundary face
/// (Brownian), measured along the first axis.
enum class TargetRegion { RightExterior, LeftExterior };

/// Tensor grid over the domain plus the exterior band of width
/// sigma2_i * c per axis that bounded jumps can reach.
struct GridGeometry {
    Box domain;
    std::vector<int> cells;  // n_i cells per axis; nodes at lo + j h, j = 0..n
    std::vector<int> ext;    // exterior node layers per side and axis
    std::vector<double> h;
    std::vector<int64_t> stride;
    int64_t total = 1;

    GridGeometry() = default;
    GridGeometry(Box dom, std::vector<int> n, const std::vector<double>& band_width)
        : domain(std::move(dom)), cells(std::move(n)) {
        domain.validate();
        const int d = domain.dim();
        if (static_cast<int>(cells.size()) != d)
            throw std::invalid_argument("GridGeometry: one cell count per axis required");
        for (int i = 0; i < d; ++i) {
            const auto ui = static_cast<size_t>(i);
            if (cells[ui] < 2) throw std::invalid_argument("GridGeometry: need at least 2 cells per axis");
            h.push_back((domain.hi[ui] - domain.lo[ui]) / cells[ui]);
            ext.push_back(band_width[ui] > 0.0
                              ? static_cast<int>(std::ceil(band_width[ui] / h[ui] - 1e-12))
                              : 0);
        }
        stride.assign(static_cast<size_t>(d), 1);
        for (int i = d - 1; i >= 0; --i) {
            stride[static_cast<size_t>(i)] = total;
            total *= axis_nodes(i);
        }
    }

    int dim() const { return domain.dim(); }
    int64_t axis_nodes(int i) const {
        return cells[static_cast<size_t>(i)] + 2 * static_cast<int64_t>(ext[static_cast<size_t>(i)]) + 1;
    }
    /// Physical index j in [-ext, n+ext] to flat offset contribution.
    int64_t flatten(const std::vector<int>& j) const {
        int64_t f = 0;
        for (int i = 0; i < dim(); ++i)
            f += (static_cast<int64_t>(j[static_cast<size_t>(i)]) + ext[static_cast<size_t>(i)]) *
                 stride[static_cast<size_t>(i)];
        return f;
    }
    std::vector<int> unflatten(int64_t f) const {
        std::vector<int> j(static_cast<size_t>(dim()));
        for (int i = 0; i < dim(); ++i) {
            j[static_cast<size_t>(i)] =
                static_cast<int>(f / stride[static_cast<size_t>(i)]) - ext[static_cast<size_t>(i)];
            f %= stride[static_cast<size_t>(i)];
        }
        return j;
    }
    bool is_interior(const std::vector<int>& j) const {
        for (int i = 0; i < dim(); ++i) {
            int ji = j[static_cast<size_t>(i)];
            if (ji < 1 || ji > cells[static_cast<size_t>(i)] - 1) return false;
        }
        return true;
    }
    std::vector<double> node(const std::vector<int>& j) const {
        std::vector<double> x(static_cast<size_t>(dim()));
        for (int i = 0; i < dim(); ++i)
            x[static_cast<size_t>(i)] = domain.lo[static_cast<size_t>(i)] +
                                        j[static_cast<size_t>(i)] * h[static_cast<size_t>(i)];
        return x;
    }
    bool same_grid(const GridGeometry& o) const {
        return cells == o.cells && ext == o.ext && domain.lo == o.domain.lo && domain.hi == o.domain.hi;
    }
};

/// Values on the extended grid; exterior nodes hold the imposed data.
struct ScalarField {
    GridGeometry geom;
    std::vector<double> values;  // size geom.total

    double at(const std::vector<int>& j) const { return values[static_cast<size_t>(geom.flatten(j))]; }
};

struct FieldError {
    double mean_abs = 0.0;
    double max_abs = 0.0;
};

/// Interior-node error. Exterior bands may differ (the learned sigma2
/// sets the band width), so only domain and cell counts must agree.
inline FieldError field_error(const ScalarField& f1, const ScalarField& f2) {
    const auto& g1 = f1.geom;
    const auto& g2 = f2.geom;
    if (g1.cells != g2.cells || g1.domain.lo != g2.domain.lo || g1.domain.hi != g2.domain.hi)
        throw std::invalid_argument("field_error: fields discretize different domains");
    FieldError err;
    int64_t count = 0;
    for (int64_t f = 0; f < g1.total; ++f) {
        auto j = g1.unflatten(f);
        if (!g1.is_interior(j)) continue;
        double d = std::abs(f1.values[static_cast<size_t>(f)] - f2.at(j));
        err.mean_abs += d;
        err.max_abs = std::max(err.max_abs, d);
        ++count;
    }
    err.mean_abs /= static_cast<double>(count);
    return err;
}

struct PdeOptions {
    double solver_tol = 1e-10;
    int max_iterations = 4000;
};

/// Finite-difference discretization of the generator over a grid.
/// Local terms use second-order central differences. The nonlocal term is
/// a symmetrized principal-value trapezoid quadrature on z_j = j h up to
/// z = c, with the (0,h) segment replaced by the inner-cell correction
/// C_alpha sigma2^2 h^{2-alpha}/(2-alpha) * f''_h; off-grid points
/// x +- sigma2 z are resolved by linear interpolation.
class FdGenerator {
public:
    FdGenerator(PdeCoefficients coeffs, const Box& domain, std::vector<int> cells)
        : coeffs_(std::move(coeffs)) {
        const int d = domain.dim();
        std::vector<double> band(static_cast<size_t>(d), 0.0);
        if (coeffs_.levy)
            for (int i = 0; i < d; ++i)
                band[static_cast<size_t>(i)] = coeffs_.sigma2[static_cast<size_t>(i)] * coeffs_.c;
        geom_ = GridGeometry(domain, std::move(cells), band);
        if (coeffs_.levy) build_quadrature();
    }

    const GridGeometry& geom() const { return geom_; }

    /// Emit the stencil of one interior row as (flat index, weight) pairs;
    /// duplicates may repeat and are to be summed by the caller.
    template <class Emit>
    void build_row(const std::vector<int>& j, Emit&& emit) const {
        const int d = geom_.dim();
        auto x = geom_.node(j);
        const int64_t center = geom_.flatten(j);
        for (int i = 0; i < d; ++i) {
            const auto ui = static_cast<size_t>(i);
            const double hi = geom_.h[ui];
            const double b = coeffs_.drift[ui].evaluate(x);
            const double a = std::max(coeffs_.a_diag[ui].evaluate(x), 0.0);
            const int64_t step = geom_.stride[ui];
            // 0.5 a f'' + b f': central differences while the row stays
            // monotone (a >= |b| h); upwind the drift where the diffusion
            // degenerates, otherwise the discrete maximum principle fails.
            if (a >= std::abs(b) * hi) {
                emit(center + step, 0.5 * a / (hi * hi) + b / (2.0 * hi));
                emit(center - step, 0.5 * a / (hi * hi) - b / (2.0 * hi));
                emit(center, -a / (hi * hi));
            } else {
                emit(center + step, 0.5 * a / (hi * hi) + std::max(b, 0.0) / hi);
                emit(center - step, 0.5 * a / (hi * hi) + std::max(-b, 0.0) / hi);
                emit(center, -a / (hi * hi) - std::abs(b) / hi);
            }
            if (!coeffs_.levy || coeffs_.sigma2[ui] <= 0.0) continue;

            const auto& quad = quadrature_[ui];
            // inner-cell correction on the (0,h) jump segment
            const double corr = quad.inner_correction / (hi * hi);
            emit(center + step, corr);
            emit(center - step, corr);
            emit(center, -2.0 * corr);
            // symmetrized trapezoid quadrature with linear interpolation
            const double s = coeffs_.sigma2[ui];
            for (size_t q = 0; q < quad.z.size(); ++q) {
                const double kernel = quad.kernel[q];
                const double delta = s * quad.z[q] / hi;  // displacement in index units
                const auto lo = static_cast<int64_t>(std::floor(delta));
                const double frac = delta - static_cast<double>(lo);
                emit(center + step * lo, kernel * (1.0 - frac));
                if (frac > 0.0) emit(center + step * (lo + 1), kernel * frac);
                emit(center - step * lo, kernel * (1.0 - frac));
                if (frac > 0.0) emit(center - step * (lo + 1), kernel * frac);
                emit(center, -2.0 * kernel);
            }
        }
    }

    /// Apply the discrete generator to a field given on the extended grid;
    /// returns Lf with interior nodes filled and zeros elsewhere.
    ScalarField apply(const std::function<double(std::span<const double>)>& f) const {
        ScalarField values{geom_, std::vector<double>(static_cast<size_t>(geom_.total), 0.0)};
        std::vector<double> fv(static_cast<size_t>(geom_.total));
        for (int64_t n = 0; n < geom_.total; ++n)
            fv[static_cast<size_t>(n)] = f(geom_.node(geom_.unflatten(n)));
        for (int64_t n = 0; n < geom_.total; ++n) {
            auto j = geom_.unflatten(n);
            if (!geom_.is_interior(j)) continue;
            double acc = 0.0;
            build_row(j, [&](int64_t nbr, double w) { acc += w * fv[static_cast<size_t>(nbr)]; });
            values.values[static_cast<size_t>(n)] = acc;
        }
        return values;
    }

    /// Solve L f = source on the interior with the given data on all
    /// boundary/exterior nodes.
    ScalarField solve(double source,
                      const std::function<double(std::span<const double>)>& exterior_data,
                      const PdeOptions& opts = {}) const {
        std::vector<int64_t> unknown_of_node(static_cast<size_t>(geom_.total), -1);
        std::vector<int64_t> node_of_unknown;
        ScalarField field{geom_, std::vector<double>(static_cast<size_t>(geom_.total), 0.0)};
        for (int64_t n = 0; n < geom_.total; ++n) {
            auto j = geom_.unflatten(n);
            if (geom_.is_interior(j)) {
                unknown_of_node[static_cast<size_t>(n)] = static_cast<int64_t>(node_of_unknown.size());
                node_of_unknown.push_back(n);
            } else {
                field.values[static_cast<size_t>(n)] = exterior_data(geom_.node(j));
            }
        }
        const auto n_unknown = static_cast<Eigen::Index>(node_of_unknown.size());
        Vector rhs = Vector::Constant(n_unknown, source);
        std::vector<Eigen::Triplet<double>> triplets;
        for (Eigen::Index r = 0; r < n_unknown; ++r) {
            auto j = geom_.unflatten(node_of_unknown[static_cast<size_t>(r)]);
            build_row(j, [&](int64_t nbr, double w) {
                int64_t u = unknown_of_node[static_cast<size_t>(nbr)];
                if (u >= 0) {
                    triplets.emplace_back(static_cast<int>(r), static_cast<int>(u), w);
                } else {
                    rhs(r) -= w * field.values[static_cast<size_t>(nbr)];
                }
            });
        }
        Eigen::SparseMatrix<double> mat(n_unknown, n_unknown);
        mat.setFromTriplets(triplets.begin(), triplets.end());

        Vector solution = linear_solve(mat, rhs, opts);
        double residual = (mat * solution - rhs).norm() / std::max(rhs.norm(), 1e-300);
        if (!(residual < 1e-6))
            throw std::runtime_error("FdGenerator::solve: linear system ill-conditioned or singular "
                                     "(relative residual " + std::to_string(residual) + ")");
        for (Eigen::Index r = 0; r < n_unknown; ++r)
            field.values[static_cast<size_t>(node_of_unknown[static_cast<size_t>(r)])] = solution(r);
        return field;
    }

private:
    struct AxisQuadrature {
        std::vector<double> z;       // jump sizes in (h, c]
        std::vector<double> kernel;  // C_alpha * w_j / z_j^{1+alpha}
        double inner_correction = 0.0;
    };

    void build_quadrature() {
        const double ca = c_alpha(coeffs_.alpha);
        const double alpha = coeffs_.alpha;
        const double c = coeffs_.c;
        quadrature_.resize(static_cast<size_t>(geom_.dim()));
        for (int i = 0; i < geom_.dim(); ++i) {
            auto& quad = quadrature_[static_cast<size_t>(i)];
            if (coeffs_.sigma2[static_cast<size_t>(i)] <= 0.0) continue;
            const double h = geom_.h[static_cast<size_t>(i)];
            if (h >= c) {  // whole jump support sits inside one cell
                quad.inner_correction = ca * square(coeffs_.sigma2[static_cast<size_t>(i)]) *
                                        std::pow(c, 2.0 - alpha) / (2.0 - alpha);
                continue;
            }
            quad.inner_correction = ca * square(coeffs_.sigma2[static_cast<size_t>(i)]) *
                                    std::pow(h, 2.0 - alpha) / (2.0 - alpha);
            const auto J = static_cast<int64_t>(std::floor(c / h + 1e-12));
            std::vector<std::pair<double, double>> zw;  // (z, trapezoid weight)
            for (int64_t q = 1; q <= J; ++q) {
                double w = (q == 1 || q == J) ? 0.5 * h : h;
                zw.emplace_back(static_cast<double>(q) * h, w);
            }
            const double tail = c - static_cast<double>(J) * h;
            if (tail > 1e-12 * h) {
                zw.back().second += 0.5 * tail;
                zw.emplace_back(c, 0.5 * tail);
            }
            for (auto [z, w] : zw) {
                quad.z.push_back(z);
                quad.kernel.push_back(ca * w / std::pow(z, 1.0 + alpha));
            }
        }
    }

    static double square(double v) { return v * v; }

    Vector linear_solve(const Eigen::SparseMatrix<double>& mat, const Vector& rhs,
                        const PdeOptions& opts) const {
        if (geom_.dim() == 1 || !coeffs_.levy) {
            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
            lu.compute(mat);
            if (lu.info() == Eigen::Success) return lu.solve(rhs);
            throw std::runtime_error("FdGenerator::solve: sparse factorization failed (singular system)");
        }
        // Nonlocal 2-D rows are dense along each axis; direct factorization
        // fills in badly, so use ILUT-preconditioned BiCGSTAB.
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> solver;
        solver.setTolerance(opts.solver_tol);
        solver.setMaxIterations(opts.max_iterations);
        solver.compute(mat);
        Vector sol = solver.solve(rhs);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("FdGenerator::solve: iterative solver stalled (error estimate " +
                                     std::to_string(solver.error()) + ")");
        return sol;
    }

    PdeCoefficients coeffs_;
    GridGeometry geom_;
    std::vector<AxisQuadrature> quadrature_;
};

/// Mean exit time: L u = -1 on D, u = 0 on the exterior (Levy) or
/// boundary (Brownian). Solutions are checked against the discrete
/// maximum principle and tiny negative undershoots are zeroed.
inline ScalarField solve_met(const PdeCoefficients& coeffs, const Box& domain,
                             std::vector<int> cells, const PdeOptions& opts = {}) {
    FdGenerator gen(coeffs, domain, std::move(cells));
    ScalarField u = gen.solve(-1.0, [](std::span<const double>) { return 0.0; }, opts);
    for (double& v : u.values) {
        if (v < -1e-8)
            throw std::runtime_error("solve_met: negative mean exit time " + std::to_string(v) +
                                     " violates the maximum principle");
        v = std::max(v, 0.0);
    }
    return u;
}

/// Escape probability: L p = 0, p = 1 on the target subset of the
/// exterior (or boundary face), 0 on the rest.
inline ScalarField solve_ep(const PdeCoefficients& coeffs, const Box& domain,
                            std::vector<int> cells, TargetRegion target,
                            const PdeOptions& opts = {}) {
    FdGenerator gen(coeffs, domain, std::move(cells));
    const double lo = domain.lo[0];
    const double hi = domain.hi[0];
    const double tol = 1e-12 * (hi - lo);
    auto indicator = [&](std::span<const double> x) {
        return target == TargetRegion::RightExterior ? (x[0] >= hi - tol ? 1.0 : 0.0)
                                                     : (x[0] <= lo + tol ? 1.0 : 0.0);
    };
    ScalarField p = gen.solve(0.0, indicator, opts);
    for (double& v : p.values) {
        if (v < -1e-8 || v > 1.0 + 1e-8)
            throw std::runtime_error("solve_ep: probability " + std::to_string(v) +
                                     " outside [0,1] violates the maximum principle");
        v = std::clamp(v, 0.0, 1.0);
    }
    return p;
}

/// Escape probability with a caller-supplied indicator on the exterior nodes.
inline ScalarField solve_ep(const PdeCoefficients& coeffs, const Box& domain,
                            std::vector<int> cells,
                            const std::function<double(std::span<const double>)>& indicator,
                            const PdeOptions& opts = {}) {
    FdGenerator gen(coeffs, domain, std::move(cells));
    ScalarField p = gen.solve(0.0, indicator, opts);
    for (double& v : p.values) v = std::clamp(v, 0.0, 1.0);
    return p;
}

}  // namespace sdetrans
