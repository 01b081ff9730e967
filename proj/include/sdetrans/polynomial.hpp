#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace sdetrans {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dictionary of multivariate monomials in graded lexicographic order:
/// ascending total degree, then descending power of the first coordinate.
/// For d=2, degree<=3 this yields 1, x, y, x^2, xy, y^2, x^3, x^2y, xy^2, y^3.
class MonomialBasis {
public:
    MonomialBasis(int dim, int max_degree) : dim_(dim), max_degree_(max_degree) {
        if (dim < 1) throw std::invalid_argument("MonomialBasis: dim must be >= 1");
        if (max_degree < 0) throw std::invalid_argument("MonomialBasis: max_degree must be >= 0");
        std::vector<int> exps(static_cast<size_t>(dim), 0);
        for (int deg = 0; deg <= max_degree; ++deg) enumerate(deg, 0, exps);
        for (size_t k = 0; k < exponents_.size(); ++k) index_[exponents_[k]] = k;
    }

    int dim() const { return dim_; }
    int max_degree() const { return max_degree_; }
    size_t size() const { return exponents_.size(); }

    const std::vector<int>& exponents(size_t k) const { return exponents_.at(k); }

    /// Index of the monomial with the given exponent tuple, or npos if absent.
    static constexpr size_t npos = static_cast<size_t>(-1);
    size_t find(const std::vector<int>& exps) const {
        auto it = index_.find(exps);
        return it == index_.end() ? npos : it->second;
    }

    /// Psi(x): row of all monomials evaluated at a point.
    Vector evaluate_row(std::span<const double> point) const {
        if (static_cast<int>(point.size()) != dim_)
            throw std::invalid_argument("evaluate_row: point dimension mismatch");
        Vector row(static_cast<Eigen::Index>(size()));
        // Powers are tiny (degree <= ~8); direct products beat pow().
        std::vector<std::vector<double>> powers(static_cast<size_t>(dim_));
        for (int i = 0; i < dim_; ++i) {
            powers[static_cast<size_t>(i)].resize(static_cast<size_t>(max_degree_) + 1);
            powers[static_cast<size_t>(i)][0] = 1.0;
            for (int p = 1; p <= max_degree_; ++p)
                powers[static_cast<size_t>(i)][static_cast<size_t>(p)] =
                    powers[static_cast<size_t>(i)][static_cast<size_t>(p - 1)] * point[static_cast<size_t>(i)];
        }
        for (size_t k = 0; k < size(); ++k) {
            double v = 1.0;
            for (int i = 0; i < dim_; ++i)
                v *= powers[static_cast<size_t>(i)][static_cast<size_t>(exponents_[k][static_cast<size_t>(i)])];
            row(static_cast<Eigen::Index>(k)) = v;
        }
        return row;
    }

    bool operator==(const MonomialBasis& other) const {
        return dim_ == other.dim_ && max_degree_ == other.max_degree_;
    }

private:
    void enumerate(int remaining, int coord, std::vector<int>& exps) {
        if (coord == dim_ - 1) {
            exps[static_cast<size_t>(coord)] = remaining;
            exponents_.push_back(exps);
            return;
        }
        for (int p = remaining; p >= 0; --p) {
            exps[static_cast<size_t>(coord)] = p;
            enumerate(remaining - p, coord + 1, exps);
        }
        exps[static_cast<size_t>(coord)] = 0;
    }

    int dim_;
    int max_degree_;
    std::vector<std::vector<int>> exponents_;
    std::map<std::vector<int>, size_t> index_;
};

/// Coefficient vector over a MonomialBasis; represents f = B^T Psi^T.
struct PolyCoeffs {
    const MonomialBasis* basis = nullptr;
    Vector values;

    PolyCoeffs() = default;
    PolyCoeffs(const MonomialBasis& b, Vector v) : basis(&b), values(std::move(v)) {
        if (values.size() != static_cast<Eigen::Index>(b.size()))
            throw std::invalid_argument("PolyCoeffs: length must equal basis size");
    }
    static PolyCoeffs zero(const MonomialBasis& b) {
        return PolyCoeffs(b, Vector::Zero(static_cast<Eigen::Index>(b.size())));
    }

    double evaluate(std::span<const double> point) const {
        return values.dot(basis->evaluate_row(point));
    }
};

inline PolyCoeffs build_basis_poly(const MonomialBasis& basis, Vector v) {
    return PolyCoeffs(basis, std::move(v));
}

/// Unit coefficient vector selecting x_i^power (power in {1,2}); i is 0-based.
inline PolyCoeffs coordinate_selector(const MonomialBasis& basis, int i, int power) {
    if (i < 0 || i >= basis.dim())
        throw std::invalid_argument("coordinate_selector: coordinate index out of range");
    if (power != 1 && power != 2)
        throw std::invalid_argument("coordinate_selector: power must be 1 or 2");
    std::vector<int> exps(static_cast<size_t>(basis.dim()), 0);
    exps[static_cast<size_t>(i)] = power;
    size_t k = basis.find(exps);
    if (k == MonomialBasis::npos)
        throw std::invalid_argument("coordinate_selector: monomial not present in basis");
    auto out = PolyCoeffs::zero(basis);
    out.values(static_cast<Eigen::Index>(k)) = 1.0;
    return out;
}

struct ShiftedPoly {
    PolyCoeffs coeffs;
    bool truncated = false;  // true when a monomial fell outside max_degree
};

/// Coefficients of x_i * f. In d=1 this is the shift [0, v_0, ..., v_{n-2}].
inline ShiftedPoly multiply_by_coordinate(const MonomialBasis& basis, const PolyCoeffs& coeffs, int i) {
    if (i < 0 || i >= basis.dim())
        throw std::invalid_argument("multiply_by_coordinate: coordinate index out of range");
    ShiftedPoly out{PolyCoeffs::zero(basis), false};
    for (size_t k = 0; k < basis.size(); ++k) {
        double v = coeffs.values(static_cast<Eigen::Index>(k));
        if (v == 0.0) continue;
        std::vector<int> exps = basis.exponents(k);
        exps[static_cast<size_t>(i)] += 1;
        size_t target = basis.find(exps);
        if (target == MonomialBasis::npos) {
            out.truncated = true;
        } else {
            out.coeffs.values(static_cast<Eigen::Index>(target)) += v;
        }
    }
    return out;
}

}  // namespace sdetrans
