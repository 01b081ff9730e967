#include "sdetrans/polynomial.hpp"
#include "sdetrans/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace sdetrans;

namespace {

std::string render(const MonomialBasis& basis, size_t k) {
    std::string s;
    for (int i = 0; i < basis.dim(); ++i)
        for (int p = 0; p < basis.exponents(k)[static_cast<size_t>(i)]; ++p)
            s += static_cast<char>('x' + i);
    return s.empty() ? "1" : s;
}

// Independent Horner-free evaluator: sum of coeff * prod pow(x_i, e_i)
// using std::pow, bypassing the cached-powers path in evaluate_row.
double direct_eval(const MonomialBasis& basis, const Vector& coeffs, std::span<const double> x) {
    double total = 0.0;
    for (size_t k = 0; k < basis.size(); ++k) {
        double term = coeffs(static_cast<Eigen::Index>(k));
        for (int i = 0; i < basis.dim(); ++i)
            term *= std::pow(x[static_cast<size_t>(i)],
                             basis.exponents(k)[static_cast<size_t>(i)]);
        total += term;
    }
    return total;
}

}  // namespace

TEST_CASE("graded lexicographic ordering matches the canonical row labels") {
    MonomialBasis b1(1, 5);
    REQUIRE(b1.size() == 6);
    std::vector<std::string> labels1;
    for (size_t k = 0; k < b1.size(); ++k) labels1.push_back(render(b1, k));
    REQUIRE(labels1 == std::vector<std::string>{"1", "x", "xx", "xxx", "xxxx", "xxxxx"});

    MonomialBasis b2(2, 3);
    REQUIRE(b2.size() == 10);
    std::vector<std::string> labels2;
    for (size_t k = 0; k < b2.size(); ++k) labels2.push_back(render(b2, k));
    REQUIRE(labels2 == std::vector<std::string>{"1", "x", "y", "xx", "xy", "yy", "xxx", "xxy",
                                                "xyy", "yyy"});

    MonomialBasis b3(3, 0);
    REQUIRE(b3.size() == 1);
    REQUIRE(render(b3, 0) == "1");
}

TEST_CASE("basis size is C(dim + degree, degree) and coordinates are present") {
    for (int d = 1; d <= 3; ++d)
        for (int deg = 2; deg <= 5; ++deg) {
            MonomialBasis basis(d, deg);
            size_t expected = 1;
            for (int i = 1; i <= deg; ++i) expected = expected * (d + i) / i;
            REQUIRE(basis.size() == expected);
            for (int i = 0; i < d; ++i) {
                std::vector<int> e(static_cast<size_t>(d), 0);
                e[static_cast<size_t>(i)] = 1;
                REQUIRE(basis.find(e) != MonomialBasis::npos);
                e[static_cast<size_t>(i)] = 2;
                REQUIRE(basis.find(e) != MonomialBasis::npos);
            }
        }
    REQUIRE_THROWS_AS(MonomialBasis(0, 3), std::invalid_argument);
}

TEST_CASE("evaluate_row") {
    MonomialBasis b1(1, 3);
    double x = 2.0;
    Vector row = b1.evaluate_row(std::span<const double>(&x, 1));
    REQUIRE(row.isApprox((Vector(4) << 1, 2, 4, 8).finished()));

    MonomialBasis b2(2, 2);
    std::vector<double> origin{0.0, 0.0};
    REQUIRE(b2.evaluate_row(origin).isApprox((Vector(6) << 1, 0, 0, 0, 0, 0).finished()));
    std::vector<double> pt{3.0, -1.0};
    REQUIRE(b2.evaluate_row(pt).isApprox((Vector(6) << 1, 3, -1, 9, -3, 1).finished()));

    std::vector<double> wrong{1.0};
    REQUIRE_THROWS_AS(b2.evaluate_row(wrong), std::invalid_argument);
}

TEST_CASE("evaluation agrees with an independent evaluator on random points") {
    SampleRng rng(2024, 0);
    for (int d : {1, 2, 3}) {
        MonomialBasis basis(d, 4);
        Vector coeffs(static_cast<Eigen::Index>(basis.size()));
        for (Eigen::Index k = 0; k < coeffs.size(); ++k) coeffs(k) = rng.next_normal();
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> x(static_cast<size_t>(d));
            for (auto& xi : x) xi = 2.0 * rng.next_uniform() - 1.0;
            double via_row = coeffs.dot(basis.evaluate_row(x));
            double direct = direct_eval(basis, coeffs, x);
            REQUIRE(std::abs(via_row - direct) <=
                    1e-12 * std::max(1.0, std::abs(direct)));
        }
    }
}

TEST_CASE("coordinate_selector") {
    MonomialBasis b1(1, 5);
    auto sel = coordinate_selector(b1, 0, 1);
    REQUIRE(sel.values.isApprox((Vector(6) << 0, 1, 0, 0, 0, 0).finished()));

    MonomialBasis b2(2, 3);
    auto y2 = coordinate_selector(b2, 1, 2);
    Vector expected = Vector::Zero(10);
    expected(5) = 1.0;  // y^2 sits at index 6, 1-based
    REQUIRE(y2.values.isApprox(expected));

    MonomialBasis shallow(2, 1);
    REQUIRE_THROWS_AS(coordinate_selector(shallow, 0, 2), std::invalid_argument);
}

TEST_CASE("multiply_by_coordinate shifts and truncates") {
    MonomialBasis b1(1, 5);
    // 4x - x^3 -> 4x^2 - x^4
    auto f = PolyCoeffs(b1, (Vector(6) << 0, 4, 0, -1, 0, 0).finished());
    auto shifted = multiply_by_coordinate(b1, f, 0);
    REQUIRE_FALSE(shifted.truncated);
    REQUIRE(shifted.coeffs.values.isApprox((Vector(6) << 0, 0, 4, 0, -1, 0).finished()));

    // full vector: (v)_+ = [0, v_0, ..., v_4], truncation iff v_5 != 0
    auto v = PolyCoeffs(b1, (Vector(6) << 1, 2, 3, 4, 5, 6).finished());
    auto sv = multiply_by_coordinate(b1, v, 0);
    REQUIRE(sv.truncated);
    REQUIRE(sv.coeffs.values.isApprox((Vector(6) << 0, 1, 2, 3, 4, 5).finished()));
    auto no_top = PolyCoeffs(b1, (Vector(6) << 1, 2, 3, 4, 5, 0).finished());
    REQUIRE_FALSE(multiply_by_coordinate(b1, no_top, 0).truncated);

    MonomialBasis b2(2, 3);
    auto y2 = coordinate_selector(b2, 1, 2);
    auto xy2 = multiply_by_coordinate(b2, y2, 0);
    REQUIRE_FALSE(xy2.truncated);
    Vector expected = Vector::Zero(10);
    expected(8) = 1.0;  // xy^2
    REQUIRE(xy2.coeffs.values.isApprox(expected));
}

TEST_CASE("multiply_by_coordinate is linear in the coefficients") {
    SampleRng rng(7, 0);
    MonomialBasis basis(2, 4);
    const auto n = static_cast<Eigen::Index>(basis.size());
    for (int trial = 0; trial < 20; ++trial) {
        Vector u(n), v(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            u(k) = rng.next_normal();
            v(k) = rng.next_normal();
        }
        double a = rng.next_normal(), b = rng.next_normal();
        auto lhs = multiply_by_coordinate(basis, PolyCoeffs(basis, a * u + b * v), 1);
        auto mu = multiply_by_coordinate(basis, PolyCoeffs(basis, u), 1);
        auto mv = multiply_by_coordinate(basis, PolyCoeffs(basis, v), 1);
        REQUIRE(lhs.coeffs.values.isApprox(a * mu.coeffs.values + b * mv.coeffs.values, 1e-12));
    }
}
