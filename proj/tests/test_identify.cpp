#include "sdetrans/identify.hpp"
#include "sdetrans/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <numbers>

using namespace sdetrans;

namespace {

Vector conv(const Vector& a, const Vector& b) {
    Vector out = Vector::Zero(a.size() + b.size() - 1);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < b.size(); ++j) out(i + j) += a(i) * b(j);
    return out;
}

/// Generator matrix whose action on x^2 is the given coefficient vector
/// (drift columns zero), for driving the separation directly.
Matrix l_with_rho(const MonomialBasis& basis, const Vector& rho_pure) {
    const auto n = static_cast<Eigen::Index>(basis.size());
    Matrix L = Matrix::Zero(n, n);
    std::vector<int> e(static_cast<size_t>(basis.dim()), 0);
    e[0] = 2;
    const auto col = static_cast<Eigen::Index>(basis.find(e));
    for (Eigen::Index k = 0; k < rho_pure.size(); ++k) {
        e[0] = static_cast<int>(k);
        L(static_cast<Eigen::Index>(basis.find(e)), col) = rho_pure(k);
    }
    return L;  // rho = L * B_2 reads this column through the selector
}

}  // namespace

TEST_CASE("zero generator gives zero drift") {
    MonomialBasis basis(2, 3);
    auto drift = identify_drift(Matrix::Zero(10, 10), basis);
    REQUIRE(drift.size() == 2);
    REQUIRE(drift[0].values.norm() == 0.0);
    REQUIRE(drift[1].values.norm() == 0.0);
}

TEST_CASE("drift from the exact generator of dX = -X dt") {
    MonomialBasis basis(1, 3);
    // L x^k = -k x^k, so L is diagonal in the monomial basis
    Matrix L = Matrix::Zero(4, 4);
    for (int k = 0; k < 4; ++k) L(k, k) = -k;
    auto drift = identify_drift(L, basis);
    REQUIRE(drift[0].values.isApprox((Vector(4) << 0, -1, 0, 0).finished()));
}

TEST_CASE("separation of the forward-constructed rho for sigma1 = 1 + 2x, sigma2 = 3") {
    MonomialBasis basis(1, 5);
    const double c_tilde = levy_second_moment(1.0, 1.0);  // 2/pi
    Vector rho(3);
    rho << 1.0 + 9.0 * c_tilde, 4.0, 4.0;  // conv([1,2],[1,2]) + C~ * 9 * e0
    Matrix L = l_with_rho(basis, rho);
    std::vector<PolyCoeffs> drift{PolyCoeffs::zero(basis)};
    auto sep = separate_diffusions(L, basis, drift, 1.0, 1.0, NoiseMode::Levy, {1});
    Vector a = sep.a_diag[0].values;
    REQUIRE_THAT(a(0), Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(a(1), Catch::Matchers::WithinAbs(4.0, 1e-12));
    REQUIRE_THAT(a(2), Catch::Matchers::WithinAbs(4.0, 1e-12));
    REQUIRE_THAT(sep.sigma2_sq[0], Catch::Matchers::WithinAbs(9.0, 1e-12));
}

TEST_CASE("p2 = 1 backward iteration reproduces the scalar closed form") {
    MonomialBasis basis(1, 4);
    SampleRng rng(5, 0);
    for (int trial = 0; trial < 50; ++trial) {
        double eta0 = 2.0 * rng.next_uniform() - 1.0;
        double eta1 = 0.5 + rng.next_uniform();
        double s2 = 2.0 * rng.next_uniform();
        double alpha = 0.5 + rng.next_uniform();
        double c_tilde = levy_second_moment(alpha, 1.0);
        Vector rho(3);
        rho << eta0 * eta0 + c_tilde * s2 * s2, 2 * eta0 * eta1, eta1 * eta1;
        Matrix L = l_with_rho(basis, rho);
        std::vector<PolyCoeffs> drift{PolyCoeffs::zero(basis)};
        auto sep = separate_diffusions(L, basis, drift, alpha, 1.0, NoiseMode::Levy, {1});
        // closed form: eta1^2 = rho_2, eta0^2 = (rho_1 / 2 eta1)^2, s2^2 = (rho_0 - eta0^2)/C~
        double eta1_sq = rho(2);
        double eta0_sq = std::pow(rho(1) / (2.0 * std::sqrt(eta1_sq)), 2);
        REQUIRE_THAT(sep.a_diag[0].values(2), Catch::Matchers::WithinRel(eta1_sq, 1e-13));
        REQUIRE_THAT(sep.a_diag[0].values(0),
                     Catch::Matchers::WithinAbs(eta0_sq, 1e-13 * std::max(1.0, eta0_sq)));
        REQUIRE_THAT(sep.sigma2_sq[0],
                     Catch::Matchers::WithinAbs((rho(0) - eta0_sq) / c_tilde, 1e-12));
    }
}

TEST_CASE("round-trip separation for p2 in {1,2,3}") {
    SampleRng rng(19, 0);
    for (int trial = 0; trial < 60; ++trial) {
        int p2 = 1 + static_cast<int>(rng.next_u64() % 3);
        double alpha = 0.5 + rng.next_uniform();
        double s2 = 2.0 * rng.next_uniform();
        Vector eta(p2 + 1);
        for (int k = 0; k < p2; ++k) eta(k) = 2.0 * rng.next_uniform() - 1.0;
        eta(p2) = 0.3 + rng.next_uniform();
        Vector eta_tilde = conv(eta, eta);
        double c_tilde = levy_second_moment(alpha, 1.0);
        Vector rho = eta_tilde;
        rho(0) += c_tilde * s2 * s2;

        MonomialBasis basis(1, 2 * p2);
        Matrix L = l_with_rho(basis, rho);
        std::vector<PolyCoeffs> drift{PolyCoeffs::zero(basis)};
        auto sep = separate_diffusions(L, basis, drift, alpha, 1.0, NoiseMode::Levy, {p2});
        for (Eigen::Index k = 0; k < eta_tilde.size(); ++k)
            REQUIRE_THAT(sep.a_diag[0].values(k),
                         Catch::Matchers::WithinAbs(eta_tilde(k),
                                                    1e-10 * std::max(1.0, std::abs(eta_tilde(k)))));
        REQUIRE_THAT(sep.sigma2_sq[0],
                     Catch::Matchers::WithinAbs(s2 * s2, 1e-10 * std::max(1.0, s2 * s2)));
        REQUIRE(sep.diagnostics.eta_residual[0] < 1e-10);
    }
}

TEST_CASE("separation output is invariant under flipping the sign of eta") {
    MonomialBasis basis(1, 4);
    Vector eta(3);
    eta << 0.4, -0.7, 1.2;
    Vector rho = conv(eta, eta);
    rho(0) += levy_second_moment(1.2, 1.0) * 2.5;
    Matrix L = l_with_rho(basis, rho);  // conv(-eta,-eta) builds the identical rho
    std::vector<PolyCoeffs> drift{PolyCoeffs::zero(basis)};
    auto sep = separate_diffusions(L, basis, drift, 1.2, 1.0, NoiseMode::Levy, {2});
    REQUIRE(sep.a_diag[0].values.head(5).isApprox(conv(eta, eta), 1e-10));
    REQUIRE_THAT(sep.sigma2_sq[0], Catch::Matchers::WithinAbs(2.5, 1e-10));
}

TEST_CASE("zero rho yields zero diffusions") {
    MonomialBasis basis(1, 4);
    Matrix L = Matrix::Zero(5, 5);
    std::vector<PolyCoeffs> drift{PolyCoeffs::zero(basis)};
    auto sep = separate_diffusions(L, basis, drift, 1.0, 1.0, NoiseMode::BrownianOnly, {});
    REQUIRE(sep.a_diag[0].values.norm() == 0.0);
    REQUIRE(sep.sigma2_sq[0] == 0.0);
}

TEST_CASE("Brownian mode passes rho through untransformed") {
    MonomialBasis basis(1, 4);
    Vector rho(5);
    rho << 0.3, -0.1, 1.0, 0.2, -0.05;
    Matrix L = l_with_rho(basis, rho);
    std::vector<PolyCoeffs> drift{PolyCoeffs::zero(basis)};
    auto sep = separate_diffusions(L, basis, drift, 1.0, 1.0, NoiseMode::BrownianOnly, {});
    REQUIRE(sep.a_diag[0].values.isApprox(rho));
    REQUIRE(sep.sigma2_sq[0] == 0.0);
}

TEST_CASE("degenerate and inconsistent cases are rejected") {
    MonomialBasis basis(1, 4);
    std::vector<PolyCoeffs> drift{PolyCoeffs::zero(basis)};
    // constant sigma1 declared: Levy separation refused
    REQUIRE_THROWS_AS(
        separate_diffusions(Matrix::Zero(5, 5), basis, drift, 1.0, 1.0, NoiseMode::Levy, {0}),
        std::runtime_error);
    // leading coefficient far negative: inconsistent generator estimate
    Vector bad(3);
    bad << 0.1, 0.0, -5.0;
    REQUIRE_THROWS_AS(separate_diffusions(l_with_rho(basis, bad), basis, drift, 1.0, 1.0,
                                          NoiseMode::Levy, {1}),
                      std::runtime_error);
    // leading coefficient ~0 with p2 >= 1: degenerate sigma1
    Vector degen(3);
    degen << 0.5, 0.0, 0.0;
    REQUIRE_THROWS_AS(separate_diffusions(l_with_rho(basis, degen), basis, drift, 1.0, 1.0,
                                          NoiseMode::Levy, {1}),
                      std::runtime_error);
}

TEST_CASE("assemble_model takes the non-negative root for sigma2") {
    auto basis = std::make_shared<MonomialBasis>(1, 2);
    auto model = assemble_model(basis, {PolyCoeffs::zero(*basis)}, {PolyCoeffs::zero(*basis)},
                                {1.0955}, 1.0, 1.0, NoiseMode::Levy);
    REQUIRE_THAT(model.sigma2()[0], Catch::Matchers::WithinAbs(std::sqrt(1.0955), 1e-12));
    REQUIRE_THAT(model.sigma2()[0], Catch::Matchers::WithinAbs(1.0467, 5e-5));
}
