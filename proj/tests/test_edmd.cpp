#include "sdetrans/edmd.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace sdetrans;

namespace {

/// Deterministic snapshots y = map(x) on a 1-D grid of M points.
SnapshotSet map_snapshots(double lo, double hi, int64_t M, double dt,
                          const std::function<double(double)>& map) {
    SnapshotSet s;
    s.X.resize(M, 1);
    s.Y.resize(M, 1);
    s.dt = dt;
    for (int64_t m = 0; m < M; ++m) {
        double x = lo + (static_cast<double>(m) + 0.5) * (hi - lo) / static_cast<double>(M);
        s.X(m, 0) = x;
        s.Y(m, 0) = map(x);
    }
    return s;
}

}  // namespace

TEST_CASE("constant-only dictionary gives G = A = [1]") {
    MonomialBasis basis(1, 0);
    auto snaps = map_snapshots(-1.0, 1.0, 50, 0.1, [](double x) { return 3.0 * x + 1.0; });
    auto [G, A] = gram_matrices(snaps, basis);
    REQUIRE_THAT(G(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-14));
    REQUIRE_THAT(A(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-14));
}

TEST_CASE("single sample x=1, y=3 with basis [1,x]") {
    MonomialBasis basis(1, 1);
    SnapshotSet s;
    s.X.resize(1, 1);
    s.Y.resize(1, 1);
    s.X(0, 0) = 1.0;
    s.Y(0, 0) = 3.0;
    s.dt = 0.1;
    auto [G, A] = gram_matrices(s, basis);
    REQUIRE(G.isApprox((Matrix(2, 2) << 1, 1, 1, 1).finished()));
    REQUIRE(A.isApprox((Matrix(2, 2) << 1, 3, 1, 3).finished()));
}

TEST_CASE("A for exact doubling map equals the moment formula") {
    MonomialBasis basis(1, 1);
    auto snaps = map_snapshots(-2.0, 2.0, 1000, 0.1, [](double x) { return 2.0 * x; });
    auto [G, A] = gram_matrices(snaps, basis);
    double mu1 = snaps.X.col(0).mean();
    double mu2 = snaps.X.col(0).array().square().mean();
    REQUIRE(A.isApprox((Matrix(2, 2) << 1, 2 * mu1, mu1, 2 * mu2).finished(), 1e-12));
}

TEST_CASE("Koopman matrix of the deterministic doubling map") {
    MonomialBasis basis(1, 1);
    auto snaps = map_snapshots(-2.0, 2.0, 1000, 0.1, [](double x) { return 2.0 * x; });
    auto [G, A] = gram_matrices(snaps, basis);
    Matrix K = koopman_matrix(G, A);
    REQUIRE(K.isApprox((Matrix(2, 2) << 1, 0, 0, 2).finished(), 1e-10));
    // zero EDMD residual: the dictionary span is invariant under the map
    REQUIRE((G * K - A).norm() / A.norm() < 1e-10);
}

TEST_CASE("identity dynamics gives K = I and L = 0") {
    MonomialBasis basis(1, 3);
    auto snaps = map_snapshots(-1.0, 1.0, 500, 0.05, [](double x) { return x; });
    auto [G, A] = gram_matrices(snaps, basis);
    Matrix K = koopman_matrix(G, A);
    REQUIRE(K.isApprox(Matrix::Identity(4, 4), 1e-9));
    REQUIRE(generator_matrix(K, snaps.dt).norm() < 1e-8);
}

TEST_CASE("pseudoinverse handles singular G without failure") {
    MonomialBasis basis(1, 1);
    SnapshotSet s;  // all data at x = 0: G is rank one
    s.X = Matrix::Zero(10, 1);
    s.Y = Matrix::Zero(10, 1);
    s.dt = 0.1;
    auto [G, A] = gram_matrices(s, basis);
    Matrix K = koopman_matrix(G, A);
    REQUIRE(K.allFinite());
    REQUIRE_THAT(K(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("generator from the exact linear flow") {
    const double a = 4.0, dt = 0.01;
    Matrix K = Matrix::Zero(2, 2);
    K(0, 0) = 1.0;
    K(1, 1) = std::exp(a * dt);
    Matrix L = generator_matrix(K, dt);
    REQUIRE_THAT(L(0, 0), Catch::Matchers::WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(L(1, 1), Catch::Matchers::WithinAbs((std::exp(a * dt) - 1.0) / dt, 1e-10));
    // the quotient carries O(dt) bias relative to a
    REQUIRE_THAT(L(1, 1), Catch::Matchers::WithinAbs(a, a * a * dt));

    Matrix K2 = Matrix::Zero(2, 2);
    K2(0, 0) = 1.0;
    K2(1, 1) = 1.0408;
    REQUIRE_THAT(generator_matrix(K2, 0.01)(1, 1), Catch::Matchers::WithinAbs(4.08, 1e-10));
}

TEST_CASE("structural invariants of the estimate") {
    MonomialBasis basis(1, 3);
    auto snaps = map_snapshots(-1.5, 1.5, 2000, 0.01,
                               [](double x) { return x + 0.01 * (4 * x - x * x * x); });
    auto est = estimate_generator(snaps, std::make_shared<MonomialBasis>(basis));
    // G symmetric
    REQUIRE((est.G - est.G.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    // the constant observable is fixed by K and annihilated by L:
    // K e0 = e0 since A e0 = G e0 exactly
    Vector e0 = Vector::Zero(4);
    e0(0) = 1.0;
    REQUIRE((est.K.col(0) - e0).cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE(est.L.col(0).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("gram accumulation is independent of thread count") {
    MonomialBasis basis(1, 4);
    auto snaps = map_snapshots(-2.0, 2.0, 20000, 0.01, [](double x) { return x + 0.01 * x * x; });
    auto [G1, A1] = gram_matrices(snaps, basis, 1);
    auto [G3, A3] = gram_matrices(snaps, basis, 3);
    REQUIRE(G1 == G3);
    REQUIRE(A1 == A3);
}

TEST_CASE("dimension and size checks") {
    MonomialBasis basis(2, 2);
    auto snaps = map_snapshots(-1.0, 1.0, 100, 0.1, [](double x) { return x; });
    REQUIRE_THROWS_AS(gram_matrices(snaps, basis), std::invalid_argument);
    REQUIRE_THROWS_AS(koopman_matrix(Matrix::Zero(2, 2), Matrix::Zero(3, 3)),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(generator_matrix(Matrix::Identity(2, 2), 0.0), std::invalid_argument);
    auto small = map_snapshots(-1.0, 1.0, 3, 0.1, [](double x) { return x; });
    REQUIRE_THROWS_AS(estimate_generator(small, std::make_shared<MonomialBasis>(1, 5)),
                      std::invalid_argument);
}
