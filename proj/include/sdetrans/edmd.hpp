#pragma once

#include "sdetrans/polynomial.hpp"
#include "sdetrans/simulate.hpp"

#include <Eigen/SVD>

#include <memory>
#include <stdexcept>
#include <thread>
#include <vector>

namespace sdetrans {

/// EDMD Gram matrices
///   G = (1/M) sum Psi(x_m)^T Psi(x_m),  A = (1/M) sum Psi(x_m)^T Psi(y_m).
/// Accumulation runs over fixed 4096-sample chunks whose partial sums are
/// combined in index order, so the result does not depend on thread count.
inline std::pair<Matrix, Matrix> gram_matrices(const SnapshotSet& snapshots,
                                               const MonomialBasis& basis, int threads = 1) {
    if (snapshots.dim() != basis.dim())
        throw std::invalid_argument("gram_matrices: basis/snapshot dimension mismatch");
    const int64_t M = snapshots.count();
    if (M < 1) throw std::invalid_argument("gram_matrices: empty snapshot set");

    const auto n = static_cast<Eigen::Index>(basis.size());
    constexpr int64_t kChunk = 4096;
    const int64_t n_chunks = (M + kChunk - 1) / kChunk;

    std::vector<Matrix> g_parts(static_cast<size_t>(n_chunks));
    std::vector<Matrix> a_parts(static_cast<size_t>(n_chunks));

    auto worker = [&](int64_t chunk_begin, int64_t chunk_end) {
        std::vector<double> x(static_cast<size_t>(basis.dim()));
        std::vector<double> y(static_cast<size_t>(basis.dim()));
        for (int64_t ci = chunk_begin; ci < chunk_end; ++ci) {
            Matrix g = Matrix::Zero(n, n);
            Matrix a = Matrix::Zero(n, n);
            const int64_t lo = ci * kChunk;
            const int64_t hi = std::min(M, lo + kChunk);
            for (int64_t m = lo; m < hi; ++m) {
                for (int i = 0; i < basis.dim(); ++i) {
                    x[static_cast<size_t>(i)] = snapshots.X(m, i);
                    y[static_cast<size_t>(i)] = snapshots.Y(m, i);
                }
                Vector px = basis.evaluate_row(x);
                Vector py = basis.evaluate_row(y);
                g.noalias() += px * px.transpose();
                a.noalias() += px * py.transpose();
            }
            g_parts[static_cast<size_t>(ci)] = std::move(g);
            a_parts[static_cast<size_t>(ci)] = std::move(a);
        }
    };

    threads = std::max(1, threads);
    if (threads == 1 || n_chunks == 1) {
        worker(0, n_chunks);
    } else {
        std::vector<std::thread> pool;
        const int64_t per = (n_chunks + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            int64_t begin = t * per;
            int64_t end = std::min(n_chunks, begin + per);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    Matrix G = Matrix::Zero(n, n);
    Matrix A = Matrix::Zero(n, n);
    for (int64_t ci = 0; ci < n_chunks; ++ci) {
        G += g_parts[static_cast<size_t>(ci)];
        A += a_parts[static_cast<size_t>(ci)];
    }
    G /= static_cast<double>(M);
    A /= static_cast<double>(M);
    return {G, A};
}

/// K = G^+ A with the pseudoinverse through SVD; singular values below
/// svd_cutoff * s_max are zeroed, so rank-deficient G is handled without
/// failure.
inline Matrix koopman_matrix(const Matrix& G, const Matrix& A, double svd_cutoff = 1e-10) {
    if (G.rows() != G.cols() || A.rows() != A.cols() || G.rows() != A.rows())
        throw std::invalid_argument("koopman_matrix: G and A must be square and equal size");
    Eigen::JacobiSVD<Matrix> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double threshold = s.size() > 0 ? svd_cutoff * s(0) : 0.0;
    Vector s_inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > threshold) s_inv(i) = 1.0 / s(i);
    return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose() * A;
}

/// First-order difference quotient of the semigroup at t=0: L = (K - I)/dt.
inline Matrix generator_matrix(const Matrix& K, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("generator_matrix: dt must be positive");
    return (K - Matrix::Identity(K.rows(), K.cols())) / dt;
}

/// EDMD products for one dataset and dictionary.
struct GeneratorEstimate {
    std::shared_ptr<MonomialBasis> basis;
    Matrix G;
    Matrix A;
    Matrix K;
    Matrix L;
    double dt = 0.0;
    double svd_cutoff = 1e-10;
};

inline GeneratorEstimate estimate_generator(const SnapshotSet& snapshots,
                                            std::shared_ptr<MonomialBasis> basis,
                                            double svd_cutoff = 1e-10, int threads = 1) {
    if (snapshots.count() < static_cast<int64_t>(basis->size()))
        throw std::invalid_argument("estimate_generator: need at least as many samples as basis functions");
    GeneratorEstimate est;
    est.basis = std::move(basis);
    std::tie(est.G, est.A) = gram_matrices(snapshots, *est.basis, threads);
    est.K = koopman_matrix(est.G, est.A, svd_cutoff);
    est.L = generator_matrix(est.K, snapshots.dt);
    est.dt = snapshots.dt;
    est.svd_cutoff = svd_cutoff;
    return est;
}

}  // namespace sdetrans
