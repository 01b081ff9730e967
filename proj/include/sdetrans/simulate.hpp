#pragma once

#include "sdetrans/model.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

namespace sdetrans {

/// Axis-aligned box, used both as sampling region and PDE domain.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    int dim() const { return static_cast<int>(lo.size()); }

    void validate() const {
        if (lo.empty() || lo.size() != hi.size())
            throw std::invalid_argument("Box: lo/hi must be non-empty and equal length");
        for (size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) throw std::invalid_argument("Box: requires lo < hi per axis");
    }
};

enum class InitScheme { Grid, UniformRandom };

/// Paired snapshot matrices: rows of Y are the dt-images of rows of X.
struct SnapshotSet {
    Matrix X;   // M x d initial states
    Matrix Y;   // M x d states after one step of size dt
    double dt = 0.0;

    int64_t count() const { return X.rows(); }
    int dim() const { return static_cast<int>(X.cols()); }
};

namespace detail {

/// Initial condition for sample m under the grid scheme: midpoints of a
/// uniform grid in 1-D, a ceil(sqrt(M))^2 tensor grid truncated to M
/// points in 2-D (and the analogous tensor grid in higher dimension).
inline void grid_point(const Box& box, int64_t m, int64_t M, std::span<double> out) {
    const int d = box.dim();
    if (d == 1) {
        out[0] = box.lo[0] + (static_cast<double>(m) + 0.5) * (box.hi[0] - box.lo[0]) / static_cast<double>(M);
        return;
    }
    const auto side = static_cast<int64_t>(std::ceil(std::pow(static_cast<double>(M), 1.0 / d) - 1e-9));
    int64_t rem = m;
    for (int i = d - 1; i >= 0; --i) {
        int64_t idx = rem % side;
        rem /= side;
        out[static_cast<size_t>(i)] =
            box.lo[static_cast<size_t>(i)] +
            (static_cast<double>(idx) + 0.5) * (box.hi[static_cast<size_t>(i)] - box.lo[static_cast<size_t>(i)]) /
                static_cast<double>(side);
    }
}

}  // namespace detail

/// Generate M snapshot pairs by one Euler-Maruyama step from gridded or
/// uniformly random initial conditions. Deterministic for fixed
/// (model, domain, M, dt, seed) under any thread count: sample m draws
/// from its own stream keyed by (seed, m).
inline SnapshotSet generate_snapshots(const SdeModel& model, const Box& domain, int64_t M,
                                      double dt, InitScheme scheme, uint64_t seed,
                                      int threads = 1) {
    model.validate();
    domain.validate();
    if (domain.dim() != model.dim())
        throw std::invalid_argument("generate_snapshots: domain/model dimension mismatch");
    if (M < 1) throw std::invalid_argument("generate_snapshots: M must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("generate_snapshots: dt must be positive");

    const int d = model.dim();
    SnapshotSet out;
    out.X.resize(M, d);
    out.Y.resize(M, d);
    out.dt = dt;

    auto worker = [&](int64_t begin, int64_t end) {
        std::vector<double> x(static_cast<size_t>(d)), y(static_cast<size_t>(d));
        for (int64_t m = begin; m < end; ++m) {
            SampleRng rng(seed, static_cast<uint64_t>(m));
            if (scheme == InitScheme::Grid) {
                detail::grid_point(domain, m, M, x);
            } else {
                for (int i = 0; i < d; ++i) {
                    const auto ui = static_cast<size_t>(i);
                    x[ui] = domain.lo[ui] + rng.next_uniform() * (domain.hi[ui] - domain.lo[ui]);
                }
            }
            model.euler_step(x, dt, rng, y);
            for (int i = 0; i < d; ++i) {
                out.X(m, i) = x[static_cast<size_t>(i)];
                out.Y(m, i) = y[static_cast<size_t>(i)];
            }
        }
    };

    threads = std::max(1, threads);
    if (threads == 1 || M < 1024) {
        worker(0, M);
    } else {
        std::vector<std::thread> pool;
        const int64_t chunk = (M + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            int64_t begin = t * chunk;
            int64_t end = std::min<int64_t>(M, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

}  // namespace sdetrans
