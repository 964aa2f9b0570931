#pragma once

/**
 * @file
 * Evaluation metrics on empirical sample sets (one sample per row): exact
 * Wasserstein-1 under the l1 ground metric, and the k-nearest-neighbour
 * KL divergence estimator of Wang, Kulkarni and Verdu.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "otevs/generator.hpp"
#include "otevs/noise_surrogate.hpp"
#include "otevs/rng.hpp"

namespace otevs {

/// N x M sample matrix, one sample per row.
using EmpiricalBatch = MatrixXd;

inline constexpr std::size_t kW1MaxSamples = 512;

inline void check_batch(const EmpiricalBatch &a, const char *who) {
    if (a.rows() < 1 || a.cols() < 1) {
        throw std::invalid_argument(std::string(who) + ": empty sample set");
    }
    if (!a.allFinite()) {
        throw std::invalid_argument(std::string(who) + ": non-finite sample entries");
    }
}

/**
 * Minimum-cost perfect matching of a square cost matrix by successive
 * shortest augmenting paths with potentials, O(N^3). Returns the assignment
 * row -> column.
 */
[[nodiscard]] inline auto solve_assignment(const MatrixXd &cost) -> std::vector<std::size_t> {
    const auto n = static_cast<std::size_t>(cost.rows());
    if (cost.cols() != cost.rows()) {
        throw std::invalid_argument("solve_assignment: cost matrix must be square");
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays; column 0 is a virtual source.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= n; ++j) {
        row_to_col[match[j] - 1] = j - 1;
    }
    return row_to_col;
}

/// Exact W1 between two equal-size empirical distributions under the l1 metric.
[[nodiscard]] inline auto wasserstein1_exact(const EmpiricalBatch &a, const EmpiricalBatch &b) -> double {
    check_batch(a, "wasserstein1_exact");
    check_batch(b, "wasserstein1_exact");
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("wasserstein1_exact: sample sets must have equal count and dimension");
    }
    const auto N = a.rows();
    if (static_cast<std::size_t>(N) > kW1MaxSamples) {
        throw std::invalid_argument("wasserstein1_exact: at most " + std::to_string(kW1MaxSamples) +
                                    " samples supported");
    }
    MatrixXd cost(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j < N; ++j) {
            cost(i, j) = (a.row(i) - b.row(j)).cwiseAbs().sum();
        }
    }
    const auto assignment = solve_assignment(cost);
    double total = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
        total += cost(i, static_cast<Eigen::Index>(assignment[static_cast<std::size_t>(i)]));
    }
    return total / static_cast<double>(N);
}

inline constexpr std::size_t kDefaultKnn = 5;

namespace detail {

inline auto all_rows_identical(const MatrixXd &a) -> bool {
    for (Eigen::Index i = 1; i < a.rows(); ++i) {
        if (a.row(i) != a.row(0)) {
            return false;
        }
    }
    return true;
}

/// Euclidean distance from `x` to its k-th nearest row of `set`, skipping row `skip`.
inline auto kth_distance(const MatrixXd &set, const Eigen::RowVectorXd &x, std::size_t k, Eigen::Index skip,
                         std::vector<double> &buf) -> double {
    buf.clear();
    for (Eigen::Index j = 0; j < set.rows(); ++j) {
        if (j == skip) {
            continue;
        }
        buf.push_back((set.row(j) - x).squaredNorm());
    }
    std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k - 1), buf.end());
    return std::sqrt(buf[k - 1]);
}

} // namespace detail

/**
 * k-NN estimate of D_KL(P || Q):
 *   (M/N) sum_i log(nu_k(i) / rho_k(i)) + log(N' / (N - 1))
 * with rho_k the distance from P-sample i to its k-th neighbour in P (itself
 * excluded) and nu_k the distance to its k-th neighbour in Q. Zero distances
 * are floored at 1e-12.
 */
[[nodiscard]] inline auto kl_knn(const EmpiricalBatch &P, const EmpiricalBatch &Q, std::size_t k = kDefaultKnn)
    -> double {
    check_batch(P, "kl_knn");
    check_batch(Q, "kl_knn");
    if (P.cols() != Q.cols()) {
        throw std::invalid_argument("kl_knn: sample dimensions differ");
    }
    if (k < 1 || static_cast<std::size_t>(P.rows()) <= k || static_cast<std::size_t>(Q.rows()) <= k) {
        throw std::invalid_argument("kl_knn: both sample sets need more than k points");
    }
    if (detail::all_rows_identical(P) || detail::all_rows_identical(Q)) {
        throw std::invalid_argument("kl_knn: degenerate sample set (all points identical)");
    }
    constexpr double floor = 1e-12;
    const auto N = P.rows();
    const double M = static_cast<double>(P.cols());
    std::vector<double> buf;
    buf.reserve(static_cast<std::size_t>(std::max(P.rows(), Q.rows())));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
        const Eigen::RowVectorXd x = P.row(i);
        const double rho = std::max(detail::kth_distance(P, x, k, i, buf), floor);
        const double nu = std::max(detail::kth_distance(Q, x, k, -1, buf), floor);
        sum += std::log(nu / rho);
    }
    return M / static_cast<double>(N) * sum +
           std::log(static_cast<double>(Q.rows()) / static_cast<double>(N - 1));
}

struct KlSweepRow {
    std::uint64_t shots = 0; // 0 marks the noiseless limit
    Scheme scheme = Scheme::ExactInfinite;
    double kl = 0.0;
};

/**
 * kl_knn(noisy, ideal) for each budget. Noisy outputs come from one latent
 * set, the ideal reference from an independent one; both sets and the noise
 * draws are shared across budgets so the rows differ only in the shot count.
 */
[[nodiscard]] inline auto kl_to_ideal_sweep(const GeneratorSpec &spec, const GeneratorParams &params,
                                            const std::vector<MeasurementBudget> &budgets, std::size_t samples,
                                            std::uint64_t seed, NoiseMode mode = NoiseMode::Surrogate,
                                            std::size_t k = kDefaultKnn) -> std::vector<KlSweepRow> {
    const auto basis = spec.basis();
    const auto M = static_cast<Eigen::Index>(spec.outputs);
    const auto n = static_cast<Eigen::Index>(samples);

    MatrixXd ideal(n, M);
    {
        auto rng = make_stream(seed, {1});
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto z = sample_latent(rng, spec.circuit.latent_dim);
            ideal.row(i) = generate(params, spec.circuit, basis, z).y.transpose();
        }
    }
    std::vector<LatentSample> latents;
    {
        auto rng = make_stream(seed, {2});
        for (Eigen::Index i = 0; i < n; ++i) {
            latents.push_back(sample_latent(rng, spec.circuit.latent_dim));
        }
    }
    std::vector<KlSweepRow> rows;
    for (const auto &budget : budgets) {
        const NoiseModel noise(basis, budget);
        MatrixXd noisy(n, M);
        for (Eigen::Index i = 0; i < n; ++i) {
            auto rng = make_stream(seed, {3, static_cast<std::uint64_t>(i)});
            noisy.row(i) = generate_noisy(params, spec.circuit, basis, latents[static_cast<std::size_t>(i)], noise,
                                          rng, mode)
                               .transpose();
        }
        rows.push_back({budget.finite() ? budget.shots : 0, budget.scheme, kl_knn(noisy, ideal, k)});
    }
    return rows;
}

} // namespace otevs
