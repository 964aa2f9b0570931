#pragma once

/**
 * @file
 * Differentiable Gaussian model of shot noise on the Pauli expectations.
 *
 * The estimation error of the L basis expectations is modelled as
 * eps = D S xi with xi ~ N(0, I), S the lower Cholesky factor of the
 * single-copy covariance Sigma and D = diag(1 / sqrt(copies spent on string l)).
 * Shadows spend every copy on every string, so D = I / sqrt(N_s); the
 * conventional scheme splits N_s across the strings.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "otevs/measurement.hpp"
#include "otevs/pauli.hpp"
#include "otevs/quantum_sim.hpp"
#include "otevs/rng.hpp"

namespace otevs {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Per-qubit shadow overlap factor: 0 for different letters, 3 for equal letters, 1 otherwise.
[[nodiscard]] inline auto shadow_overlap(Pauli a, Pauli b) noexcept -> double {
    if (a == Pauli::I || b == Pauli::I) {
        return 1.0;
    }
    return a == b ? 3.0 : 0.0;
}

/**
 * Pairs (i <= j) of basis strings whose overlap product is nonzero, with the
 * index of the product string P_i P_j among the distinct products. The phase
 * of such a product is always +1.
 */
class ShadowPairTable {
  public:
    struct Entry {
        std::uint32_t i;
        std::uint32_t j;
        double overlap;
        std::uint32_t product;
    };

    ShadowPairTable() = default;

    explicit ShadowPairTable(const PauliBasis &basis) : L_(basis.size()) {
        std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint32_t> index;
        for (std::size_t i = 0; i < L_; ++i) {
            for (std::size_t j = i; j < L_; ++j) {
                double f = 1.0;
                for (std::size_t q = 0; q < basis.num_qubits() && f != 0.0; ++q) {
                    f *= shadow_overlap(basis[i][q], basis[j][q]);
                }
                if (f == 0.0) {
                    continue;
                }
                auto prod = pauli_product(basis[i], basis[j]);
                const auto key = std::make_pair(prod.string.x_mask(), prod.string.z_mask());
                auto [it, inserted] = index.try_emplace(key, static_cast<std::uint32_t>(products_.size()));
                if (inserted) {
                    products_.push_back(std::move(prod.string));
                }
                entries_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), f, it->second});
            }
        }
    }

    [[nodiscard]] auto num_strings() const noexcept -> std::size_t { return L_; }
    [[nodiscard]] auto entries() const noexcept -> const std::vector<Entry> & { return entries_; }
    [[nodiscard]] auto products() const noexcept -> const std::vector<PauliString> & { return products_; }

  private:
    std::size_t L_ = 0;
    std::vector<Entry> entries_;
    std::vector<PauliString> products_;
};

[[nodiscard]] inline auto expectations(const StateVector &state, std::span<const PauliString> strings) -> VectorXd {
    VectorXd out(static_cast<Eigen::Index>(strings.size()));
    for (std::size_t l = 0; l < strings.size(); ++l) {
        out[static_cast<Eigen::Index>(l)] = expectation(state, strings[l]);
    }
    return out;
}

/// Single-copy covariance: diag(1 - p^2) (conventional) or overlap * <P_i P_j> - p_i p_j (shadows).
[[nodiscard]] inline auto covariance_from_expectations(Scheme scheme, const VectorXd &p, const VectorXd &products,
                                                       const ShadowPairTable &pairs) -> MatrixXd {
    const auto L = p.size();
    switch (scheme) {
    case Scheme::Conventional: {
        MatrixXd sigma = MatrixXd::Zero(L, L);
        for (Eigen::Index l = 0; l < L; ++l) {
            sigma(l, l) = 1.0 - p[l] * p[l];
        }
        return sigma;
    }
    case Scheme::Shadows: {
        MatrixXd sigma = -p * p.transpose();
        for (const auto &e : pairs.entries()) {
            const double v = e.overlap * products[e.product];
            sigma(e.i, e.j) += v;
            if (e.i != e.j) {
                sigma(e.j, e.i) += v;
            }
        }
        return sigma;
    }
    case Scheme::ExactInfinite:
        break;
    }
    return MatrixXd::Zero(L, L);
}

/// Directional derivative of the single-copy covariance given dp (and d<P_i P_j> for shadows).
[[nodiscard]] inline auto covariance_gradient(Scheme scheme, const VectorXd &p, const VectorXd &dp,
                                              const VectorXd &dproducts, const ShadowPairTable &pairs) -> MatrixXd {
    const auto L = p.size();
    switch (scheme) {
    case Scheme::Conventional: {
        MatrixXd d = MatrixXd::Zero(L, L);
        for (Eigen::Index l = 0; l < L; ++l) {
            d(l, l) = -2.0 * p[l] * dp[l];
        }
        return d;
    }
    case Scheme::Shadows: {
        MatrixXd d = -(dp * p.transpose() + p * dp.transpose());
        for (const auto &e : pairs.entries()) {
            const double v = e.overlap * dproducts[e.product];
            d(e.i, e.j) += v;
            if (e.i != e.j) {
                d(e.j, e.i) += v;
            }
        }
        return d;
    }
    case Scheme::ExactInfinite:
        break;
    }
    return MatrixXd::Zero(L, L);
}

struct Factorization {
    MatrixXd factor;
    double jitter_used = 0.0;
};

/**
 * Lower Cholesky factor of a symmetric PSD matrix. Matrices that are not
 * strictly positive definite have negative eigenvalues clipped to zero and
 * lambda = 1e-10 max(1, tr/L) added to the diagonal (escalated x100 up to
 * three times).
 */
[[nodiscard]] inline auto factorize(const MatrixXd &sigma) -> Factorization {
    const auto L = sigma.rows();
    if (sigma.cols() != L) {
        throw std::invalid_argument("factorize: matrix must be square");
    }
    if (L == 0) {
        return {};
    }
    double jitter = 1e-10 * std::max(1.0, sigma.trace() / static_cast<double>(L));

    Eigen::LLT<MatrixXd> llt(sigma);
    if (llt.info() == Eigen::Success) {
        MatrixXd S = llt.matrixL();
        const double min_pivot = S.diagonal().minCoeff();
        if (min_pivot * min_pivot > jitter) {
            return {std::move(S), 0.0};
        }
    }

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (sigma + sigma.transpose()));
    const VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    const MatrixXd repaired = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    for (int attempt = 0; attempt <= 3; ++attempt) {
        MatrixXd shifted = repaired;
        shifted.diagonal().array() += jitter;
        Eigen::LLT<MatrixXd> retry(shifted);
        if (retry.info() == Eigen::Success) {
            return {MatrixXd(retry.matrixL()), jitter};
        }
        jitter *= 100.0;
    }
    throw std::runtime_error("factorize: Cholesky failed after jitter escalation");
}

/**
 * Directional derivative of the Cholesky factor S of Sigma along dSigma:
 * dS = S Phi(S^-1 dSigma S^-T), Phi keeping the lower triangle with a halved
 * diagonal.
 */
[[nodiscard]] inline auto factorize_derivative(const MatrixXd &S, const MatrixXd &dsigma) -> MatrixXd {
    if (S.rows() == 0) {
        return {};
    }
    if (!(S.diagonal().array() > 0.0).all()) {
        throw std::domain_error("factorize_derivative: singular Cholesky factor");
    }
    const auto tri = S.triangularView<Eigen::Lower>();
    MatrixXd y = tri.solve(dsigma);                       // S^-1 dSigma
    MatrixXd x = tri.solve(y.transpose()).transpose();    // S^-1 dSigma S^-T
    MatrixXd phi = x.triangularView<Eigen::StrictlyLower>();
    phi.diagonal() = 0.5 * x.diagonal();
    return S * phi;
}

/// Finite-difference fallback for factorize_derivative (central, step h).
[[nodiscard]] inline auto factorize_derivative_fd(const MatrixXd &sigma, const MatrixXd &dsigma, double h = 1e-6)
    -> MatrixXd {
    const MatrixXd plus = factorize(sigma + h * dsigma).factor;
    const MatrixXd minus = factorize(sigma - h * dsigma).factor;
    return (plus - minus) / (2.0 * h);
}

[[nodiscard]] inline auto standard_normal_vector(Eigen::Index size, Rng &rng) -> VectorXd {
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd xi(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        xi[i] = normal(rng);
    }
    return xi;
}

/// y + alpha (1/sqrt(N_s)) S xi with a fresh standard normal xi.
[[nodiscard]] inline auto perturb(const VectorXd &y, const MatrixXd &alpha, const MatrixXd &S, std::uint64_t shots,
                                  Rng &rng) -> VectorXd {
    if (shots == 0) {
        throw std::invalid_argument("perturb: shot count must be positive");
    }
    if (alpha.rows() != y.size() || alpha.cols() != S.rows()) {
        throw std::invalid_argument("perturb: shape mismatch");
    }
    const VectorXd xi = standard_normal_vector(S.cols(), rng);
    return y + alpha * (S * xi) / std::sqrt(static_cast<double>(shots));
}

struct NoiseCovariance {
    Scheme scheme = Scheme::ExactInfinite;
    MatrixXd sigma;
    MatrixXd factor;
    double jitter_used = 0.0;
};

/**
 * Shot-noise surrogate for one basis and budget: covariance assembly, the
 * per-string copy scaling and noise draws.
 */
class NoiseModel {
  public:
    NoiseModel() = default;

    NoiseModel(const PauliBasis &basis, const MeasurementBudget &budget) : budget_(budget) {
        budget.validate();
        const auto L = static_cast<Eigen::Index>(basis.size());
        scale_ = VectorXd::Zero(L);
        switch (budget.scheme) {
        case Scheme::Shadows:
            pairs_ = ShadowPairTable(basis);
            scale_.setConstant(1.0 / std::sqrt(static_cast<double>(budget.shots)));
            break;
        case Scheme::Conventional: {
            const auto alloc = conventional_allocation(budget.shots, basis.size());
            for (Eigen::Index l = 0; l < L; ++l) {
                scale_[l] = 1.0 / std::sqrt(static_cast<double>(alloc[static_cast<std::size_t>(l)]));
            }
            break;
        }
        case Scheme::ExactInfinite:
            break;
        }
    }

    [[nodiscard]] auto scheme() const noexcept -> Scheme { return budget_.scheme; }
    [[nodiscard]] auto budget() const noexcept -> const MeasurementBudget & { return budget_; }
    [[nodiscard]] auto noisy() const noexcept -> bool { return budget_.finite(); }
    [[nodiscard]] auto pairs() const noexcept -> const ShadowPairTable & { return pairs_; }
    /// Per-string 1/sqrt(copies).
    [[nodiscard]] auto scale() const noexcept -> const VectorXd & { return scale_; }

    /// Strings whose expectations the covariance needs beyond the basis.
    [[nodiscard]] auto product_strings() const noexcept -> std::span<const PauliString> { return pairs_.products(); }

    [[nodiscard]] auto sigma(const VectorXd &p, const VectorXd &products) const -> MatrixXd {
        return covariance_from_expectations(budget_.scheme, p, products, pairs_);
    }

    [[nodiscard]] auto sigma_derivative(const VectorXd &p, const VectorXd &dp, const VectorXd &dproducts) const
        -> MatrixXd {
        return covariance_gradient(budget_.scheme, p, dp, dproducts, pairs_);
    }

    [[nodiscard]] auto covariance(const VectorXd &p, const VectorXd &products) const -> NoiseCovariance {
        NoiseCovariance c;
        c.scheme = budget_.scheme;
        c.sigma = sigma(p, products);
        if (noisy()) {
            auto f = factorize(c.sigma);
            c.factor = std::move(f.factor);
            c.jitter_used = f.jitter_used;
        } else {
            c.factor = MatrixXd::Zero(c.sigma.rows(), c.sigma.cols());
        }
        return c;
    }

    /// Noise on the expectations, D S xi.
    [[nodiscard]] auto apply(const MatrixXd &S, const VectorXd &xi) const -> VectorXd {
        return scale_.cwiseProduct(S * xi);
    }

    [[nodiscard]] auto draw(const MatrixXd &S, Rng &rng) const -> VectorXd {
        return apply(S, standard_normal_vector(S.cols(), rng));
    }

  private:
    MeasurementBudget budget_{};
    ShadowPairTable pairs_;
    VectorXd scale_;
};

/// Exact single-copy covariance and its factor for one state.
[[nodiscard]] inline auto covariance(const StateVector &state, const PauliBasis &basis, Scheme scheme)
    -> NoiseCovariance {
    const VectorXd p = expectations(state, basis.strings());
    if (scheme == Scheme::ExactInfinite) {
        NoiseCovariance c;
        c.sigma = MatrixXd::Zero(p.size(), p.size());
        c.factor = c.sigma;
        return c;
    }
    ShadowPairTable pairs;
    VectorXd products;
    if (scheme == Scheme::Shadows) {
        pairs = ShadowPairTable(basis);
        products = expectations(state, pairs.products());
    }
    NoiseCovariance c;
    c.scheme = scheme;
    c.sigma = covariance_from_expectations(scheme, p, products, pairs);
    auto f = factorize(c.sigma);
    c.factor = std::move(f.factor);
    c.jitter_used = f.jitter_used;
    return c;
}

} // namespace otevs
