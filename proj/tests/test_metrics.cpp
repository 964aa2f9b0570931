#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "otevs/metrics.hpp"
#include "otevs/trainer.hpp"

using namespace otevs;
using Catch::Matchers::WithinAbs;

namespace {

auto gaussian(Eigen::Index n, Eigen::Index dim, double mean, double sd, Rng &rng) -> MatrixXd {
    std::normal_distribution<double> normal(mean, sd);
    MatrixXd out(n, dim);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        out.data()[i] = normal(rng);
    }
    return out;
}

} // namespace

TEST_CASE("W1 agrees with brute force over all permutations") {
    auto rng = make_stream(81);
    for (Eigen::Index n = 1; n <= 6; ++n) {
        for (int rep = 0; rep < 5; ++rep) {
            const MatrixXd a = MatrixXd::Random(n, 3);
            const MatrixXd b = MatrixXd::Random(n, 3) * 2;
            CHECK_THAT(wasserstein1_exact(a, b), WithinAbs(oracle::brute_force_w1(a, b), 1e-12));
        }
    }
}

TEST_CASE("W1 hand examples") {
    MatrixXd a(2, 1);
    MatrixXd b(2, 1);
    a << 0.0, 1.0;
    b << 1.0, 0.0;
    CHECK(wasserstein1_exact(a, b) == 0.0);
    b << 2.0, 3.0;
    CHECK_THAT(wasserstein1_exact(a, b), WithinAbs(2.0, 1e-15));
    // l1 ground metric in two dimensions
    MatrixXd c(1, 2);
    MatrixXd d(1, 2);
    c << 0.0, 0.0;
    d << 3.0, -4.0;
    CHECK_THAT(wasserstein1_exact(c, d), WithinAbs(7.0, 1e-15));
}

TEST_CASE("W1 is a symmetric metric on sample sets") {
    auto rng = make_stream(82);
    const MatrixXd a = gaussian(40, 2, 0.0, 1.0, rng);
    const MatrixXd b = gaussian(40, 2, 0.5, 1.0, rng);
    const MatrixXd c = gaussian(40, 2, -0.3, 2.0, rng);
    CHECK(wasserstein1_exact(a, a) == 0.0);
    CHECK_THAT(wasserstein1_exact(a, b), WithinAbs(wasserstein1_exact(b, a), 1e-12));
    CHECK(wasserstein1_exact(a, c) <= wasserstein1_exact(a, b) + wasserstein1_exact(b, c) + 1e-12);
    // translation by v moves W1 by at most |v|_1, exactly when it dominates
    MatrixXd shifted = a;
    shifted.col(0).array() += 100.0;
    CHECK_THAT(wasserstein1_exact(a, shifted), WithinAbs(100.0, 1e-9));
}

TEST_CASE("W1 input validation") {
    CHECK_THROWS_AS(wasserstein1_exact(MatrixXd::Zero(3, 2), MatrixXd::Zero(4, 2)), std::invalid_argument);
    CHECK_THROWS_AS(wasserstein1_exact(MatrixXd::Zero(3, 2), MatrixXd::Zero(3, 1)), std::invalid_argument);
    CHECK_THROWS_AS(wasserstein1_exact(MatrixXd::Zero(513, 1), MatrixXd::Zero(513, 1)), std::invalid_argument);
    CHECK_THROWS_AS(wasserstein1_exact(MatrixXd::Zero(0, 1), MatrixXd::Zero(0, 1)), std::invalid_argument);
    MatrixXd nan = MatrixXd::Zero(2, 1);
    nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(wasserstein1_exact(nan, MatrixXd::Zero(2, 1)), std::invalid_argument);
}

TEST_CASE("kNN KL matches Gaussian closed forms and is asymmetric") {
    auto rng = make_stream(83);
    const MatrixXd narrow = gaussian(2048, 1, 0.0, 1.0, rng);
    const MatrixXd wide = gaussian(2048, 1, 0.0, 2.0, rng);
    // KL(N(0,1) || N(0,4)) = (1/4 - 1 + ln 4) / 2. The reverse direction (about 0.81) is
    // underestimated at this sample size because the wide tails fall where Q has few points,
    // so only its ordering is checked.
    const double forward = 0.5 * (0.25 - 1.0 + std::log(4.0));
    CHECK_THAT(kl_knn(narrow, wide), WithinAbs(forward, 0.1));
    CHECK(kl_knn(wide, narrow) > kl_knn(narrow, wide) + 0.1);
    // 2-D unit shift: |mu|^2 / 2
    const MatrixXd p = gaussian(2048, 2, 0.0, 1.0, rng);
    const MatrixXd q = gaussian(2048, 2, 1.0, 1.0, rng);
    CHECK_THAT(kl_knn(p, q), WithinAbs(1.0, 0.2));
}

TEST_CASE("kNN KL input validation") {
    auto rng = make_stream(84);
    const MatrixXd p = gaussian(10, 2, 0.0, 1.0, rng);
    CHECK_THROWS_AS(kl_knn(p, gaussian(10, 3, 0.0, 1.0, rng)), std::invalid_argument);
    CHECK_THROWS_AS(kl_knn(p, p, 10), std::invalid_argument);
    CHECK_THROWS_AS(kl_knn(p, p, 0), std::invalid_argument);
    CHECK_THROWS_AS(kl_knn(MatrixXd::Ones(10, 2), p), std::invalid_argument);
    CHECK_NOTHROW(kl_knn(p, p, 9));
}

TEST_CASE("output perturbation bound holds with the induced norm") {
    // W1(alpha p, alpha phat) <= (sum |alpha|) mean_b |p_b - phat_b|_inf for any M
    auto rng = make_stream(85);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index M = 1 + trial % 4;
        const Eigen::Index L = 5;
        const Eigen::Index B = 4;
        MatrixXd alpha(M, L);
        for (Eigen::Index i = 0; i < alpha.size(); ++i) {
            alpha.data()[i] = normal(rng);
        }
        const MatrixXd p = MatrixXd::Random(L, B);
        const MatrixXd phat = p + 0.1 * MatrixXd::Random(L, B);
        const MatrixXd ideal = (alpha * p).transpose();
        const MatrixXd noisy = (alpha * phat).transpose();
        const double mean_err = (p - phat).cwiseAbs().colwise().maxCoeff().sum() / static_cast<double>(B);
        CHECK(wasserstein1_exact(ideal, noisy) <= alpha.cwiseAbs().sum() * mean_err + 1e-12);
        if (M == 1) {
            const double row_norm = alpha.cwiseAbs().rowwise().sum().maxCoeff();
            CHECK(wasserstein1_exact(ideal, noisy) <= row_norm * mean_err + 1e-12);
        }
    }
}

TEST_CASE("the max-row-norm constant undercounts when several outputs share the error") {
    // all-ones alpha and a uniform error: every output moves by L delta
    const Eigen::Index M = 3;
    const Eigen::Index L = 4;
    const double delta = 0.01;
    const MatrixXd alpha = MatrixXd::Ones(M, L);
    const VectorXd p = VectorXd::Zero(L);
    const VectorXd phat = VectorXd::Constant(L, delta);
    const double w1 = wasserstein1_exact((alpha * p).transpose(), (alpha * phat).transpose());
    CHECK_THAT(w1, WithinAbs(static_cast<double>(M * L) * delta, 1e-15));
    CHECK(w1 > static_cast<double>(L) * delta);
    GeneratorParams params{VectorXd::Zero(1), alpha};
    CHECK(params.T() == static_cast<double>(L));
}

TEST_CASE("KL to the ideal distribution shrinks with the shot budget") {
    const GeneratorSpec spec{{2, Ansatz::Illustrative2Q, 2, 2}, 1, 2};
    auto rng = make_stream(86);
    const auto params = make_target_params(spec, rng);
    const std::vector<MeasurementBudget> budgets{MeasurementBudget::shadows(10), MeasurementBudget::shadows(100),
                                                 MeasurementBudget::shadows(1000), MeasurementBudget::exact()};
    const auto rows = kl_to_ideal_sweep(spec, params, budgets, 2048, 87);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].kl > rows[1].kl);
    CHECK(rows[1].kl > rows[2].kl);
    CHECK(rows[3].shots == 0);
    CHECK(std::abs(rows[3].kl) <= 0.1);
    CHECK(rows[0].shots == 10);
    // reproducible for a seed
    const auto again = kl_to_ideal_sweep(spec, params, {budgets[1]}, 2048, 87);
    CHECK(again[0].kl == rows[1].kl);
}
