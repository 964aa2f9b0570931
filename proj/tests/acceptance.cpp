// Acceptance gate: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset, e.g. `acceptance 3 7`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "otevs/otevs.hpp"

using namespace otevs;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

auto seconds_since(std::chrono::steady_clock::time_point t0) -> double {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

auto fmt(const char *f, double a) -> std::string {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

auto median(std::vector<double> v) -> double {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

auto binomial(std::size_t n, std::size_t k) -> std::size_t {
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

auto uniform_vector(Eigen::Index n, double lo, double hi, Rng &rng) -> VectorXd {
    std::uniform_real_distribution<double> u(lo, hi);
    VectorXd v(n);
    for (auto &x : v) {
        x = u(rng);
    }
    return v;
}

// 1 ----------------------------------------------------------------------------------------

auto pauli_counts() -> Outcome {
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t bad = 0;
    for (std::size_t n = 1; n <= 12; ++n) {
        for (std::size_t k = 0; k <= std::min<std::size_t>(3, n); ++k) {
            std::size_t expect = 0;
            for (std::size_t j = 0; j <= k; ++j) {
                expect += binomial(n, j) * static_cast<std::size_t>(std::pow(3.0, static_cast<double>(j)));
            }
            bad += enumerate_klocal(n, k).size() == expect ? 0 : 1;
        }
    }
    const bool spots = enumerate_klocal(8, 1).size() == 25 && enumerate_klocal(11, 2).size() == 529;
    const double secs = seconds_since(t0);
    return {bad == 0 && spots && secs < 1.0,
            std::to_string(bad) + " mismatches, spot values " + (spots ? "ok" : "wrong") + ", " + fmt("%.3f s", secs)};
}

// 2 ----------------------------------------------------------------------------------------

auto expectation_oracle() -> Outcome {
    auto rng = make_stream(2002);
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 4);
        const auto s = oracle::random_state(n, rng);
        const auto p = oracle::random_pauli(n, rng);
        worst = std::max(worst, std::abs(expectation(s, p) - oracle::dense_expectation(s, p)));
    }
    return {worst <= 1e-12, "max |diff| " + fmt("%.2e", worst) + " over 500 cases"};
}

// 3 ----------------------------------------------------------------------------------------

/// Entrywise comparison of Sigma against the empirical second moment of error vectors (rows).
auto compare_covariance(const MatrixXd &sigma, const MatrixXd &errors, double &worst_z) -> std::size_t {
    const auto N = static_cast<double>(errors.rows());
    const auto L = sigma.rows();
    std::size_t violations = 0;
    for (Eigen::Index i = 0; i < L; ++i) {
        for (Eigen::Index j = 0; j < L; ++j) {
            const VectorXd prod = errors.col(i).cwiseProduct(errors.col(j));
            const double mean = prod.mean();
            const double sd = std::sqrt((prod.array() - mean).square().sum() / (N - 1.0));
            const double se = sd / std::sqrt(N);
            const double diff = std::abs(mean - sigma(i, j));
            if (diff > 5.0 * se + 1e-12) {
                ++violations;
            }
            if (se > 0.0) {
                worst_z = std::max(worst_z, diff / se);
            }
        }
    }
    return violations;
}

auto covariance_fidelity() -> Outcome {
    const auto t0 = std::chrono::steady_clock::now();
    auto rng = make_stream(3003);
    const auto state = oracle::random_state(4, rng);
    const auto basis = enumerate_klocal(4, 1);
    const auto L = static_cast<Eigen::Index>(basis.size());
    const VectorXd p = expectations(state, basis.strings());
    constexpr Eigen::Index N = 10000;

    // shadows: one snapshot per error vector
    const ShadowPairTable pairs(basis);
    const MatrixXd sigma_sh =
        covariance_from_expectations(Scheme::Shadows, p, expectations(state, pairs.products()), pairs);
    MatrixXd err_sh(N, L);
    StateVector scratch(4);
    ShadowSnapshot snap;
    for (Eigen::Index s = 0; s < N; ++s) {
        sample_shadow_into(state, rng, scratch, snap);
        for (Eigen::Index l = 0; l < L; ++l) {
            err_sh(s, l) = snapshot_estimate(snap, basis[static_cast<std::size_t>(l)]) - p[l];
        }
    }
    // conventional: one shot of every string per error vector
    const MatrixXd sigma_cv = covariance_from_expectations(Scheme::Conventional, p, VectorXd{}, ShadowPairTable{});
    MatrixXd err_cv(N, L);
    for (Eigen::Index s = 0; s < N; ++s) {
        for (Eigen::Index l = 0; l < L; ++l) {
            err_cv(s, l) = conventional_estimate(state, basis[static_cast<std::size_t>(l)], 1, rng) - p[l];
        }
    }
    double z_sh = 0.0;
    double z_cv = 0.0;
    const auto v_sh = compare_covariance(sigma_sh, err_sh, z_sh);
    const auto v_cv = compare_covariance(sigma_cv, err_cv, z_cv);
    const double secs = seconds_since(t0);
    return {v_sh == 0 && v_cv == 0 && secs < 120.0,
            "entries beyond 5 SE: shadows " + std::to_string(v_sh) + " (max " + fmt("%.2f", z_sh) +
                " SE), conventional " + std::to_string(v_cv) + " (max " + fmt("%.2f", z_cv) + " SE), " +
                fmt("%.1f s", secs)};
}

// 4 ----------------------------------------------------------------------------------------

auto max_rel(const MatrixXd &a, const MatrixXd &b) -> double {
    return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-12);
}

auto gradient_suite() -> Outcome {
    auto rng = make_stream(4004);
    std::string detail;
    bool pass = true;
    auto record = [&](const std::string &name, double err, double tol) {
        pass = pass && err <= tol;
        detail += (detail.empty() ? "" : ", ") + name + " " + fmt("%.1e", err);
    };

    // parameter shift vs finite differences of the expectations (1e-5)
    {
        const CircuitSpec spec{3, Ansatz::Sequential, 2, 2};
        const auto basis = enumerate_klocal(3, 2);
        const VectorXd theta = uniform_vector(static_cast<Eigen::Index>(spec.param_count()), -3, 3, rng);
        const VectorXd zv = uniform_vector(2, -3, 3, rng);
        const std::vector<double> z(zv.data(), zv.data() + 2);
        const MatrixXd jac = parameter_shift(spec, theta, z, basis.strings());
        MatrixXd fd(jac.rows(), jac.cols());
        const double h = 1e-6;
        for (Eigen::Index d = 0; d < theta.size(); ++d) {
            VectorXd tp = theta;
            VectorXd tm = theta;
            tp[d] += h;
            tm[d] -= h;
            fd.col(d) = (expectations(prepare_state(spec, theta_span(tp), z), basis.strings()) -
                         expectations(prepare_state(spec, theta_span(tm), z), basis.strings())) /
                        (2 * h);
        }
        record("shift", max_rel(jac, fd), 1e-5);
    }
    // Cholesky directional derivative
    {
        const MatrixXd sigma = oracle::random_pd(6, rng);
        const MatrixXd dsigma = oracle::random_symmetric(6, rng);
        const MatrixXd S = factorize(sigma).factor;
        const double h = 1e-6;
        const MatrixXd fd = (MatrixXd(Eigen::LLT<MatrixXd>(sigma + h * dsigma).matrixL()) -
                             MatrixXd(Eigen::LLT<MatrixXd>(sigma - h * dsigma).matrixL())) /
                            (2 * h);
        record("cholesky", max_rel(factorize_derivative(S, dsigma), fd), 1e-4);
    }
    // critic double backprop
    {
        auto crng = make_stream(4005);
        const auto critic = Critic<double>::init_kaiming(3, {8, 8}, crng);
        const Eigen::Index B = 6;
        const MatrixXd real = MatrixXd::Random(3, B) * 2;
        const MatrixXd gen = MatrixXd::Random(3, B) * 2;
        const MatrixXd hat = MatrixXd::Random(3, B) * 2;
        const double lambda = 10.0;
        const auto lg = critic.loss_and_grad(real, gen, hat, lambda);
        VectorXd fd(lg.grad.size());
        const double h = 1e-6;
        for (Eigen::Index i = 0; i < fd.size(); ++i) {
            auto cp = critic;
            auto cm = critic;
            cp.params()[i] += h;
            cm.params()[i] -= h;
            fd[i] = (cp.loss_and_grad(real, gen, hat, lambda).loss - cm.loss_and_grad(real, gen, hat, lambda).loss) /
                    (2 * h);
        }
        record("critic", max_rel(lg.grad, fd), 1e-4);
    }
    // full theta gradient through the surrogate noise, xi frozen
    for (const auto scheme : {Scheme::Shadows, Scheme::Conventional}) {
        const GeneratorSpec spec{{2, Ansatz::Illustrative2Q, 2, 2}, 1, 2};
        const auto basis = spec.basis();
        const auto budget = scheme == Scheme::Shadows ? MeasurementBudget::shadows(50) : MeasurementBudget::conventional(50);
        const NoiseModel noise(basis, budget);
        auto grng = make_stream(4006, {static_cast<std::uint64_t>(scheme)});
        auto params = init_learner_params(spec, grng);
        const auto critic = Critic<double>::init_kaiming(2, {16, 16}, grng);
        const auto g = make_batch(spec, basis, noise, params, 4, grng, NoiseMode::Surrogate);
        const auto ev = evaluate_critic(critic, params.alpha * g.noisy_p);
        const VectorXd grad = theta_gradient(spec, basis, noise, params, g, ev.grad, NoiseMode::Surrogate, grng);
        VectorXd fd(grad.size());
        const double h = 1e-5;
        for (Eigen::Index d = 0; d < grad.size(); ++d) {
            auto pp = params;
            auto pm = params;
            pp.theta[d] += h;
            pm.theta[d] -= h;
            fd[d] = (frozen_generator_loss(spec, basis, noise, pp, g, critic) -
                     frozen_generator_loss(spec, basis, noise, pm, g, critic)) /
                    (2 * h);
        }
        record("theta/" + to_string(scheme), max_rel(grad, fd), 1e-4);
    }
    return {pass, "max rel err: " + detail};
}

// 5 ----------------------------------------------------------------------------------------

auto sample_complexity() -> Outcome {
    const auto t0 = std::chrono::steady_clock::now();
    const ComplexitySetting s{4, 1, 4, 0.2, 0.1, 1.0};
    const auto rows = cmd_complexity({s}, 200, 5005);
    bool pass = true;
    std::string detail;
    for (const auto &r : rows) {
        pass = pass && r.pass_rate() >= 0.9;
        detail += to_string(r.scheme) + " N_s=" + std::to_string(r.shots) + " pass " + fmt("%.3f", r.pass_rate()) + ", ";
    }
    const double secs = seconds_since(t0);
    return {pass && secs < 600.0, detail + fmt("%.1f s", secs)};
}

// 6 ----------------------------------------------------------------------------------------

auto lemma_inequality() -> Outcome {
    auto rng = make_stream(6006);
    std::size_t violations = 0;
    double tightest = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 3);
        const std::size_t M = 1 + static_cast<std::size_t>(trial % 3);
        const std::size_t B = 3 + static_cast<std::size_t>(trial % 4);
        const GeneratorSpec spec{{n, Ansatz::Sequential, 2, 2}, 1, M};
        const auto basis = spec.basis();
        const auto params = init_learner_params(spec, rng);
        const auto budget = trial % 2 == 0 ? MeasurementBudget::shadows(200) : MeasurementBudget::conventional(20 * basis.size());
        MatrixXd ideal(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(M));
        MatrixXd noisy(ideal.rows(), ideal.cols());
        double sum_max = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const auto z = sample_latent(rng, 2);
            const auto state = prepare_state(spec.circuit, theta_span(params.theta), z);
            const VectorXd p = expectations(state, basis.strings());
            const auto est = estimate_all(state, basis, budget, rng);
            const VectorXd phat = Eigen::Map<const VectorXd>(est.data(), p.size());
            ideal.row(static_cast<Eigen::Index>(b)) = (params.alpha * p).transpose();
            noisy.row(static_cast<Eigen::Index>(b)) = (params.alpha * phat).transpose();
            sum_max += (p - phat).cwiseAbs().maxCoeff();
        }
        const double lhs = wasserstein1_exact(ideal, noisy);
        const double rhs = params.T() / static_cast<double>(B) * sum_max;
        violations += lhs <= rhs ? 0 : 1;
        tightest = std::max(tightest, lhs / rhs);
    }
    return {violations == 0,
            std::to_string(violations) + " violations in 100 instances, max W1/bound " + fmt("%.3f", tightest)};
}

// 7 ----------------------------------------------------------------------------------------

auto ledger_formulas() -> Outcome {
    auto p = builtin_preset("illustrative");
    p.dataset_size = 512;
    p.train.iterations = 10;
    p.train.eval_every = 0;
    p.train.n_critic = 5;
    p.train.n_alpha = 2;
    const auto target = make_target(p, 7007);
    bool pass = true;
    std::string detail;
    for (const auto v : {Variant::Joint, Variant::Asynchronous, Variant::Decoupled}) {
        p.train.variant = v;
        const auto run = cmd_train(p, 7007, target.samples);
        const std::uint64_t Nw = p.train.n_critic;
        const std::uint64_t Na = p.train.n_alpha;
        const std::uint64_t Ns = p.budget.shots;
        const std::uint64_t B = p.train.batch;
        const std::uint64_t Nd = p.spec.circuit.param_count();
        std::uint64_t per = 0;
        if (v == Variant::Decoupled) {
            per = Na * ((Nw + Na - 1) / Na) * Ns * B + Ns * B + 2 * Nd * Ns * B;
        } else {
            per = (Nw + 1) * Ns * B + 2 * Nd * Ns * B;
        }
        const std::uint64_t expect = 10 * per;
        const std::uint64_t got = run.result.ledger.total();
        pass = pass && got == expect;
        detail += to_string(v) + " " + std::to_string(got) + (got == expect ? " == " : " != ") + std::to_string(expect) +
                  (v == Variant::Decoupled ? "" : ", ");
    }
    return {pass, detail};
}

// 8 ----------------------------------------------------------------------------------------

auto shadow_estimator() -> Outcome {
    const double eps = 0.3;
    const double delta = 0.1;
    const auto basis = enumerate_klocal(4, 1);
    const std::size_t L = basis.size();
    const auto K = static_cast<std::uint64_t>(
        std::ceil(68.0 * 3.0 / (eps * eps) * std::log(2.0 * static_cast<double>(L) / delta)));
    const auto budget = MeasurementBudget::shadows(K, default_mom_groups(L, delta));
    auto rng = make_stream(8008);
    std::size_t ok = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto state = oracle::random_state(4, rng);
        const auto est = shadow_estimate_all(state, basis, budget, rng);
        double err = 0.0;
        for (std::size_t l = 0; l < L; ++l) {
            err = std::max(err, std::abs(est[l] - expectation(state, basis[l])));
        }
        worst = std::max(worst, err);
        ok += err <= eps ? 1 : 0;
    }
    return {ok >= 90, "K=" + std::to_string(K) + ", groups=" + std::to_string(budget.groups) + ", " +
                          std::to_string(ok) + "/100 within eps, worst " + fmt("%.3f", worst)};
}

// 9 ----------------------------------------------------------------------------------------

/// Mean |L_C| over consecutive windows of the trace.
auto windowed_abs_critic_loss(const std::vector<TraceRow> &trace, std::size_t window) -> std::vector<double> {
    std::vector<double> out;
    for (std::size_t start = 0; start + window <= trace.size(); start += window) {
        double acc = 0.0;
        for (std::size_t i = start; i < start + window; ++i) {
            acc += std::abs(trace[i].critic_loss);
        }
        out.push_back(acc / static_cast<double>(window));
    }
    return out;
}

auto illustrative_training() -> Outcome {
    auto p = builtin_preset("illustrative");
    std::vector<double> initial;
    std::vector<double> final;
    std::vector<std::vector<double>> windows;
    double slowest = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto target = make_target(p, seed);
        const auto run = cmd_train(p, seed, target.samples);
        const double secs = seconds_since(t0);
        slowest = std::max(slowest, secs);
        initial.push_back(run.result.initial_kl.value_or(NAN));
        final.push_back(run.result.final_kl.value_or(NAN));
        const auto win = windowed_abs_critic_loss(run.result.trace, 200);
        const double peak = *std::max_element(win.begin(), win.end());
        windows.push_back(win);
        std::cout << "      seed " << seed << ": kl " << fmt("%.4f", initial.back()) << " -> "
                  << fmt("%.4f", final.back()) << ", |L_C| window peak " << fmt("%.3g", peak) << " final "
                  << fmt("%.3g", win.back()) << ", " << fmt("%.0f s", secs) << std::endl;
    }
    // L_C trend: the last window of the across-seed median |L_C| is at most half its peak.
    std::vector<double> med_win(windows.front().size());
    for (std::size_t w = 0; w < med_win.size(); ++w) {
        std::vector<double> at;
        for (const auto &v : windows) {
            at.push_back(v[w]);
        }
        med_win[w] = median(at);
    }
    const double peak = *std::max_element(med_win.begin(), med_win.end());
    const bool trend = med_win.back() <= 0.5 * peak;
    const double mi = median(initial);
    const double mf = median(final);
    const bool pass = mf <= 0.5 * mi && trend && slowest < 900.0;
    return {pass, "median kl " + fmt("%.4f", mi) + " -> " + fmt("%.4f", mf) + ", median |L_C| window peak " +
                      fmt("%.3g", peak) + " final " + fmt("%.3g", med_win.back()) + ", slowest seed " +
                      fmt("%.0f s", slowest)};
}

// 10 ---------------------------------------------------------------------------------------

auto noise_monotonicity() -> Outcome {
    auto p = builtin_preset("illustrative");
    p.trials = 5;
    p.sweep_shots = {100, 1000, 10000};
    const auto rows = cmd_noise_study(p, 1010, 2048);
    // The noiseless trials have true KL 0, so their spread is pure estimator noise. Two medians of
    // five may then differ by about that much without any real increase.
    const auto &inf = rows.back().kl_per_trial;
    double mean = 0.0;
    for (const double v : inf) {
        mean += v / static_cast<double>(inf.size());
    }
    double var = 0.0;
    for (const double v : inf) {
        var += (v - mean) * (v - mean) / static_cast<double>(inf.size() - 1);
    }
    const double band = 2.0 * std::sqrt(var);
    bool monotone = true;
    std::string detail;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].kl_median > rows[i - 1].kl_median + band) {
            monotone = false;
        }
        detail += (rows[i].shots == 0 ? std::string("inf") : std::to_string(rows[i].shots)) + ":" +
                  fmt("%.4f", rows[i].kl_median) + " ";
    }
    const bool floor = std::abs(rows.back().kl_median) <= 0.1;
    return {monotone && floor, detail + "band " + fmt("%.4f", band) + ", " +
                                   (monotone ? "non-increasing within band" : "NOT monotone") +
                                   (floor ? ", noiseless within 0.1 of 0" : ", noiseless point off 0")};
}

// 11 ---------------------------------------------------------------------------------------

auto w1_oracle() -> Outcome {
    auto rng = make_stream(1111);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index N = 1 + trial % 6;
        const Eigen::Index M = 1 + trial % 3;
        MatrixXd a(N, M);
        MatrixXd b(N, M);
        std::normal_distribution<double> normal;
        for (Eigen::Index i = 0; i < N; ++i) {
            for (Eigen::Index j = 0; j < M; ++j) {
                a(i, j) = normal(rng);
                b(i, j) = normal(rng);
            }
        }
        worst = std::max(worst, std::abs(wasserstein1_exact(a, b) - oracle::brute_force_w1(a, b)));
    }
    return {worst <= 1e-12, "max |diff| " + fmt("%.2e", worst) + " over 100 pairs"};
}

// 12 ---------------------------------------------------------------------------------------

auto kl_calibration() -> Outcome {
    auto rng = make_stream(1212);
    std::normal_distribution<double> normal;
    const Eigen::Index N = 2048;
    MatrixXd p(N, 1);
    MatrixXd q(N, 1);
    MatrixXd q_same(N, 1);
    for (Eigen::Index i = 0; i < N; ++i) {
        p(i, 0) = normal(rng);
        q(i, 0) = 1.0 + normal(rng);
        q_same(i, 0) = normal(rng);
    }
    const double shifted = kl_knn(p, q, 5);
    const double same = kl_knn(p, q_same, 5);
    return {std::abs(shifted - 0.5) <= 0.15 && std::abs(same) <= 0.1,
            "shifted " + fmt("%.4f", shifted) + " (want 0.5 +- 0.15), identical " + fmt("%.4f", same) +
                " (want 0 +- 0.1)"};
}

} // namespace

int main(int argc, char **argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"Pauli-count closed form", pauli_counts},
        {"expectation oracle", expectation_oracle},
        {"covariance fidelity", covariance_fidelity},
        {"gradient suite", gradient_suite},
        {"sample-complexity bounds", sample_complexity},
        {"W1 perturbation inequality", lemma_inequality},
        {"resource ledger", ledger_formulas},
        {"shadow estimator", shadow_estimator},
        {"illustrative training", illustrative_training},
        {"noise-study monotonicity", noise_monotonicity},
        {"W1 oracle", w1_oracle},
        {"KL estimator calibration", kl_calibration},
    };
    std::set<std::size_t> only;
    for (int i = 1; i < argc; ++i) {
        only.insert(static_cast<std::size_t>(std::atoi(argv[i])));
    }
    std::size_t failed = 0;
    for (std::size_t c = 0; c < criteria.size(); ++c) {
        if (!only.empty() && !only.contains(c + 1)) {
            continue;
        }
        Outcome o;
        try {
            o = criteria[c].second();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s  %2zu  %-28s %s\n", o.pass ? "PASS" : "FAIL", c + 1, criteria[c].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
