#pragma once

/**
 * @file
 * Adversarial training of an OT-EVS generator against a gradient-penalty
 * critic, in the three update schedules:
 *
 *   Joint         N_w critic steps, then one simultaneous (theta, alpha) step
 *                 on a single generated batch.
 *   Asynchronous  N_w critic steps, one generated batch, N_alpha alpha steps
 *                 on it (fresh surrogate noise each), then one theta step.
 *   Decoupled     N_alpha rounds of (ceil(N_w / N_alpha) critic steps, one
 *                 alpha step on the last critic batch), then one theta step on
 *                 a fresh batch.
 *
 * Every generated batch costs N_s B copies; a theta step adds 2 N_d N_s B for
 * the parameter shifts. alpha steps reuse measured batches and cost nothing.
 */

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "otevs/adam.hpp"
#include "otevs/critic.hpp"
#include "otevs/generator.hpp"
#include "otevs/ledger.hpp"
#include "otevs/measurement.hpp"
#include "otevs/metrics.hpp"
#include "otevs/noise_surrogate.hpp"
#include "otevs/rng.hpp"

namespace otevs {

enum class Variant : std::uint8_t { Joint, Asynchronous, Decoupled };

inline auto to_string(Variant v) -> std::string {
    switch (v) {
    case Variant::Joint:
        return "joint";
    case Variant::Asynchronous:
        return "async";
    case Variant::Decoupled:
        return "decoupled";
    }
    return "?";
}

inline auto parse_variant(std::string_view s) -> Variant {
    if (s == "joint") {
        return Variant::Joint;
    }
    if (s == "async" || s == "asynchronous") {
        return Variant::Asynchronous;
    }
    if (s == "decoupled") {
        return Variant::Decoupled;
    }
    throw std::invalid_argument("unknown training variant '" + std::string(s) + "'");
}

struct TrainConfig {
    Variant variant = Variant::Joint;
    double lambda = 0.1;
    std::size_t n_critic = 5;
    std::size_t n_alpha = 5;
    std::size_t batch = 256;
    AdamHyper theta_opt{1e-3, 0.0, 0.9};
    AdamHyper alpha_opt{1e-4, 0.9, 0.9};
    AdamHyper critic_opt{1e-4, 0.5, 0.9};
    std::size_t iterations = 2000;
    std::size_t eval_every = 200; // 0 disables periodic evaluation
    std::size_t eval_samples = 2048;
    std::size_t knn_k = kDefaultKnn;
    std::vector<std::size_t> critic_hidden{512, 512, 512};
    NoiseMode noise_mode = NoiseMode::Surrogate;
    bool record_events = false;

    void validate() const {
        if (n_critic < 1) {
            throw std::invalid_argument("TrainConfig: n_critic must be >= 1");
        }
        if (variant != Variant::Joint && n_alpha < 1) {
            throw std::invalid_argument("TrainConfig: n_alpha must be >= 1 for async/decoupled");
        }
        if (batch < 1) {
            throw std::invalid_argument("TrainConfig: batch must be >= 1");
        }
        for (const auto *h : {&theta_opt, &alpha_opt, &critic_opt}) {
            if (!(h->lr > 0.0)) {
                throw std::invalid_argument("TrainConfig: learning rates must be positive");
            }
        }
        if (lambda < 0.0) {
            throw std::invalid_argument("TrainConfig: lambda must be non-negative");
        }
    }

    /// Critic steps per iteration as scheduled (Decoupled rounds N_w up to a multiple of N_alpha).
    [[nodiscard]] auto critic_steps_per_iteration() const -> std::size_t {
        if (variant == Variant::Decoupled) {
            return n_alpha * ((n_critic + n_alpha - 1) / n_alpha);
        }
        return n_critic;
    }
};

/// Copies consumed by one training iteration.
[[nodiscard]] inline auto copies_per_iteration(const TrainConfig &cfg, std::size_t num_params,
                                               std::uint64_t copies_per_sample) -> std::uint64_t {
    const std::uint64_t batch = copies_per_sample * cfg.batch;
    const std::uint64_t shifts = 2 * static_cast<std::uint64_t>(num_params) * batch;
    return (cfg.critic_steps_per_iteration() + 1) * batch + shifts;
}

// Target and learner initialisation ----------------------------------------------------

/// theta = shared U[-pi, pi) offset + N(0, pi/8) per coordinate; each alpha row gets 1, 4, 9 at 3 random strings.
[[nodiscard]] inline auto make_target_params(const GeneratorSpec &spec, Rng &rng) -> GeneratorParams {
    const auto basis = spec.basis();
    const auto L = basis.size();
    if (L < 3) {
        throw std::invalid_argument("make_target_params: basis needs at least 3 strings");
    }
    GeneratorParams params;
    std::uniform_real_distribution<double> offset_dist(-std::numbers::pi, std::numbers::pi);
    std::normal_distribution<double> jitter(0.0, std::numbers::pi / 8.0);
    const double offset = offset_dist(rng);
    params.theta.resize(static_cast<Eigen::Index>(spec.circuit.param_count()));
    for (auto &t : params.theta) {
        t = offset + jitter(rng);
    }
    params.alpha = MatrixXd::Zero(static_cast<Eigen::Index>(spec.outputs), static_cast<Eigen::Index>(L));
    std::vector<std::size_t> idx(L);
    for (Eigen::Index m = 0; m < params.alpha.rows(); ++m) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        params.alpha(m, static_cast<Eigen::Index>(idx[0])) = 1.0;
        params.alpha(m, static_cast<Eigen::Index>(idx[1])) = 4.0;
        params.alpha(m, static_cast<Eigen::Index>(idx[2])) = 9.0;
    }
    return params;
}

/// theta ~ U[-pi, pi), alpha ~ N(0, 2 / L).
[[nodiscard]] inline auto init_learner_params(const GeneratorSpec &spec, Rng &rng) -> GeneratorParams {
    const auto L = spec.basis().size();
    GeneratorParams params;
    std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
    params.theta.resize(static_cast<Eigen::Index>(spec.circuit.param_count()));
    for (auto &t : params.theta) {
        t = u(rng);
    }
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(L)));
    params.alpha.resize(static_cast<Eigen::Index>(spec.outputs), static_cast<Eigen::Index>(L));
    for (Eigen::Index m = 0; m < params.alpha.rows(); ++m) {
        for (Eigen::Index l = 0; l < params.alpha.cols(); ++l) {
            params.alpha(m, l) = normal(rng);
        }
    }
    return params;
}

/// `count` noiseless outputs, one per row.
[[nodiscard]] inline auto sample_ideal(const GeneratorSpec &spec, const GeneratorParams &params, std::size_t count,
                                       Rng &rng) -> MatrixXd {
    const auto basis = spec.basis();
    MatrixXd out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(spec.outputs));
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const auto z = sample_latent(rng, spec.circuit.latent_dim);
        out.row(i) = generate(params, spec.circuit, basis, z).y.transpose();
    }
    return out;
}

// Generated batches -------------------------------------------------------------------

/**
 * One batch of generator samples with everything the gradients need: exact
 * expectations, the surrogate factor and the frozen standard normal draw of
 * each sample, and the noisy expectations p + D S xi actually fed onwards.
 */
struct GeneratedBatch {
    std::vector<LatentSample> z;
    MatrixXd p;        // L x B
    MatrixXd noisy_p;  // L x B
    MatrixXd products; // shadow pair products, P x B
    std::vector<MatrixXd> factors;
    MatrixXd xi; // L x B

    [[nodiscard]] auto size() const noexcept -> std::size_t { return z.size(); }
};

/// Copies charged for a batch follow the budget (1 per sample when noiseless).
[[nodiscard]] inline auto make_batch(const GeneratorSpec &spec, const PauliBasis &basis, const NoiseModel &noise,
                                     const GeneratorParams &params, std::size_t B, Rng &rng, NoiseMode mode,
                                     Charge charge = {}) -> GeneratedBatch {
    const auto L = static_cast<Eigen::Index>(basis.size());
    GeneratedBatch g;
    g.z.reserve(B);
    g.p.resize(L, static_cast<Eigen::Index>(B));
    g.noisy_p.resize(L, static_cast<Eigen::Index>(B));
    const bool surrogate = noise.noisy() && mode == NoiseMode::Surrogate;
    if (surrogate) {
        g.xi.resize(L, static_cast<Eigen::Index>(B));
        g.factors.reserve(B);
        g.products.resize(static_cast<Eigen::Index>(noise.product_strings().size()), static_cast<Eigen::Index>(B));
    }
    for (std::size_t b = 0; b < B; ++b) {
        const auto col = static_cast<Eigen::Index>(b);
        g.z.push_back(sample_latent(rng, spec.circuit.latent_dim));
        const auto state = prepare_state(spec.circuit, theta_span(params.theta), g.z.back());
        g.p.col(col) = expectations(state, basis.strings());
        if (!noise.noisy()) {
            g.noisy_p.col(col) = g.p.col(col);
        } else if (surrogate) {
            VectorXd products;
            if (noise.scheme() == Scheme::Shadows) {
                products = expectations(state, noise.product_strings());
                g.products.col(col) = products;
            }
            auto cov = noise.covariance(g.p.col(col), products);
            g.xi.col(col) = standard_normal_vector(L, rng);
            g.noisy_p.col(col) = g.p.col(col) + noise.apply(cov.factor, g.xi.col(col));
            g.factors.push_back(std::move(cov.factor));
        } else {
            const auto est = estimate_all(state, basis, noise.budget(), rng);
            g.noisy_p.col(col) = Eigen::Map<const VectorXd>(est.data(), L);
        }
    }
    charge(B);
    return g;
}

/// Fresh surrogate noise on the same latents and exact expectations. No-op without surrogate factors.
inline void redraw_noise(GeneratedBatch &g, const NoiseModel &noise, Rng &rng) {
    if (g.factors.empty()) {
        return;
    }
    for (std::size_t b = 0; b < g.size(); ++b) {
        const auto col = static_cast<Eigen::Index>(b);
        g.xi.col(col) = standard_normal_vector(g.p.rows(), rng);
        g.noisy_p.col(col) = g.p.col(col) + noise.apply(g.factors[b], g.xi.col(col));
    }
}

template <typename Scalar> struct CriticEval {
    double loss = 0.0; // L_G = -mean D(y)
    MatrixXd grad;     // dD/dy per sample, M x B
};

template <typename Scalar>
[[nodiscard]] auto evaluate_critic(const Critic<Scalar> &critic, const MatrixXd &y) -> CriticEval<Scalar> {
    using Mat = typename Critic<Scalar>::Mat;
    const Mat ys = y.cast<Scalar>();
    const auto cache = critic.forward_cached(ys);
    CriticEval<Scalar> out;
    out.loss = -static_cast<double>(cache.output.sum()) / static_cast<double>(y.cols());
    out.grad = critic.grad_input_batch(ys).template cast<double>();
    return out;
}

/// d L_G / d alpha = -(1/B) sum_b grad D(y_b) noisy_p_b^T.
[[nodiscard]] inline auto alpha_gradient(const MatrixXd &critic_grad, const MatrixXd &noisy_p) -> MatrixXd {
    return -(critic_grad * noisy_p.transpose()) / static_cast<double>(noisy_p.cols());
}

/**
 * d L_G / d theta through y = alpha (p + D S xi) with xi frozen:
 * -(1/B) sum_b grad D(y_b) . alpha (dp_b + D dS_b xi_b). dp and the pair
 * products' derivatives come from the same parameter-shifted circuits.
 * In exact-simulation mode the shifted circuits are measured with the budget
 * instead.
 */
[[nodiscard]] inline auto theta_gradient(const GeneratorSpec &spec, const PauliBasis &basis, const NoiseModel &noise,
                                         const GeneratorParams &params, const GeneratedBatch &g,
                                         const MatrixXd &critic_grad, NoiseMode mode, Rng &rng) -> VectorXd {
    const auto Nd = params.theta.size();
    const auto L = static_cast<Eigen::Index>(basis.size());
    const auto B = static_cast<Eigen::Index>(g.size());
    VectorXd grad = VectorXd::Zero(Nd);
    const bool surrogate = noise.noisy() && mode == NoiseMode::Surrogate;
    const bool simulate = noise.noisy() && mode == NoiseMode::ExactSimulation;

    std::vector<PauliString> strings(basis.strings().begin(), basis.strings().end());
    if (surrogate && noise.scheme() == Scheme::Shadows) {
        strings.insert(strings.end(), noise.product_strings().begin(), noise.product_strings().end());
    }
    for (Eigen::Index b = 0; b < B; ++b) {
        const auto &z = g.z[static_cast<std::size_t>(b)];
        const VectorXd u = params.alpha.transpose() * critic_grad.col(b);
        if (simulate) {
            const MatrixXd jac = grad_theta_estimated(params, spec.circuit, basis, z, noise.budget(), rng);
            grad.noalias() += jac.transpose() * u;
            continue;
        }
        const MatrixXd jac = parameter_shift(spec.circuit, params.theta, z, strings);
        grad.noalias() += jac.topRows(L).transpose() * u;
        if (!surrogate) {
            continue;
        }
        const auto &S = g.factors[static_cast<std::size_t>(b)];
        const VectorXd p = g.p.col(b);
        const VectorXd xi = g.xi.col(b);
        const VectorXd empty;
        for (Eigen::Index d = 0; d < Nd; ++d) {
            const VectorXd dp = jac.col(d).head(L);
            const VectorXd dprod = strings.size() > basis.size() ? VectorXd(jac.col(d).tail(jac.rows() - L)) : empty;
            const MatrixXd dsigma = noise.sigma_derivative(p, dp, dprod);
            MatrixXd dS = factorize_derivative(S, dsigma);
            if (!dS.allFinite()) {
                dS = factorize_derivative_fd(noise.sigma(p, g.products.col(b)), dsigma);
            }
            grad[d] += u.dot(noise.apply(dS, xi));
        }
    }
    return -grad / static_cast<double>(B);
}

/// End-to-end generator loss at `theta` with the batch's latents and noise draws frozen.
template <typename Scalar>
[[nodiscard]] auto frozen_generator_loss(const GeneratorSpec &spec, const PauliBasis &basis, const NoiseModel &noise,
                                         const GeneratorParams &params, const GeneratedBatch &g,
                                         const Critic<Scalar> &critic) -> double {
    const auto B = static_cast<Eigen::Index>(g.size());
    MatrixXd y(static_cast<Eigen::Index>(params.outputs()), B);
    for (Eigen::Index b = 0; b < B; ++b) {
        const auto state = prepare_state(spec.circuit, theta_span(params.theta), g.z[static_cast<std::size_t>(b)]);
        VectorXd p = expectations(state, basis.strings());
        if (!g.factors.empty()) {
            VectorXd products;
            if (noise.scheme() == Scheme::Shadows) {
                products = expectations(state, noise.product_strings());
            }
            const auto cov = noise.covariance(p, products);
            p += noise.apply(cov.factor, g.xi.col(b));
        }
        y.col(b) = params.alpha * p;
    }
    return evaluate_critic(critic, y).loss;
}

// Trainer -------------------------------------------------------------------------------

struct TraceRow {
    std::size_t iteration = 0;
    double generator_loss = 0.0;
    double critic_loss = 0.0;
    std::optional<double> kl;
    std::uint64_t ledger_total = 0;
    double wall_ms = 0.0;
};

struct TrainResult {
    std::vector<TraceRow> trace;
    std::optional<double> initial_kl;
    std::optional<double> final_kl;
    ResourceLedger ledger;
    std::vector<std::string> events;
};

template <typename Scalar = float> class BasicTrainer {
  public:
    using CriticT = Critic<Scalar>;
    using Mat = typename CriticT::Mat;

    /// `data` holds the target samples, one per row.
    BasicTrainer(GeneratorSpec spec, TrainConfig cfg, MeasurementBudget budget, MatrixXd data,
                 GeneratorParams init, CriticT critic, std::uint64_t seed)
        : spec_(std::move(spec)), cfg_(std::move(cfg)), basis_(spec_.basis()), noise_(basis_, budget),
          data_(std::move(data)), params_(std::move(init)), critic_(std::move(critic)),
          rng_(make_stream(seed, {0x7261696eULL})), seed_(seed) {
        cfg_.validate();
        params_.validate(spec_.circuit, basis_);
        if (data_.rows() == 0) {
            throw std::invalid_argument("trainer: empty target dataset");
        }
        if (static_cast<std::size_t>(data_.cols()) != spec_.outputs || params_.outputs() != spec_.outputs) {
            throw std::invalid_argument("trainer: output dimension mismatch between spec, dataset and alpha");
        }
        if (critic_.input_dim() != spec_.outputs) {
            throw std::invalid_argument("trainer: critic input dimension differs from the output dimension");
        }
        theta_adam_ = AdamState<double>(params_.theta.size());
        alpha_adam_ = AdamState<double>(params_.alpha.size());
        critic_adam_ = AdamState<Scalar>(static_cast<Eigen::Index>(critic_.num_params()));
    }

    /// Entries of alpha with mask 0 are never updated.
    void set_alpha_mask(MatrixXd mask) {
        if (mask.rows() != params_.alpha.rows() || mask.cols() != params_.alpha.cols()) {
            throw std::invalid_argument("trainer: alpha mask shape mismatch");
        }
        alpha_mask_ = std::move(mask);
    }

    void set_theta_frozen(bool frozen) noexcept { theta_frozen_ = frozen; }

    [[nodiscard]] auto params() const noexcept -> const GeneratorParams & { return params_; }
    [[nodiscard]] auto critic() const noexcept -> const CriticT & { return critic_; }
    [[nodiscard]] auto config() const noexcept -> const TrainConfig & { return cfg_; }
    [[nodiscard]] auto spec() const noexcept -> const GeneratorSpec & { return spec_; }
    [[nodiscard]] auto basis() const noexcept -> const PauliBasis & { return basis_; }
    [[nodiscard]] auto noise() const noexcept -> const NoiseModel & { return noise_; }
    [[nodiscard]] auto ledger() const noexcept -> const ResourceLedger & { return ledger_; }
    [[nodiscard]] auto events() const noexcept -> const std::vector<std::string> & { return events_; }
    [[nodiscard]] auto last_critic_loss() const noexcept -> double { return last_critic_loss_; }
    [[nodiscard]] auto last_generator_loss() const noexcept -> double { return last_generator_loss_; }

    [[nodiscard]] auto copies_per_sample() const noexcept -> std::uint64_t {
        return noise_.budget().copies_per_sample();
    }

    /// Generates a batch charged to `phase`.
    auto generate_batch(Phase phase) -> GeneratedBatch {
        log("generate:" + to_string(phase));
        return make_batch(spec_, basis_, noise_, params_, cfg_.batch, rng_, cfg_.noise_mode,
                          Charge{&ledger_, phase, copies_per_sample()});
    }

    /// One critic update on a fresh generated batch; returns that batch.
    auto critic_step() -> GeneratedBatch {
        auto g = generate_batch(Phase::Critic);
        log("critic");
        const auto B = static_cast<Eigen::Index>(cfg_.batch);
        const MatrixXd gen = params_.alpha * g.noisy_p;
        MatrixXd real(gen.rows(), B);
        std::uniform_int_distribution<Eigen::Index> pick(0, data_.rows() - 1);
        for (Eigen::Index b = 0; b < B; ++b) {
            real.col(b) = data_.row(pick(rng_)).transpose();
        }
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        MatrixXd hat(gen.rows(), B);
        for (Eigen::Index b = 0; b < B; ++b) {
            const double e = unit(rng_);
            hat.col(b) = e * real.col(b) + (1.0 - e) * gen.col(b);
        }
        const auto lg = critic_.loss_and_grad(real.cast<Scalar>(), gen.cast<Scalar>(), hat.cast<Scalar>(),
                                              static_cast<Scalar>(cfg_.lambda));
        critic_adam_.update(critic_.params(), lg.grad, cfg_.critic_opt);
        last_critic_loss_ = static_cast<double>(lg.loss);
        return g;
    }

    /// alpha update from a measured batch; no quantum cost.
    void alpha_step(const GeneratedBatch &g) {
        log("alpha");
        const auto ev = evaluate_critic(critic_, params_.alpha * g.noisy_p);
        apply_alpha(alpha_gradient(ev.grad, g.noisy_p));
    }

    /// theta update on a measured batch; charges the 2 N_d shifted circuits per sample.
    void theta_step(const GeneratedBatch &g) {
        log("theta");
        const auto ev = evaluate_critic(critic_, params_.alpha * g.noisy_p);
        last_generator_loss_ = ev.loss;
        apply_theta(compute_theta_gradient(g, ev.grad));
    }

    /// One iteration of the configured schedule.
    void iterate() {
        switch (cfg_.variant) {
        case Variant::Joint: {
            for (std::size_t i = 0; i < cfg_.n_critic; ++i) {
                (void)critic_step();
            }
            const auto g = generate_batch(Phase::Alpha);
            log("joint");
            const auto ev = evaluate_critic(critic_, params_.alpha * g.noisy_p);
            last_generator_loss_ = ev.loss;
            const MatrixXd ga = alpha_gradient(ev.grad, g.noisy_p);
            const VectorXd gt = compute_theta_gradient(g, ev.grad);
            apply_alpha(ga);
            apply_theta(gt);
            break;
        }
        case Variant::Asynchronous: {
            for (std::size_t i = 0; i < cfg_.n_critic; ++i) {
                (void)critic_step();
            }
            auto g = generate_batch(Phase::Alpha);
            for (std::size_t a = 0; a < cfg_.n_alpha; ++a) {
                if (a > 0) {
                    redraw_noise(g, noise_, rng_);
                }
                alpha_step(g);
            }
            theta_step(g);
            break;
        }
        case Variant::Decoupled: {
            const std::size_t inner = (cfg_.n_critic + cfg_.n_alpha - 1) / cfg_.n_alpha;
            for (std::size_t a = 0; a < cfg_.n_alpha; ++a) {
                GeneratedBatch last;
                for (std::size_t c = 0; c < inner; ++c) {
                    last = critic_step();
                }
                alpha_step(last);
            }
            const auto g = generate_batch(Phase::Theta);
            theta_step(g);
            break;
        }
        }
    }

    /// KL of `eval_samples` noiseless outputs against the first `eval_samples` target rows.
    [[nodiscard]] auto evaluate_kl(std::size_t tag) -> double {
        const auto n = std::min<Eigen::Index>(static_cast<Eigen::Index>(cfg_.eval_samples), data_.rows());
        auto rng = make_stream(seed_, {0x6576616cULL, static_cast<std::uint64_t>(tag)});
        const MatrixXd gen = sample_ideal(spec_, params_, static_cast<std::size_t>(n), rng);
        ledger_.charge_evaluation(static_cast<std::uint64_t>(n) * copies_per_sample());
        return kl_knn(gen, data_.topRows(n), cfg_.knn_k);
    }

    /// Runs the full iteration budget. `on_row` sees every trace row as it is produced.
    auto run(const std::function<void(const TraceRow &)> &on_row = {}) -> TrainResult {
        TrainResult result;
        const auto start = std::chrono::steady_clock::now();
        if (cfg_.eval_every > 0) {
            result.initial_kl = evaluate_kl(0);
        }
        for (std::size_t it = 1; it <= cfg_.iterations; ++it) {
            iterate();
            TraceRow row;
            row.iteration = it;
            row.generator_loss = last_generator_loss_;
            row.critic_loss = last_critic_loss_;
            if (cfg_.eval_every > 0 && (it % cfg_.eval_every == 0 || it == cfg_.iterations)) {
                row.kl = evaluate_kl(it);
                result.final_kl = row.kl;
            }
            row.ledger_total = ledger_.total();
            row.wall_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            if (on_row) {
                on_row(row);
            }
            result.trace.push_back(row);
        }
        result.ledger = ledger_;
        result.events = events_;
        return result;
    }

  private:
    void log(std::string e) {
        if (cfg_.record_events) {
            events_.push_back(std::move(e));
        }
    }

    auto compute_theta_gradient(const GeneratedBatch &g, const MatrixXd &critic_grad) -> VectorXd {
        ledger_.charge(Phase::Theta, 2 * static_cast<std::uint64_t>(params_.theta.size()) * g.size() *
                                         copies_per_sample());
        return theta_gradient(spec_, basis_, noise_, params_, g, critic_grad, cfg_.noise_mode, rng_);
    }

    void apply_alpha(MatrixXd grad) {
        if (alpha_mask_.size() != 0) {
            grad.array() *= alpha_mask_.array();
        }
        alpha_adam_.update(params_.alpha, grad, cfg_.alpha_opt);
    }

    void apply_theta(const VectorXd &grad) {
        if (!theta_frozen_) {
            theta_adam_.update(params_.theta, grad, cfg_.theta_opt);
        }
    }

    GeneratorSpec spec_;
    TrainConfig cfg_;
    PauliBasis basis_;
    NoiseModel noise_;
    MatrixXd data_;
    GeneratorParams params_;
    CriticT critic_;
    Rng rng_;
    std::uint64_t seed_;
    AdamState<double> theta_adam_;
    AdamState<double> alpha_adam_;
    AdamState<Scalar> critic_adam_;
    MatrixXd alpha_mask_;
    bool theta_frozen_ = false;
    ResourceLedger ledger_;
    std::vector<std::string> events_;
    double last_critic_loss_ = 0.0;
    double last_generator_loss_ = 0.0;
};

using Trainer = BasicTrainer<float>;

} // namespace otevs
