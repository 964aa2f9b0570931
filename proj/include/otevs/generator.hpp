#pragma once

/**
 * @file
 * Observable-tunable expectation value sampler: a latent draw prepares a
 * state, the Pauli basis expectations p are measured and the outputs are
 * y = alpha p.
 */

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "otevs/ledger.hpp"
#include "otevs/measurement.hpp"
#include "otevs/noise_surrogate.hpp"
#include "otevs/pauli.hpp"
#include "otevs/quantum_sim.hpp"
#include "otevs/rng.hpp"

namespace otevs {

using LatentSample = std::vector<double>;

/// Circuit angles and the M x L observable weight matrix.
struct GeneratorParams {
    VectorXd theta;
    MatrixXd alpha;

    /// Max row 1-norm of alpha; bounds every output observable's operator norm.
    [[nodiscard]] auto T() const -> double {
        return alpha.size() == 0 ? 0.0 : alpha.cwiseAbs().rowwise().sum().maxCoeff();
    }

    [[nodiscard]] auto outputs() const noexcept -> std::size_t { return static_cast<std::size_t>(alpha.rows()); }

    void validate(const CircuitSpec &spec, const PauliBasis &basis) const {
        if (static_cast<std::size_t>(theta.size()) != spec.param_count()) {
            throw std::invalid_argument("GeneratorParams: theta has " + std::to_string(theta.size()) +
                                        " entries, circuit needs " + std::to_string(spec.param_count()));
        }
        if (static_cast<std::size_t>(alpha.cols()) != basis.size()) {
            throw std::invalid_argument("GeneratorParams: alpha has " + std::to_string(alpha.cols()) +
                                        " columns, basis has " + std::to_string(basis.size()) + " strings");
        }
        if (basis.num_qubits() != spec.n) {
            throw std::invalid_argument("GeneratorParams: basis and circuit qubit counts differ");
        }
    }
};

/// Model structure shared by a generator's parameters: circuit, Pauli basis, output dimension.
struct GeneratorSpec {
    CircuitSpec circuit;
    std::size_t locality = 1;
    std::size_t outputs = 1;

    [[nodiscard]] auto basis() const -> PauliBasis { return enumerate_klocal(circuit.n, locality); }
};

[[nodiscard]] inline auto sample_latent(Rng &rng, std::size_t K) -> LatentSample {
    if (K < 1) {
        throw std::invalid_argument("sample_latent: K must be >= 1");
    }
    std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
    LatentSample z(K);
    for (auto &v : z) {
        v = u(rng);
    }
    return z;
}

struct GeneratedSample {
    VectorXd y;
    VectorXd p;
};

inline auto theta_span(const VectorXd &theta) -> std::span<const double> {
    return {theta.data(), static_cast<std::size_t>(theta.size())};
}

[[nodiscard]] inline auto generate(const GeneratorParams &params, const CircuitSpec &spec, const PauliBasis &basis,
                                   std::span<const double> z, Charge charge = {}) -> GeneratedSample {
    params.validate(spec, basis);
    const auto state = prepare_state(spec, theta_span(params.theta), z);
    charge(1);
    GeneratedSample out;
    out.p = expectations(state, basis.strings());
    out.y = params.alpha * out.p;
    return out;
}

enum class NoiseMode : std::uint8_t { Surrogate, ExactSimulation };

inline auto to_string(NoiseMode m) -> std::string { return m == NoiseMode::Surrogate ? "surrogate" : "simulate"; }

inline auto parse_noise_mode(std::string_view s) -> NoiseMode {
    if (s == "surrogate") {
        return NoiseMode::Surrogate;
    }
    if (s == "simulate" || s == "exact-simulation") {
        return NoiseMode::ExactSimulation;
    }
    throw std::invalid_argument("unknown noise mode '" + std::string(s) + "'");
}

/// Shot-noise-perturbed output. The noiseless scheme returns y unchanged.
[[nodiscard]] inline auto generate_noisy(const GeneratorParams &params, const CircuitSpec &spec,
                                         const PauliBasis &basis, std::span<const double> z, const NoiseModel &noise,
                                         Rng &rng, NoiseMode mode, Charge charge = {}) -> VectorXd {
    params.validate(spec, basis);
    const auto state = prepare_state(spec, theta_span(params.theta), z);
    charge(1);
    const VectorXd p = expectations(state, basis.strings());
    if (!noise.noisy()) {
        return params.alpha * p;
    }
    if (mode == NoiseMode::Surrogate) {
        VectorXd products;
        if (noise.scheme() == Scheme::Shadows) {
            products = expectations(state, noise.product_strings());
        }
        const auto cov = noise.covariance(p, products);
        return params.alpha * (p + noise.draw(cov.factor, rng));
    }
    const auto est = estimate_all(state, basis, noise.budget(), rng);
    return params.alpha * Eigen::Map<const VectorXd>(est.data(), static_cast<Eigen::Index>(est.size()));
}

/**
 * Parameter-shift Jacobian of the expectations of `strings` with respect to
 * the circuit angles: column d is (p(theta_d + pi/2) - p(theta_d - pi/2)) / 2.
 * Exact because every angle drives a single Pauli rotation.
 */
[[nodiscard]] inline auto parameter_shift(const CircuitSpec &spec, const VectorXd &theta, std::span<const double> z,
                                          std::span<const PauliString> strings, Charge charge = {}) -> MatrixXd {
    const auto Nd = theta.size();
    MatrixXd jac(static_cast<Eigen::Index>(strings.size()), Nd);
    VectorXd shifted = theta;
    constexpr double shift = std::numbers::pi / 2.0;
    for (Eigen::Index d = 0; d < Nd; ++d) {
        shifted[d] = theta[d] + shift;
        const VectorXd plus = expectations(prepare_state(spec, theta_span(shifted), z), strings);
        shifted[d] = theta[d] - shift;
        const VectorXd minus = expectations(prepare_state(spec, theta_span(shifted), z), strings);
        shifted[d] = theta[d];
        jac.col(d) = 0.5 * (plus - minus);
    }
    charge(2 * static_cast<std::uint64_t>(Nd));
    return jac;
}

/// dp/dtheta (L x N_d) by the parameter-shift rule; charges 2 N_d preparations.
[[nodiscard]] inline auto grad_theta(const GeneratorParams &params, const CircuitSpec &spec, const PauliBasis &basis,
                                     std::span<const double> z, Charge charge = {}) -> MatrixXd {
    params.validate(spec, basis);
    return parameter_shift(spec, params.theta, z, basis.strings(), charge);
}

/// Parameter-shift Jacobian from finite-shot estimates at every shifted circuit.
[[nodiscard]] inline auto grad_theta_estimated(const GeneratorParams &params, const CircuitSpec &spec,
                                               const PauliBasis &basis, std::span<const double> z,
                                               const MeasurementBudget &budget, Rng &rng, Charge charge = {})
    -> MatrixXd {
    params.validate(spec, basis);
    const auto Nd = params.theta.size();
    const auto L = static_cast<Eigen::Index>(basis.size());
    MatrixXd jac(L, Nd);
    VectorXd shifted = params.theta;
    constexpr double shift = std::numbers::pi / 2.0;
    for (Eigen::Index d = 0; d < Nd; ++d) {
        shifted[d] = params.theta[d] + shift;
        const auto plus = estimate_all(prepare_state(spec, theta_span(shifted), z), basis, budget, rng);
        shifted[d] = params.theta[d] - shift;
        const auto minus = estimate_all(prepare_state(spec, theta_span(shifted), z), basis, budget, rng);
        shifted[d] = params.theta[d];
        for (Eigen::Index l = 0; l < L; ++l) {
            jac(l, d) = 0.5 * (plus[static_cast<std::size_t>(l)] - minus[static_cast<std::size_t>(l)]);
        }
    }
    charge(2 * static_cast<std::uint64_t>(Nd));
    return jac;
}

/// dy_m / d alpha_{m,l} = p_l for every output row m (and 0 across rows); costs no copies.
[[nodiscard]] inline auto grad_alpha(const VectorXd &p) -> VectorXd { return p; }

/// Vector-Jacobian product of y = alpha p with respect to alpha: upstream * p^T.
[[nodiscard]] inline auto alpha_vjp(const VectorXd &upstream, const VectorXd &p) -> MatrixXd {
    return upstream * grad_alpha(p).transpose();
}

// Checkpoints ---------------------------------------------------------------

inline constexpr const char *kGeneratorFormat = "otevs-generator/1";

[[nodiscard]] inline auto generator_to_json(const GeneratorSpec &spec, const GeneratorParams &params)
    -> nlohmann::json {
    nlohmann::json j;
    j["format"] = kGeneratorFormat;
    j["circuit"] = {{"n", spec.circuit.n},
                    {"ansatz", to_string(spec.circuit.ansatz)},
                    {"layers", spec.circuit.layers},
                    {"latent_dim", spec.circuit.latent_dim}};
    j["basis"] = {{"n", spec.circuit.n}, {"k", spec.locality}};
    j["outputs"] = spec.outputs;
    j["theta"] = std::vector<double>(params.theta.data(), params.theta.data() + params.theta.size());
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(params.alpha.size()));
    for (Eigen::Index r = 0; r < params.alpha.rows(); ++r) {
        for (Eigen::Index c = 0; c < params.alpha.cols(); ++c) {
            flat.push_back(params.alpha(r, c));
        }
    }
    j["alpha"] = {{"rows", params.alpha.rows()}, {"cols", params.alpha.cols()}, {"data", flat}};
    return j;
}

[[nodiscard]] inline auto generator_from_json(const nlohmann::json &j) -> std::pair<GeneratorSpec, GeneratorParams> {
    if (j.value("format", std::string{}) != kGeneratorFormat) {
        throw std::runtime_error("generator checkpoint: unsupported format tag");
    }
    GeneratorSpec spec;
    spec.circuit.n = j.at("circuit").at("n").get<std::size_t>();
    spec.circuit.ansatz = parse_ansatz(j.at("circuit").at("ansatz").get<std::string>());
    spec.circuit.layers = j.at("circuit").at("layers").get<std::size_t>();
    spec.circuit.latent_dim = j.at("circuit").at("latent_dim").get<std::size_t>();
    spec.locality = j.at("basis").at("k").get<std::size_t>();
    spec.outputs = j.at("outputs").get<std::size_t>();
    GeneratorParams params;
    const auto theta = j.at("theta").get<std::vector<double>>();
    params.theta = Eigen::Map<const VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    const auto rows = j.at("alpha").at("rows").get<Eigen::Index>();
    const auto cols = j.at("alpha").at("cols").get<Eigen::Index>();
    const auto data = j.at("alpha").at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw std::runtime_error("generator checkpoint: alpha data size mismatch");
    }
    params.alpha = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data.data(), rows, cols);
    spec.circuit.validate();
    if (static_cast<std::size_t>(rows) != spec.outputs) {
        throw std::runtime_error("generator checkpoint: alpha rows differ from output dimension");
    }
    params.validate(spec.circuit, spec.basis());
    return {spec, params};
}

} // namespace otevs
