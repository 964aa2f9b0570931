#pragma once

/**
 * @file
 * Statevector simulation of the latent-embedding and variational circuits.
 *
 * Qubit q is bit q of the amplitude index. Rotations follow
 * R_A(phi) = exp(-i phi A / 2).
 */

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace otevs {

using Complex = std::complex<double>;

class StateVector {
  public:
    /// |0...0> on n qubits.
    explicit StateVector(std::size_t n) : n_(n), amps_(std::size_t{1} << n) {
        if (n == 0 || n > 24) {
            throw std::invalid_argument("StateVector: qubit count must be in [1, 24]");
        }
        amps_[0] = 1.0;
    }

    StateVector(std::size_t n, std::vector<Complex> amplitudes)
        : n_(n), amps_(std::move(amplitudes)) {
        if (amps_.size() != (std::size_t{1} << n)) {
            throw std::invalid_argument("StateVector: amplitude count must be 2^n");
        }
    }

    [[nodiscard]] auto num_qubits() const noexcept -> std::size_t { return n_; }
    [[nodiscard]] auto size() const noexcept -> std::size_t { return amps_.size(); }
    [[nodiscard]] auto amplitudes() const noexcept -> std::span<const Complex> { return amps_; }
    [[nodiscard]] auto amplitudes() noexcept -> std::span<Complex> { return amps_; }
    [[nodiscard]] auto operator[](std::size_t i) const -> const Complex & { return amps_[i]; }
    [[nodiscard]] auto operator[](std::size_t i) -> Complex & { return amps_[i]; }

    [[nodiscard]] auto norm() const -> double {
        double s = 0.0;
        for (const auto &a : amps_) {
            s += std::norm(a);
        }
        return std::sqrt(s);
    }

    void normalize() {
        const double inv = 1.0 / norm();
        for (auto &a : amps_) {
            a *= inv;
        }
    }

    /// |<this|other>|^2
    [[nodiscard]] auto fidelity(const StateVector &other) const -> double {
        if (other.n_ != n_) {
            throw std::invalid_argument("fidelity: qubit count mismatch");
        }
        Complex ip{0.0, 0.0};
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            ip += std::conj(amps_[i]) * other.amps_[i];
        }
        return std::norm(ip);
    }

  private:
    std::size_t n_;
    std::vector<Complex> amps_;
};

enum class GateKind : std::uint8_t { RX, RY, RZ, CZ };

struct Gate {
    GateKind kind;
    std::array<std::size_t, 2> qubits{};
    double angle = 0.0;

    [[nodiscard]] auto arity() const noexcept -> std::size_t {
        return kind == GateKind::CZ ? 2 : 1;
    }

    static auto rx(std::size_t q, double a) -> Gate { return {GateKind::RX, {q, q}, a}; }
    static auto ry(std::size_t q, double a) -> Gate { return {GateKind::RY, {q, q}, a}; }
    static auto rz(std::size_t q, double a) -> Gate { return {GateKind::RZ, {q, q}, a}; }
    static auto cz(std::size_t a, std::size_t b) -> Gate { return {GateKind::CZ, {a, b}, 0.0}; }

    friend auto operator==(const Gate &, const Gate &) -> bool = default;
};

/// Applies a single-qubit unitary [[u00, u01], [u10, u11]] to qubit q in place.
inline void apply_one_qubit(StateVector &state, std::size_t q, Complex u00, Complex u01,
                            Complex u10, Complex u11) {
    const std::size_t stride = std::size_t{1} << q;
    auto amps = state.amplitudes();
    for (std::size_t base = 0; base < amps.size(); base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const Complex a0 = amps[i];
            const Complex a1 = amps[i + stride];
            amps[i] = u00 * a0 + u01 * a1;
            amps[i + stride] = u10 * a0 + u11 * a1;
        }
    }
}

inline void apply_gate_inplace(StateVector &state, const Gate &gate) {
    const std::size_t n = state.num_qubits();
    for (std::size_t k = 0; k < gate.arity(); ++k) {
        if (gate.qubits[k] >= n) {
            throw std::out_of_range("apply_gate: qubit index " + std::to_string(gate.qubits[k]) +
                                    " out of range for " + std::to_string(n) + " qubits");
        }
    }
    const double c = std::cos(gate.angle / 2.0);
    const double s = std::sin(gate.angle / 2.0);
    constexpr Complex I{0.0, 1.0};
    switch (gate.kind) {
    case GateKind::RX:
        apply_one_qubit(state, gate.qubits[0], c, -I * s, -I * s, c);
        break;
    case GateKind::RY:
        apply_one_qubit(state, gate.qubits[0], c, -s, s, c);
        break;
    case GateKind::RZ:
        apply_one_qubit(state, gate.qubits[0], Complex{c, -s}, 0.0, 0.0, Complex{c, s});
        break;
    case GateKind::CZ: {
        if (gate.qubits[0] == gate.qubits[1]) {
            throw std::invalid_argument("apply_gate: CZ needs two distinct qubits");
        }
        const std::size_t mask = (std::size_t{1} << gate.qubits[0]) | (std::size_t{1} << gate.qubits[1]);
        auto amps = state.amplitudes();
        for (std::size_t i = 0; i < amps.size(); ++i) {
            if ((i & mask) == mask) {
                amps[i] = -amps[i];
            }
        }
        break;
    }
    }
}

[[nodiscard]] inline auto apply_gate(StateVector state, const Gate &gate) -> StateVector {
    apply_gate_inplace(state, gate);
    return state;
}

enum class Ansatz : std::uint8_t { Sequential, Brickwork, Illustrative2Q };

inline auto to_string(Ansatz a) -> std::string {
    switch (a) {
    case Ansatz::Sequential:
        return "sequential";
    case Ansatz::Brickwork:
        return "brickwork";
    case Ansatz::Illustrative2Q:
        return "illustrative";
    }
    return "?";
}

inline auto parse_ansatz(std::string_view s) -> Ansatz {
    if (s == "sequential" || s == "seq") {
        return Ansatz::Sequential;
    }
    if (s == "brickwork" || s == "brk") {
        return Ansatz::Brickwork;
    }
    if (s == "illustrative") {
        return Ansatz::Illustrative2Q;
    }
    throw std::invalid_argument("unknown ansatz '" + std::string(s) + "'");
}

/**
 * Circuit layout. Every variational layer is an RY then RZ rotation on each
 * qubit followed by CZ entanglers: a nearest-neighbour chain for the
 * sequential layer (also used by the illustrative circuit), even pairs then
 * odd pairs for the brickwork layer. Two latent angles are embedded.
 */
struct CircuitSpec {
    std::size_t n = 2;
    Ansatz ansatz = Ansatz::Sequential;
    std::size_t layers = 1;
    std::size_t latent_dim = 2;

    [[nodiscard]] auto angles_per_layer() const noexcept -> std::size_t { return 2 * n; }
    [[nodiscard]] auto param_count() const noexcept -> std::size_t { return layers * angles_per_layer(); }

    void validate() const {
        if (n == 0) {
            throw std::invalid_argument("CircuitSpec: n must be >= 1");
        }
        if (layers == 0) {
            throw std::invalid_argument("CircuitSpec: layers must be >= 1");
        }
        if (latent_dim != 2) {
            throw std::invalid_argument("CircuitSpec: latent_dim must be 2");
        }
        if (ansatz == Ansatz::Illustrative2Q && layers != 2) {
            throw std::invalid_argument("CircuitSpec: illustrative circuit has exactly 2 layers");
        }
    }

    friend auto operator==(const CircuitSpec &, const CircuitSpec &) -> bool = default;
};

namespace detail {

inline void append_layer(std::vector<Gate> &gates, const CircuitSpec &spec,
                         std::span<const double> theta, std::size_t layer) {
    const std::size_t off = layer * spec.angles_per_layer();
    for (std::size_t q = 0; q < spec.n; ++q) {
        gates.push_back(Gate::ry(q, theta[off + 2 * q]));
        gates.push_back(Gate::rz(q, theta[off + 2 * q + 1]));
    }
    if (spec.ansatz == Ansatz::Brickwork) {
        for (std::size_t q = 0; q + 1 < spec.n; q += 2) {
            gates.push_back(Gate::cz(q, q + 1));
        }
        for (std::size_t q = 1; q + 1 < spec.n; q += 2) {
            gates.push_back(Gate::cz(q, q + 1));
        }
    } else {
        for (std::size_t q = 0; q + 1 < spec.n; ++q) {
            gates.push_back(Gate::cz(q, q + 1));
        }
    }
}

inline void append_embedding_x(std::vector<Gate> &gates, std::size_t n, double angle) {
    for (std::size_t q = 0; q < n; ++q) {
        gates.push_back(Gate::rx(q, angle));
    }
}

} // namespace detail

/// Latent embedding followed by the variational layers.
[[nodiscard]] inline auto build_circuit(const CircuitSpec &spec, std::span<const double> theta,
                                        std::span<const double> z) -> std::vector<Gate> {
    spec.validate();
    if (theta.size() != spec.param_count()) {
        throw std::invalid_argument("build_circuit: expected " + std::to_string(spec.param_count()) +
                                    " circuit angles, got " + std::to_string(theta.size()));
    }
    if (z.size() != spec.latent_dim) {
        throw std::invalid_argument("build_circuit: expected " + std::to_string(spec.latent_dim) +
                                    " latent angles, got " + std::to_string(z.size()));
    }
    std::vector<Gate> gates;
    gates.reserve(spec.layers * (3 * spec.n) + 2 * spec.n);
    switch (spec.ansatz) {
    case Ansatz::Sequential:
        detail::append_embedding_x(gates, spec.n, z[0]);
        for (std::size_t q = 0; q < spec.n; ++q) {
            gates.push_back(Gate::rz(q, z[1]));
        }
        for (std::size_t l = 0; l < spec.layers; ++l) {
            detail::append_layer(gates, spec, theta, l);
        }
        break;
    case Ansatz::Brickwork:
        // 1-based odd qubits (0, 2, 4, ... here) carry z_1, the rest carry z_2.
        for (std::size_t q = 0; q < spec.n; ++q) {
            gates.push_back(Gate::rx(q, q % 2 == 0 ? z[0] : z[1]));
        }
        for (std::size_t l = 0; l < spec.layers; ++l) {
            detail::append_layer(gates, spec, theta, l);
        }
        break;
    case Ansatz::Illustrative2Q:
        detail::append_embedding_x(gates, spec.n, z[0]);
        detail::append_layer(gates, spec, theta, 0);
        detail::append_embedding_x(gates, spec.n, z[1]);
        detail::append_layer(gates, spec, theta, 1);
        break;
    }
    return gates;
}

inline void run_circuit(StateVector &state, std::span<const Gate> gates) {
    for (const auto &g : gates) {
        apply_gate_inplace(state, g);
    }
}

[[nodiscard]] inline auto prepare_state(const CircuitSpec &spec, std::span<const double> theta,
                                        std::span<const double> z) -> StateVector {
    const auto gates = build_circuit(spec, theta, z);
    StateVector state(spec.n);
    run_circuit(state, gates);
    return state;
}

} // namespace otevs
