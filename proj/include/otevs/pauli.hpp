#pragma once

/**
 * @file
 * Pauli strings over n qubits: k-local enumeration, exact expectation values
 * on a statevector and pairwise products.
 */

#include <algorithm>
#include <bit>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "otevs/quantum_sim.hpp"

namespace otevs {

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline auto pauli_char(Pauli p) -> char { return "IXYZ"[static_cast<int>(p)]; }

inline auto pauli_from_char(char c) -> Pauli {
    switch (c) {
    case 'I':
        return Pauli::I;
    case 'X':
        return Pauli::X;
    case 'Y':
        return Pauli::Y;
    case 'Z':
        return Pauli::Z;
    default:
        throw std::invalid_argument(std::string("invalid Pauli letter '") + c + "'");
    }
}

/**
 * Tensor product of single-qubit Pauli factors. Character i of the text form
 * is the factor on qubit i, so "XIZ" is X on qubit 0 and Z on qubit 2.
 */
class PauliString {
  public:
    PauliString() = default;

    explicit PauliString(std::size_t n) : factors_(n, Pauli::I) { check_size(); }

    explicit PauliString(std::vector<Pauli> factors) : factors_(std::move(factors)) {
        check_size();
        rebuild_masks();
    }

    static auto identity(std::size_t n) -> PauliString { return PauliString(n); }

    static auto parse(std::string_view text) -> PauliString {
        std::vector<Pauli> f;
        f.reserve(text.size());
        for (char c : text) {
            f.push_back(pauli_from_char(c));
        }
        return PauliString(std::move(f));
    }

    [[nodiscard]] auto str() const -> std::string {
        std::string s;
        s.reserve(factors_.size());
        for (auto p : factors_) {
            s.push_back(pauli_char(p));
        }
        return s;
    }

    [[nodiscard]] auto num_qubits() const noexcept -> std::size_t { return factors_.size(); }
    [[nodiscard]] auto operator[](std::size_t q) const -> Pauli { return factors_[q]; }
    [[nodiscard]] auto factors() const noexcept -> std::span<const Pauli> { return factors_; }

    void set(std::size_t q, Pauli p) {
        factors_.at(q) = p;
        rebuild_masks();
    }

    [[nodiscard]] auto weight() const noexcept -> std::size_t {
        return static_cast<std::size_t>(std::popcount(x_mask_ | z_mask_));
    }
    [[nodiscard]] auto is_identity() const noexcept -> bool { return (x_mask_ | z_mask_) == 0; }

    [[nodiscard]] auto support() const -> std::vector<std::size_t> {
        std::vector<std::size_t> s;
        for (std::size_t q = 0; q < factors_.size(); ++q) {
            if (factors_[q] != Pauli::I) {
                s.push_back(q);
            }
        }
        return s;
    }

    /// Qubits carrying X or Y (bit flips).
    [[nodiscard]] auto x_mask() const noexcept -> std::uint64_t { return x_mask_; }
    /// Qubits carrying Z or Y (phase flips).
    [[nodiscard]] auto z_mask() const noexcept -> std::uint64_t { return z_mask_; }
    [[nodiscard]] auto y_count() const noexcept -> int { return std::popcount(x_mask_ & z_mask_); }

    friend auto operator==(const PauliString &a, const PauliString &b) -> bool {
        return a.factors_ == b.factors_;
    }

  private:
    void check_size() const {
        if (factors_.size() > 63) {
            throw std::invalid_argument("PauliString: at most 63 qubits supported");
        }
    }

    void rebuild_masks() {
        x_mask_ = z_mask_ = 0;
        for (std::size_t q = 0; q < factors_.size(); ++q) {
            const auto bit = std::uint64_t{1} << q;
            if (factors_[q] == Pauli::X || factors_[q] == Pauli::Y) {
                x_mask_ |= bit;
            }
            if (factors_[q] == Pauli::Z || factors_[q] == Pauli::Y) {
                z_mask_ |= bit;
            }
        }
    }

    std::vector<Pauli> factors_;
    std::uint64_t x_mask_ = 0;
    std::uint64_t z_mask_ = 0;
};

/// Number of Pauli strings on n qubits with weight at most k.
[[nodiscard]] inline auto klocal_count(std::size_t n, std::size_t k) -> std::size_t {
    std::size_t total = 0;
    std::size_t binom = 1; // C(n, j)
    std::size_t pow3 = 1;
    for (std::size_t j = 0; j <= k && j <= n; ++j) {
        total += binom * pow3;
        binom = binom * (n - j) / (j + 1);
        pow3 *= 3;
    }
    return total;
}

/**
 * Every Pauli string with weight <= k, identity first. Ordered by weight,
 * then lexicographically by support, then by factor letters (X < Y < Z).
 */
class PauliBasis {
  public:
    PauliBasis() = default;
    PauliBasis(std::size_t n, std::size_t k, std::vector<PauliString> strings)
        : n_(n), k_(k), strings_(std::move(strings)) {}

    [[nodiscard]] auto num_qubits() const noexcept -> std::size_t { return n_; }
    [[nodiscard]] auto locality() const noexcept -> std::size_t { return k_; }
    [[nodiscard]] auto size() const noexcept -> std::size_t { return strings_.size(); }
    [[nodiscard]] auto strings() const noexcept -> std::span<const PauliString> { return strings_; }
    [[nodiscard]] auto operator[](std::size_t l) const -> const PauliString & { return strings_[l]; }

    /// Index of a string in the basis, or size() when absent.
    [[nodiscard]] auto index_of(const PauliString &p) const -> std::size_t {
        auto it = std::find(strings_.begin(), strings_.end(), p);
        return static_cast<std::size_t>(it - strings_.begin());
    }

  private:
    std::size_t n_ = 0;
    std::size_t k_ = 0;
    std::vector<PauliString> strings_;
};

[[nodiscard]] inline auto enumerate_klocal(std::size_t n, std::size_t k) -> PauliBasis {
    if (k > n) {
        throw std::invalid_argument("enumerate_klocal: locality k exceeds qubit count n");
    }
    std::vector<PauliString> out;
    out.reserve(klocal_count(n, k));
    std::vector<std::size_t> support;
    std::vector<int> letters;

    // Recursively choose supports in lexicographic order, then letters.
    std::function<void(std::size_t, std::size_t)> choose = [&](std::size_t start, std::size_t remaining) {
        if (remaining == 0) {
            const std::size_t w = support.size();
            letters.assign(w, 1);
            while (true) {
                std::vector<Pauli> f(n, Pauli::I);
                for (std::size_t i = 0; i < w; ++i) {
                    f[support[i]] = static_cast<Pauli>(letters[i]);
                }
                out.emplace_back(std::move(f));
                std::size_t pos = w;
                while (pos > 0 && letters[pos - 1] == 3) {
                    letters[pos - 1] = 1;
                    --pos;
                }
                if (pos == 0) {
                    break;
                }
                ++letters[pos - 1];
            }
            return;
        }
        for (std::size_t q = start; q + remaining <= n; ++q) {
            support.push_back(q);
            choose(q + 1, remaining - 1);
            support.pop_back();
        }
    };
    for (std::size_t w = 0; w <= k; ++w) {
        choose(0, w);
    }
    return PauliBasis(n, k, std::move(out));
}

namespace detail {

/// <psi|P|psi> as a complex number using in-place Pauli action.
inline auto pauli_braket(const StateVector &state, const PauliString &p) -> Complex {
    const auto amps = state.amplitudes();
    const std::uint64_t xm = p.x_mask();
    const std::uint64_t zm = p.z_mask();
    Complex acc{0.0, 0.0};
    if (xm == 0) {
        double s = 0.0;
        for (std::size_t b = 0; b < amps.size(); ++b) {
            const double w = std::norm(amps[b]);
            s += (std::popcount(b & zm) & 1) ? -w : w;
        }
        return {s, 0.0};
    }
    // P|b> = i^{#Y} (-1)^{|b & zm|} |b ^ xm>
    for (std::size_t b = 0; b < amps.size(); ++b) {
        const Complex term = std::conj(amps[b ^ xm]) * amps[b];
        acc += (std::popcount(b & zm) & 1) ? -term : term;
    }
    static constexpr Complex ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return acc * ipow[p.y_count() & 3];
}

} // namespace detail

[[nodiscard]] inline auto expectation(const StateVector &state, const PauliString &p) -> double {
    if (p.num_qubits() != state.num_qubits()) {
        throw std::invalid_argument("expectation: Pauli string has " + std::to_string(p.num_qubits()) +
                                    " qubits, state has " + std::to_string(state.num_qubits()));
    }
    if (p.is_identity()) {
        return 1.0;
    }
    return detail::pauli_braket(state, p).real();
}

/// Product P_i P_j = i^phase_power * string.
struct PauliProduct {
    int phase_power = 0; // 0..3
    PauliString string;

    [[nodiscard]] auto phase() const -> Complex {
        static constexpr Complex ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        return ipow[phase_power & 3];
    }
    [[nodiscard]] auto phase_is_real() const noexcept -> bool { return (phase_power & 1) == 0; }
};

[[nodiscard]] inline auto pauli_product(const PauliString &a, const PauliString &b) -> PauliProduct {
    if (a.num_qubits() != b.num_qubits()) {
        throw std::invalid_argument("pauli_product: qubit count mismatch");
    }
    // table[a][b] = (power of i, letter) for single-qubit a*b
    static constexpr int pow_table[4][4] = {
        {0, 0, 0, 0}, {0, 0, 1, 3}, {0, 3, 0, 1}, {0, 1, 3, 0}};
    int power = 0;
    std::vector<Pauli> f(a.num_qubits());
    for (std::size_t q = 0; q < f.size(); ++q) {
        const int pa = static_cast<int>(a[q]);
        const int pb = static_cast<int>(b[q]);
        power += pow_table[pa][pb];
        f[q] = static_cast<Pauli>(pa ^ pb);
    }
    return {power & 3, PauliString(std::move(f))};
}

/// <P_i P_j> for a pair whose product carries a real phase.
[[nodiscard]] inline auto pair_expectation(const StateVector &state, const PauliString &a,
                                           const PauliString &b) -> double {
    const auto prod = pauli_product(a, b);
    if (!prod.phase_is_real()) {
        throw std::domain_error("pair_expectation: product " + a.str() + "*" + b.str() +
                                " has an imaginary phase");
    }
    return prod.phase().real() * expectation(state, prod.string);
}

} // namespace otevs
