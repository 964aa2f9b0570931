#pragma once

/**
 * @file
 * Finite-shot estimation of Pauli expectations: conventional per-string
 * measurement, random single-qubit Pauli classical shadows with
 * median-of-means, and the batch shot budgets that bound W1 between the
 * ideal and the shot-noise-perturbed generated batch.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "otevs/pauli.hpp"
#include "otevs/quantum_sim.hpp"
#include "otevs/rng.hpp"

namespace otevs {

enum class Scheme : std::uint8_t { Conventional, Shadows, ExactInfinite };

inline auto to_string(Scheme s) -> std::string {
    switch (s) {
    case Scheme::Conventional:
        return "conventional";
    case Scheme::Shadows:
        return "shadows";
    case Scheme::ExactInfinite:
        return "exact";
    }
    return "?";
}

inline auto parse_scheme(std::string_view s) -> Scheme {
    if (s == "conventional") {
        return Scheme::Conventional;
    }
    if (s == "shadows" || s == "shadow") {
        return Scheme::Shadows;
    }
    if (s == "exact" || s == "infinite") {
        return Scheme::ExactInfinite;
    }
    throw std::invalid_argument("unknown measurement scheme '" + std::string(s) + "'");
}

/// Median-of-means group count ceil(2 log(2L/delta)).
[[nodiscard]] inline auto default_mom_groups(std::size_t num_strings, double delta = 0.05) -> std::size_t {
    return static_cast<std::size_t>(std::ceil(2.0 * std::log(2.0 * static_cast<double>(num_strings) / delta)));
}

/**
 * Copies of the prepared state spent on one generated sample. `groups` is
 * the median-of-means group count for shadows; 1 gives the plain mean.
 */
struct MeasurementBudget {
    Scheme scheme = Scheme::ExactInfinite;
    std::uint64_t shots = 0;
    std::size_t groups = 1;

    static auto exact() -> MeasurementBudget { return {Scheme::ExactInfinite, 0, 1}; }
    static auto conventional(std::uint64_t shots) -> MeasurementBudget {
        return {Scheme::Conventional, shots, 1};
    }
    static auto shadows(std::uint64_t shots, std::size_t groups = 1) -> MeasurementBudget {
        return {Scheme::Shadows, shots, groups};
    }

    [[nodiscard]] auto finite() const noexcept -> bool { return scheme != Scheme::ExactInfinite; }

    /// Copies charged to the ledger per sample; the noiseless limit counts one symbolic copy.
    [[nodiscard]] auto copies_per_sample() const noexcept -> std::uint64_t { return finite() ? shots : 1; }

    void validate() const {
        if (finite() && shots < 1) {
            throw std::invalid_argument("MeasurementBudget: finite schemes need at least one shot");
        }
        if (scheme == Scheme::Shadows && groups < 1) {
            throw std::invalid_argument("MeasurementBudget: median-of-means needs at least one group");
        }
    }
};

/// Mean of `shots` Born-rule +-1 outcomes for P.
[[nodiscard]] inline auto conventional_estimate(const StateVector &state, const PauliString &p,
                                                std::uint64_t shots, Rng &rng) -> double {
    if (shots < 1) {
        throw std::invalid_argument("conventional_estimate: shots must be >= 1");
    }
    if (p.is_identity()) {
        return 1.0;
    }
    const double e = expectation(state, p);
    const double prob_plus = std::clamp((1.0 + e) / 2.0, 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> draw(shots, prob_plus);
    const auto plus = draw(rng);
    return (2.0 * static_cast<double>(plus) - static_cast<double>(shots)) / static_cast<double>(shots);
}

/// Copies per string when `shots` are split evenly across `num_strings`; remainder to the first strings.
[[nodiscard]] inline auto conventional_allocation(std::uint64_t shots, std::size_t num_strings)
    -> std::vector<std::uint64_t> {
    if (num_strings == 0) {
        return {};
    }
    if (shots < num_strings) {
        throw std::invalid_argument("conventional scheme needs at least one shot per Pauli string (" +
                                    std::to_string(shots) + " < " + std::to_string(num_strings) + ")");
    }
    std::vector<std::uint64_t> alloc(num_strings, shots / num_strings);
    for (std::size_t l = 0; l < shots % num_strings; ++l) {
        ++alloc[l];
    }
    return alloc;
}

[[nodiscard]] inline auto conventional_estimate_all(const StateVector &state, const PauliBasis &basis,
                                                    std::uint64_t shots, Rng &rng) -> std::vector<double> {
    const auto alloc = conventional_allocation(shots, basis.size());
    std::vector<double> est(basis.size());
    for (std::size_t l = 0; l < basis.size(); ++l) {
        est[l] = conventional_estimate(state, basis[l], alloc[l], rng);
    }
    return est;
}

/// Random single-qubit basis per qubit and the +-1 outcome observed in it.
struct ShadowSnapshot {
    std::vector<Pauli> bases;
    std::vector<std::int8_t> outcomes;
};

/// One shadow draw on a scratch copy of `state` (reused to avoid allocation).
inline void sample_shadow_into(const StateVector &state, Rng &rng, StateVector &scratch, ShadowSnapshot &out) {
    const std::size_t n = state.num_qubits();
    scratch = state;
    out.bases.resize(n);
    out.outcomes.resize(n);
    std::uniform_int_distribution<int> pick(1, 3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double h = 1.0 / std::sqrt(2.0);
    constexpr Complex I{0.0, 1.0};
    auto amps = scratch.amplitudes();
    for (std::size_t q = 0; q < n; ++q) {
        const auto basis = static_cast<Pauli>(pick(rng));
        out.bases[q] = basis;
        // Rotate the measured eigenbasis onto Z: H for X, H S^dagger for Y.
        if (basis == Pauli::X) {
            apply_one_qubit(scratch, q, h, h, h, -h);
        } else if (basis == Pauli::Y) {
            apply_one_qubit(scratch, q, h, -I * h, h, I * h);
        }
        const std::size_t bit = std::size_t{1} << q;
        double p0 = 0.0;
        for (std::size_t b = 0; b < amps.size(); ++b) {
            if ((b & bit) == 0) {
                p0 += std::norm(amps[b]);
            }
        }
        const bool zero = unit(rng) < p0;
        out.outcomes[q] = zero ? 1 : -1;
        const double keep = zero ? p0 : 1.0 - p0;
        const double scale = keep > 0.0 ? 1.0 / std::sqrt(keep) : 0.0;
        for (std::size_t b = 0; b < amps.size(); ++b) {
            if (((b & bit) == 0) == zero) {
                amps[b] *= scale;
            } else {
                amps[b] = 0.0;
            }
        }
    }
}

[[nodiscard]] inline auto sample_shadow(const StateVector &state, Rng &rng) -> ShadowSnapshot {
    StateVector scratch(state.num_qubits());
    ShadowSnapshot snap;
    sample_shadow_into(state, rng, scratch, snap);
    return snap;
}

/// tr(P rho_hat) for the snapshot: 3^weight times the outcome product when every
/// support basis matches, else 0.
[[nodiscard]] inline auto snapshot_estimate(const ShadowSnapshot &snap, const PauliString &p) -> double {
    double v = 1.0;
    for (std::size_t q = 0; q < p.num_qubits(); ++q) {
        const Pauli f = p[q];
        if (f == Pauli::I) {
            continue;
        }
        if (snap.bases[q] != f) {
            return 0.0;
        }
        v *= 3.0 * snap.outcomes[q];
    }
    return v;
}

/// Median of the means of `groups` contiguous equal chunks; the remainder is discarded.
[[nodiscard]] inline auto median_of_means(std::span<const double> values, std::size_t groups) -> double {
    if (values.empty()) {
        throw std::invalid_argument("median_of_means: empty input");
    }
    if (groups < 1 || groups > values.size()) {
        throw std::invalid_argument("median_of_means: group count must be in [1, " +
                                    std::to_string(values.size()) + "]");
    }
    const std::size_t chunk = values.size() / groups;
    std::vector<double> means(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        const auto first = values.begin() + static_cast<std::ptrdiff_t>(g * chunk);
        means[g] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(chunk), 0.0) / static_cast<double>(chunk);
    }
    if (groups == 1) {
        return means[0];
    }
    std::sort(means.begin(), means.end());
    if (groups % 2 == 1) {
        return means[groups / 2];
    }
    return 0.5 * (means[groups / 2 - 1] + means[groups / 2]);
}

/**
 * Draws budget.shots snapshots once and reuses every snapshot for every
 * string in the basis.
 */
[[nodiscard]] inline auto shadow_estimate_all(const StateVector &state, const PauliBasis &basis,
                                              const MeasurementBudget &budget, Rng &rng) -> std::vector<double> {
    if (budget.scheme != Scheme::Shadows) {
        throw std::invalid_argument("shadow_estimate_all: budget scheme must be shadows");
    }
    budget.validate();
    const std::size_t shots = budget.shots;
    const std::size_t L = basis.size();
    // per_string[l * shots + s]
    std::vector<double> per_string(L * shots);
    StateVector scratch(state.num_qubits());
    ShadowSnapshot snap;
    for (std::size_t s = 0; s < shots; ++s) {
        sample_shadow_into(state, rng, scratch, snap);
        for (std::size_t l = 0; l < L; ++l) {
            per_string[l * shots + s] = snapshot_estimate(snap, basis[l]);
        }
    }
    std::vector<double> est(L);
    for (std::size_t l = 0; l < L; ++l) {
        if (basis[l].is_identity()) {
            est[l] = 1.0;
            continue;
        }
        est[l] = median_of_means(std::span<const double>(per_string).subspan(l * shots, shots), budget.groups);
    }
    return est;
}

/// Estimates every basis string under the budget's scheme (exact values for the noiseless limit).
[[nodiscard]] inline auto estimate_all(const StateVector &state, const PauliBasis &basis,
                                       const MeasurementBudget &budget, Rng &rng) -> std::vector<double> {
    switch (budget.scheme) {
    case Scheme::Conventional:
        return conventional_estimate_all(state, basis, budget.shots, rng);
    case Scheme::Shadows:
        return shadow_estimate_all(state, basis, budget, rng);
    case Scheme::ExactInfinite:
        break;
    }
    std::vector<double> p(basis.size());
    for (std::size_t l = 0; l < basis.size(); ++l) {
        p[l] = expectation(state, basis[l]);
    }
    return p;
}

/**
 * Total copies over a batch of B samples that guarantee W1(ideal, perturbed)
 * <= epsilon with probability at least 1 - delta, for L Pauli strings of
 * locality k and observable weights with max row 1-norm T.
 *   shadows:      ceil(68 T^2 3^k / eps^2 log(2BL/delta)) B
 *   conventional: ceil( 2 T^2     / eps^2 log(2BL/delta)) B L
 */
[[nodiscard]] inline auto shots_required(Scheme scheme, double epsilon, double delta, std::size_t batch,
                                         std::size_t num_strings, std::size_t locality, double T) -> std::uint64_t {
    if (!(epsilon > 0.0 && epsilon <= 1.0) || !(delta > 0.0 && delta <= 1.0)) {
        throw std::invalid_argument("shots_required: epsilon and delta must lie in (0, 1]");
    }
    if (!(T > 0.0) || batch == 0 || num_strings == 0) {
        throw std::invalid_argument("shots_required: T, B and L must be positive");
    }
    const double B = static_cast<double>(batch);
    const double L = static_cast<double>(num_strings);
    const double log_term = std::log(2.0 * B * L / delta);
    switch (scheme) {
    case Scheme::Shadows: {
        const double per = std::ceil(68.0 * T * T * std::pow(3.0, static_cast<double>(locality)) /
                                     (epsilon * epsilon) * log_term);
        return static_cast<std::uint64_t>(per) * batch;
    }
    case Scheme::Conventional: {
        const double per = std::ceil(2.0 * T * T / (epsilon * epsilon) * log_term);
        return static_cast<std::uint64_t>(per) * batch * num_strings;
    }
    case Scheme::ExactInfinite:
        break;
    }
    throw std::invalid_argument("shots_required: no finite budget for the noiseless scheme");
}

/// Splits a batch budget across B samples; remainder copies go to the first samples.
[[nodiscard]] inline auto split_batch_budget(std::uint64_t total, std::size_t batch) -> std::vector<std::uint64_t> {
    if (batch == 0) {
        throw std::invalid_argument("split_batch_budget: empty batch");
    }
    std::vector<std::uint64_t> per(batch, total / batch);
    for (std::size_t i = 0; i < total % batch; ++i) {
        ++per[i];
    }
    return per;
}

} // namespace otevs
