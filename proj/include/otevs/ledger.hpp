#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace otevs {

enum class Phase : std::uint8_t { Critic = 0, Alpha = 1, Theta = 2 };

inline auto to_string(Phase p) -> std::string {
    switch (p) {
    case Phase::Critic:
        return "critic";
    case Phase::Alpha:
        return "alpha";
    case Phase::Theta:
        return "theta";
    }
    return "?";
}

/// Monotone count of prepared state copies. Evaluation copies are kept out of the training total.
class ResourceLedger {
  public:
    void charge(Phase phase, std::uint64_t copies) noexcept { phases_[static_cast<std::size_t>(phase)] += copies; }
    void charge_evaluation(std::uint64_t copies) noexcept { evaluation_ += copies; }

    [[nodiscard]] auto phase(Phase p) const noexcept -> std::uint64_t { return phases_[static_cast<std::size_t>(p)]; }
    [[nodiscard]] auto evaluation() const noexcept -> std::uint64_t { return evaluation_; }
    [[nodiscard]] auto total() const noexcept -> std::uint64_t { return phases_[0] + phases_[1] + phases_[2]; }

  private:
    std::array<std::uint64_t, 3> phases_{};
    std::uint64_t evaluation_ = 0;
};

/// Optional ledger hook passed to quantum calls.
struct Charge {
    ResourceLedger *ledger = nullptr;
    Phase phase = Phase::Critic;
    std::uint64_t copies_per_prep = 1;

    void operator()(std::uint64_t preparations) const noexcept {
        if (ledger != nullptr) {
            ledger->charge(phase, preparations * copies_per_prep);
        }
    }
};

} // namespace otevs
