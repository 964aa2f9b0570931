#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

namespace otevs {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    friend auto operator==(const AdamHyper &, const AdamHyper &) -> bool = default;
};

/// Bias-corrected Adam moments for one parameter group.
template <typename Scalar> class AdamState {
  public:
    using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

    AdamState() = default;
    explicit AdamState(Eigen::Index size) : m_(Array::Zero(size)), v_(Array::Zero(size)) {}

    [[nodiscard]] auto steps() const noexcept -> std::uint64_t { return t_; }
    [[nodiscard]] auto size() const noexcept -> Eigen::Index { return m_.size(); }
    [[nodiscard]] auto first_moment() const noexcept -> const Array & { return m_; }
    [[nodiscard]] auto second_moment() const noexcept -> const Array & { return v_; }

    /// One Adam step on `params` (any contiguous Eigen object) with gradient `grad` of the same shape.
    template <typename Params, typename Grad>
    void update(Eigen::PlainObjectBase<Params> &params, const Eigen::PlainObjectBase<Grad> &grad, const AdamHyper &h) {
        if (params.size() != grad.size() || params.size() != m_.size()) {
            throw std::invalid_argument("AdamState: parameter, gradient and moment sizes differ");
        }
        Eigen::Map<Array> p(params.data(), params.size());
        Eigen::Map<const Array> g(grad.data(), grad.size());
        ++t_;
        const auto b1 = static_cast<Scalar>(h.beta1);
        const auto b2 = static_cast<Scalar>(h.beta2);
        m_ = b1 * m_ + (Scalar(1) - b1) * g;
        v_ = b2 * v_ + (Scalar(1) - b2) * g.square();
        const auto c1 = static_cast<Scalar>(1.0 - std::pow(h.beta1, static_cast<double>(t_)));
        const auto c2 = static_cast<Scalar>(1.0 - std::pow(h.beta2, static_cast<double>(t_)));
        p -= static_cast<Scalar>(h.lr) * (m_ / c1) / ((v_ / c2).sqrt() + static_cast<Scalar>(h.eps));
    }

  private:
    Array m_;
    Array v_;
    std::uint64_t t_ = 0;
};

template <typename Scalar, typename Params, typename Grad>
void adam_update(AdamState<Scalar> &state, Eigen::PlainObjectBase<Params> &params,
                 const Eigen::PlainObjectBase<Grad> &grad, const AdamHyper &h) {
    state.update(params, grad, h);
}

} // namespace otevs
