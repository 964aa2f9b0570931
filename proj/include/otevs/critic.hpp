#pragma once

/**
 * @file
 * Dense ReLU critic with hand-written first- and second-order backprop for
 * the gradient-penalty WGAN loss
 *
 *   L_C = mean D(gen) - mean D(real) + lambda mean (||grad_x D(x_hat)|| - 1)^2.
 *
 * Inputs are column-major batches (one sample per column). ReLU'(0) = 0 and
 * ReLU'' = 0, so the activation pattern is treated as locally constant when
 * differentiating the input gradient.
 */

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "otevs/rng.hpp"

namespace otevs {

template <typename Scalar> class Critic {
  public:
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using MatMap = Eigen::Map<Mat>;
    using ConstMatMap = Eigen::Map<const Mat>;
    using VecMap = Eigen::Map<Vec>;
    using ConstVecMap = Eigen::Map<const Vec>;

    Critic() = default;

    /// Zero-initialised network input_dim -> hidden... -> 1.
    Critic(std::size_t input_dim, std::vector<std::size_t> hidden) {
        if (input_dim == 0) {
            throw std::invalid_argument("Critic: input dimension must be positive");
        }
        dims_.push_back(input_dim);
        for (auto h : hidden) {
            if (h == 0) {
                throw std::invalid_argument("Critic: hidden widths must be positive");
            }
            dims_.push_back(h);
        }
        dims_.push_back(1);
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
            w_off_.push_back(off);
            off += dims_[l + 1] * dims_[l];
            b_off_.push_back(off);
            off += dims_[l + 1];
        }
        params_ = Vec::Zero(static_cast<Eigen::Index>(off));
    }

    /// Weights ~ N(0, 2 / fan_in), biases 0.
    static auto init_kaiming(std::size_t input_dim, std::vector<std::size_t> hidden, Rng &rng) -> Critic {
        Critic c(input_dim, std::move(hidden));
        for (std::size_t l = 0; l < c.num_layers(); ++l) {
            std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(c.dims_[l])));
            auto w = c.weight(l);
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                for (Eigen::Index i = 0; i < w.rows(); ++i) {
                    w(i, j) = static_cast<Scalar>(normal(rng));
                }
            }
        }
        return c;
    }

    [[nodiscard]] auto input_dim() const noexcept -> std::size_t { return dims_.front(); }
    [[nodiscard]] auto dims() const noexcept -> const std::vector<std::size_t> & { return dims_; }
    /// Affine layers including the output layer.
    [[nodiscard]] auto num_layers() const noexcept -> std::size_t { return dims_.size() - 1; }
    [[nodiscard]] auto num_params() const noexcept -> std::size_t { return static_cast<std::size_t>(params_.size()); }

    [[nodiscard]] auto params() noexcept -> Vec & { return params_; }
    [[nodiscard]] auto params() const noexcept -> const Vec & { return params_; }

    [[nodiscard]] auto weight(std::size_t l) -> MatMap { return weight_in(params_, l); }
    [[nodiscard]] auto weight(std::size_t l) const -> ConstMatMap { return weight_in(params_, l); }
    [[nodiscard]] auto bias(std::size_t l) -> VecMap { return bias_in(params_, l); }
    [[nodiscard]] auto bias(std::size_t l) const -> ConstVecMap { return bias_in(params_, l); }

    /// Views into a parameter-shaped vector (e.g. a gradient).
    [[nodiscard]] auto weight_in(Vec &flat, std::size_t l) const -> MatMap {
        return MatMap(flat.data() + w_off_[l], static_cast<Eigen::Index>(dims_[l + 1]),
                      static_cast<Eigen::Index>(dims_[l]));
    }
    [[nodiscard]] auto weight_in(const Vec &flat, std::size_t l) const -> ConstMatMap {
        return ConstMatMap(flat.data() + w_off_[l], static_cast<Eigen::Index>(dims_[l + 1]),
                           static_cast<Eigen::Index>(dims_[l]));
    }
    [[nodiscard]] auto bias_in(Vec &flat, std::size_t l) const -> VecMap {
        return VecMap(flat.data() + b_off_[l], static_cast<Eigen::Index>(dims_[l + 1]));
    }
    [[nodiscard]] auto bias_in(const Vec &flat, std::size_t l) const -> ConstVecMap {
        return ConstVecMap(flat.data() + b_off_[l], static_cast<Eigen::Index>(dims_[l + 1]));
    }

    /// Layer inputs and ReLU masks of one batched forward pass.
    struct Cache {
        std::vector<Mat> inputs; // inputs[l] feeds affine layer l
        std::vector<Mat> masks;  // masks[l] for hidden layer l
        RowVec output;
    };

    [[nodiscard]] auto forward_cached(const Mat &X) const -> Cache {
        check_input(X);
        Cache c;
        const std::size_t hidden = num_layers() - 1;
        c.inputs.reserve(num_layers());
        c.masks.reserve(hidden);
        c.inputs.push_back(X);
        for (std::size_t l = 0; l < hidden; ++l) {
            Mat a = weight(l) * c.inputs.back();
            a.colwise() += bias(l);
            Mat mask = (a.array() > Scalar(0)).template cast<Scalar>();
            c.inputs.push_back(a.cwiseProduct(mask));
            c.masks.push_back(std::move(mask));
        }
        c.output = weight(hidden) * c.inputs.back();
        c.output.array() += bias(hidden)[0];
        return c;
    }

    [[nodiscard]] auto forward_batch(const Mat &X) const -> RowVec { return forward_cached(X).output; }

    [[nodiscard]] auto forward(const Vec &x) const -> Scalar {
        Mat X = x;
        return forward_batch(X)(0);
    }

    /// d output / d pre-activation of every hidden layer, one column per sample.
    [[nodiscard]] auto hidden_sensitivities(const Cache &c) const -> std::vector<Mat> {
        const std::size_t hidden = num_layers() - 1;
        const auto B = c.inputs.front().cols();
        std::vector<Mat> g(hidden);
        if (hidden == 0) {
            return g;
        }
        Mat top = weight(hidden).transpose().replicate(1, B);
        g[hidden - 1] = top.cwiseProduct(c.masks[hidden - 1]);
        for (std::size_t l = hidden - 1; l > 0; --l) {
            g[l - 1] = (weight(l).transpose() * g[l]).cwiseProduct(c.masks[l - 1]);
        }
        return g;
    }

    [[nodiscard]] auto grad_input_batch(const Mat &X) const -> Mat {
        const auto c = forward_cached(X);
        return input_gradient_from(c, hidden_sensitivities(c));
    }

    [[nodiscard]] auto grad_input(const Vec &x) const -> Vec {
        Mat X = x;
        return grad_input_batch(X).col(0);
    }

    /// Accumulates d(sum_b seeds_b D(x_b)) / d params into grad.
    void backprop(const Cache &c, const RowVec &seeds, Vec &grad) const {
        const std::size_t hidden = num_layers() - 1;
        weight_in(grad, hidden).noalias() += seeds * c.inputs[hidden].transpose();
        bias_in(grad, hidden)[0] += seeds.sum();
        if (hidden == 0) {
            return;
        }
        Mat delta = (weight(hidden).transpose() * seeds).cwiseProduct(c.masks[hidden - 1]);
        for (std::size_t l = hidden; l-- > 0;) {
            weight_in(grad, l).noalias() += delta * c.inputs[l].transpose();
            bias_in(grad, l) += delta.rowwise().sum();
            if (l > 0) {
                delta = (weight(l).transpose() * delta).cwiseProduct(c.masks[l - 1]);
            }
        }
    }

    struct LossGrad {
        Scalar loss = 0;
        Scalar wasserstein_term = 0; // mean D(gen) - mean D(real)
        Scalar penalty = 0;
        Vec grad;
    };

    /// Gradient-penalty critic loss and its exact parameter gradient (double backprop).
    [[nodiscard]] auto loss_and_grad(const Mat &real, const Mat &gen, const Mat &hat, Scalar lambda) const
        -> LossGrad {
        const auto B = gen.cols();
        if (real.cols() != B || hat.cols() != B) {
            throw std::invalid_argument("Critic: real, generated and interpolated batches must have equal size");
        }
        LossGrad out;
        out.grad = Vec::Zero(params_.size());
        const Scalar invB = Scalar(1) / static_cast<Scalar>(B);

        Mat both(gen.rows(), 2 * B);
        both << gen, real;
        const auto c = forward_cached(both);
        RowVec seeds(2 * B);
        seeds.head(B).setConstant(invB);
        seeds.tail(B).setConstant(-invB);
        out.wasserstein_term = (c.output.head(B).sum() - c.output.tail(B).sum()) * invB;
        backprop(c, seeds, out.grad);

        if (lambda != Scalar(0)) {
            out.penalty = penalty_grad(hat, lambda, out.grad);
        }
        out.loss = out.wasserstein_term + out.penalty;
        return out;
    }

    [[nodiscard]] auto to_json() const -> nlohmann::json {
        nlohmann::json j;
        j["format"] = "otevs-critic/1";
        j["dims"] = dims_;
        j["params"] = std::vector<double>(params_.data(), params_.data() + params_.size());
        return j;
    }

    static auto from_json(const nlohmann::json &j) -> Critic {
        if (j.value("format", std::string{}) != "otevs-critic/1") {
            throw std::runtime_error("critic checkpoint: unsupported format tag");
        }
        const auto dims = j.at("dims").get<std::vector<std::size_t>>();
        if (dims.size() < 2 || dims.back() != 1) {
            throw std::runtime_error("critic checkpoint: malformed layer dimensions");
        }
        Critic c(dims.front(), std::vector<std::size_t>(dims.begin() + 1, dims.end() - 1));
        const auto p = j.at("params").get<std::vector<double>>();
        if (p.size() != c.num_params()) {
            throw std::runtime_error("critic checkpoint: parameter count mismatch");
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            c.params_[static_cast<Eigen::Index>(i)] = static_cast<Scalar>(p[i]);
        }
        return c;
    }

  private:
    void check_input(const Mat &X) const {
        if (static_cast<std::size_t>(X.rows()) != input_dim()) {
            throw std::invalid_argument("Critic: input has " + std::to_string(X.rows()) + " rows, expected " +
                                        std::to_string(input_dim()));
        }
    }

    [[nodiscard]] auto input_gradient_from(const Cache &c, const std::vector<Mat> &g) const -> Mat {
        if (g.empty()) {
            return weight(0).transpose().replicate(1, c.inputs.front().cols());
        }
        return weight(0).transpose() * g.front();
    }

    /// Adds d/dparams of lambda mean (||grad_x D(hat)|| - 1)^2 to grad; returns the penalty value.
    auto penalty_grad(const Mat &hat, Scalar lambda, Vec &grad) const -> Scalar {
        const std::size_t hidden = num_layers() - 1;
        const auto B = hat.cols();
        const Scalar invB = Scalar(1) / static_cast<Scalar>(B);
        const auto c = forward_cached(hat);
        const auto g = hidden_sensitivities(c);
        const Mat gx = input_gradient_from(c, g);

        // V = d penalty / d gx
        Mat V(gx.rows(), B);
        Scalar penalty = 0;
        for (Eigen::Index b = 0; b < B; ++b) {
            const Scalar norm = gx.col(b).norm();
            penalty += (norm - Scalar(1)) * (norm - Scalar(1));
            if (norm > Scalar(0)) {
                V.col(b) = (Scalar(2) * lambda * invB * (norm - Scalar(1)) / norm) * gx.col(b);
            } else {
                V.col(b).setZero();
            }
        }
        penalty *= lambda * invB;

        // gx = W_0^T G_0 and G_l = mask_l (W_{l+1}^T G_{l+1}); push V forward through
        // the masked linear maps and collect the outer products.
        if (hidden == 0) {
            weight_in(grad, 0) += V.rowwise().sum().transpose();
            return penalty;
        }
        weight_in(grad, 0).noalias() += g[0] * V.transpose();
        Mat r = (weight(0) * V).cwiseProduct(c.masks[0]);
        for (std::size_t l = 1; l < hidden; ++l) {
            weight_in(grad, l).noalias() += g[l] * r.transpose();
            r = (weight(l) * r).cwiseProduct(c.masks[l]);
        }
        weight_in(grad, hidden) += r.rowwise().sum().transpose();
        return penalty;
    }

    std::vector<std::size_t> dims_;
    std::vector<std::size_t> w_off_;
    std::vector<std::size_t> b_off_;
    Vec params_;
};

// Free-function surface -------------------------------------------------------

template <typename Scalar>
[[nodiscard]] auto forward(const Critic<Scalar> &w, const typename Critic<Scalar>::Vec &x) -> Scalar {
    return w.forward(x);
}

template <typename Scalar>
[[nodiscard]] auto grad_input(const Critic<Scalar> &w, const typename Critic<Scalar>::Vec &x) ->
    typename Critic<Scalar>::Vec {
    return w.grad_input(x);
}

template <typename Scalar>
[[nodiscard]] auto grad_params_with_penalty(const Critic<Scalar> &w, const typename Critic<Scalar>::Mat &real,
                                            const typename Critic<Scalar>::Mat &gen,
                                            const typename Critic<Scalar>::Mat &hat, Scalar lambda) ->
    typename Critic<Scalar>::LossGrad {
    return w.loss_and_grad(real, gen, hat, lambda);
}

} // namespace otevs
