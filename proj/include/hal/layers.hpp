#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hal/ops.hpp"
#include "hal/tensor.hpp"

namespace hal {

template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* value;
    Tensor<T>* grad;
};

/// normal(0, sqrt(2/fan_in)) draw, deterministic under the seed
template <typename T>
Tensor<T> he_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
    if (fan_in == 0) throw DataError("he_init: fan_in must be positive");
    Tensor<T> t(std::move(shape));
    double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : t.data) v = static_cast<T>(rng.normal() * stddev);
    return t;
}

/// 2-D convolution layer, no bias (batch norm follows every conv).
template <typename T>
class Conv2d {
public:
    Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t ksize, std::size_t stride,
           std::size_t pad, Rng& rng)
        : stride_(stride), pad_(pad),
          w_(he_init<T>({out_ch, in_ch, ksize, ksize}, in_ch * ksize * ksize, rng)),
          w_grad_(Tensor<T>::zeros({out_ch, in_ch, ksize, ksize})) {}

    Tensor<T> forward(const Tensor<T>& x) {
        std::size_t k = w_.shape[2];
        std::size_t rem_h = (x.shape[2] + 2 * pad_ - k) % stride_;
        std::size_t rem_w = (x.shape[3] + 2 * pad_ - k) % stride_;
        in_shape_ = x.shape;
        trimmed_ = rem_h != 0 || rem_w != 0;
        if (trimmed_) {
            // floor semantics for strided convs on even extents: the trailing
            // padded rows/columns fall outside every window, so drop them and
            // run the strict op on the cropped canvas
            Tensor<T> padded = ops::pad2d(x, pad_);
            cached_input_ = ops::crop2d(padded, 0, 0, padded.shape[2] - rem_h,
                                        padded.shape[3] - rem_w);
        } else {
            cached_input_ = x;
        }
        has_cache_ = true;
        return ops::conv2d(cached_input_, w_, stride_, trimmed_ ? 0 : pad_);
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        if (!has_cache_) throw StateError("conv2d: backward before forward");
        Tensor<T> gx, gw;
        ops::conv2d_backward(cached_input_, w_, grad_out, stride_, trimmed_ ? 0 : pad_,
                             gx, gw);
        for (std::size_t i = 0; i < gw.data.size(); ++i) w_grad_.data[i] += gw.data[i];
        if (trimmed_) {
            // map canvas gradients back inside the original (unpadded) extent
            Tensor<T> gx_full = Tensor<T>::zeros(in_shape_);
            for (std::size_t n = 0; n < gx.shape[0]; ++n)
                for (std::size_t ch = 0; ch < gx.shape[1]; ++ch)
                    for (std::size_t i = 0; i < gx.shape[2]; ++i)
                        for (std::size_t j = 0; j < gx.shape[3]; ++j) {
                            std::ptrdiff_t oi = static_cast<std::ptrdiff_t>(i) -
                                                static_cast<std::ptrdiff_t>(pad_);
                            std::ptrdiff_t oj = static_cast<std::ptrdiff_t>(j) -
                                                static_cast<std::ptrdiff_t>(pad_);
                            if (oi < 0 || oj < 0 ||
                                oi >= static_cast<std::ptrdiff_t>(in_shape_[2]) ||
                                oj >= static_cast<std::ptrdiff_t>(in_shape_[3]))
                                continue;
                            gx_full.at(n, ch, static_cast<std::size_t>(oi),
                                       static_cast<std::size_t>(oj)) = gx.at(n, ch, i, j);
                        }
            gx = std::move(gx_full);
        }
        has_cache_ = false;
        return gx;
    }

    void params(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".w", &w_, &w_grad_});
    }

    Tensor<T>& weights() { return w_; }

private:
    std::size_t stride_, pad_;
    Tensor<T> w_, w_grad_;
    Tensor<T> cached_input_;
    std::vector<std::size_t> in_shape_;
    bool trimmed_ = false;
    bool has_cache_ = false;
};

/// Per-channel batch norm over [b x c x h x w]. Running stats use
/// running = momentum*running + (1-momentum)*batch.
template <typename T>
class BatchNorm2d {
public:
    explicit BatchNorm2d(std::size_t channels, double momentum = 0.9, double eps = 1e-5)
        : momentum_(momentum), eps_(eps),
          gamma_(Tensor<T>::full({channels}, T{1})),
          beta_(Tensor<T>::zeros({channels})),
          gamma_grad_(Tensor<T>::zeros({channels})),
          beta_grad_(Tensor<T>::zeros({channels})),
          running_mean_(Tensor<T>::zeros({channels})),
          running_var_(Tensor<T>::full({channels}, T{1})) {}

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        if (x.rank() != 4 || x.shape[1] != gamma_.size())
            throw DimensionError("batchnorm: expected [b x " +
                                 std::to_string(gamma_.size()) + " x h x w], got " +
                                 shape_str(x.shape));
        std::size_t b = x.shape[0], c = x.shape[1], hw = x.shape[2] * x.shape[3];
        Tensor<T> out(x.shape);
        if (train) {
            mean_.assign(c, 0.0);
            var_.assign(c, 0.0);
            std::size_t n = b * hw;
            for (std::size_t ch = 0; ch < c; ++ch) {
                double m = 0.0;
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t k = 0; k < hw; ++k)
                        m += static_cast<double>(x.data[(i * c + ch) * hw + k]);
                m /= static_cast<double>(n);
                double v = 0.0;
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t k = 0; k < hw; ++k) {
                        double d = static_cast<double>(x.data[(i * c + ch) * hw + k]) - m;
                        v += d * d;
                    }
                v /= static_cast<double>(n);
                mean_[ch] = m;
                var_[ch] = v;
                running_mean_.data[ch] = static_cast<T>(
                    momentum_ * static_cast<double>(running_mean_.data[ch]) +
                    (1.0 - momentum_) * m);
                running_var_.data[ch] = static_cast<T>(
                    momentum_ * static_cast<double>(running_var_.data[ch]) +
                    (1.0 - momentum_) * v);
            }
            xhat_ = Tensor<T>(x.shape);
            for (std::size_t ch = 0; ch < c; ++ch) {
                double inv = 1.0 / std::sqrt(var_[ch] + eps_);
                double g = static_cast<double>(gamma_.data[ch]);
                double bt = static_cast<double>(beta_.data[ch]);
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t k = 0; k < hw; ++k) {
                        std::size_t idx = (i * c + ch) * hw + k;
                        double xh = (static_cast<double>(x.data[idx]) - mean_[ch]) * inv;
                        xhat_.data[idx] = static_cast<T>(xh);
                        out.data[idx] = static_cast<T>(g * xh + bt);
                    }
            }
            has_cache_ = true;
        } else {
            // inference mode: per-channel affine map from running stats
            for (std::size_t ch = 0; ch < c; ++ch) {
                double inv = 1.0 / std::sqrt(static_cast<double>(running_var_.data[ch]) + eps_);
                double g = static_cast<double>(gamma_.data[ch]) * inv;
                double bt = static_cast<double>(beta_.data[ch]) -
                            g * static_cast<double>(running_mean_.data[ch]);
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t k = 0; k < hw; ++k) {
                        std::size_t idx = (i * c + ch) * hw + k;
                        out.data[idx] = static_cast<T>(g * static_cast<double>(x.data[idx]) + bt);
                    }
            }
        }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        if (!has_cache_) throw StateError("batchnorm: backward before forward");
        std::size_t b = grad_out.shape[0], c = grad_out.shape[1],
                    hw = grad_out.shape[2] * grad_out.shape[3];
        std::size_t n = b * hw;
        Tensor<T> gx(grad_out.shape);
        for (std::size_t ch = 0; ch < c; ++ch) {
            double inv = 1.0 / std::sqrt(var_[ch] + eps_);
            double g = static_cast<double>(gamma_.data[ch]);
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t k = 0; k < hw; ++k) {
                    std::size_t idx = (i * c + ch) * hw + k;
                    double dy = static_cast<double>(grad_out.data[idx]);
                    sum_dy += dy;
                    sum_dy_xhat += dy * static_cast<double>(xhat_.data[idx]);
                }
            gamma_grad_.data[ch] += static_cast<T>(sum_dy_xhat);
            beta_grad_.data[ch] += static_cast<T>(sum_dy);
            double nn = static_cast<double>(n);
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t k = 0; k < hw; ++k) {
                    std::size_t idx = (i * c + ch) * hw + k;
                    double dy = static_cast<double>(grad_out.data[idx]);
                    double xh = static_cast<double>(xhat_.data[idx]);
                    gx.data[idx] = static_cast<T>(
                        g * inv * (dy - sum_dy / nn - xh * sum_dy_xhat / nn));
                }
        }
        has_cache_ = false;
        return gx;
    }

    void params(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".gamma", &gamma_, &gamma_grad_});
        out.push_back({prefix + ".beta", &beta_, &beta_grad_});
    }

    // running stats travel with checkpoints but receive no gradient
    void buffers(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".running_mean", &running_mean_, nullptr});
        out.push_back({prefix + ".running_var", &running_var_, nullptr});
    }

private:
    double momentum_, eps_;
    Tensor<T> gamma_, beta_, gamma_grad_, beta_grad_;
    Tensor<T> running_mean_, running_var_;
    Tensor<T> xhat_;
    std::vector<double> mean_, var_;
    bool has_cache_ = false;
};

template <typename T>
class ReLU {
public:
    Tensor<T> forward(const Tensor<T>& x) {
        cached_input_ = x;
        has_cache_ = true;
        return ops::relu(x);
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        if (!has_cache_) throw StateError("relu: backward before forward");
        Tensor<T> gx = grad_out;
        for (std::size_t i = 0; i < gx.data.size(); ++i)
            if (cached_input_.data[i] <= T{0}) gx.data[i] = T{0};
        has_cache_ = false;
        return gx;
    }

private:
    Tensor<T> cached_input_;
    bool has_cache_ = false;
};

/// Fully-connected layer with bias: y = x*w + b.
template <typename T>
class Linear {
public:
    Linear(std::size_t in, std::size_t out, Rng& rng)
        : w_(he_init<T>({in, out}, in, rng)),
          b_(Tensor<T>::zeros({out})),
          w_grad_(Tensor<T>::zeros({in, out})),
          b_grad_(Tensor<T>::zeros({out})) {}

    Tensor<T> forward(const Tensor<T>& x) {
        cached_input_ = x;
        has_cache_ = true;
        Tensor<T> y = ops::matmul(x, w_);
        for (std::size_t i = 0; i < y.shape[0]; ++i)
            for (std::size_t j = 0; j < y.shape[1]; ++j)
                y.at(i, j) += b_.data[j];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        if (!has_cache_) throw StateError("linear: backward before forward");
        Tensor<T> gw = ops::matmul(ops::transpose(cached_input_), grad_out);
        for (std::size_t i = 0; i < gw.data.size(); ++i) w_grad_.data[i] += gw.data[i];
        for (std::size_t j = 0; j < grad_out.shape[1]; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < grad_out.shape[0]; ++i)
                acc += static_cast<double>(grad_out.at(i, j));
            b_grad_.data[j] += static_cast<T>(acc);
        }
        Tensor<T> gx = ops::matmul(grad_out, ops::transpose(w_));
        has_cache_ = false;
        return gx;
    }

    void params(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".w", &w_, &w_grad_});
        out.push_back({prefix + ".b", &b_, &b_grad_});
    }

private:
    Tensor<T> w_, b_, w_grad_, b_grad_;
    Tensor<T> cached_input_;
    bool has_cache_ = false;
};

/// [b x c x h x w] -> [b x c] spatial mean
template <typename T>
class GlobalAvgPool {
public:
    Tensor<T> forward(const Tensor<T>& x) {
        if (x.rank() != 4) throw DimensionError("global_avg_pool: rank 4 required");
        in_shape_ = x.shape;
        has_cache_ = true;
        std::size_t b = x.shape[0], c = x.shape[1], hw = x.shape[2] * x.shape[3];
        Tensor<T> out({b, c});
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (std::size_t k = 0; k < hw; ++k)
                    acc += static_cast<double>(x.data[(i * c + ch) * hw + k]);
                out.at(i, ch) = static_cast<T>(acc / static_cast<double>(hw));
            }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        if (!has_cache_) throw StateError("global_avg_pool: backward before forward");
        std::size_t b = in_shape_[0], c = in_shape_[1], hw = in_shape_[2] * in_shape_[3];
        Tensor<T> gx(in_shape_);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t ch = 0; ch < c; ++ch) {
                T g = grad_out.at(i, ch) / static_cast<T>(hw);
                for (std::size_t k = 0; k < hw; ++k)
                    gx.data[(i * c + ch) * hw + k] = g;
            }
        has_cache_ = false;
        return gx;
    }

private:
    std::vector<std::size_t> in_shape_;
    bool has_cache_ = false;
};

/// Pre-activation residual block: BN-ReLU-conv-BN-ReLU-conv plus identity
/// shortcut, or a strided 1x1 projection of the pre-activation when the
/// shape changes.
template <typename T>
class PreactResidualBlock {
public:
    PreactResidualBlock(std::size_t in_ch, std::size_t out_ch, std::size_t stride, Rng& rng)
        : needs_proj_(in_ch != out_ch || stride != 1),
          bn1_(in_ch), bn2_(out_ch),
          conv1_(in_ch, out_ch, 3, stride, 1, rng),
          conv2_(out_ch, out_ch, 3, 1, 1, rng) {
        if (needs_proj_) proj_.emplace(in_ch, out_ch, 1, stride, 0, rng);
    }

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        input_shape_ = x.shape;
        Tensor<T> pre = relu1_.forward(bn1_.forward(x, train));
        Tensor<T> branch =
            conv2_.forward(relu2_.forward(bn2_.forward(conv1_.forward(pre), train)));
        Tensor<T> shortcut = needs_proj_ ? proj_->forward(pre) : x;
        if (!branch.same_shape(shortcut))
            throw DimensionError("residual block: branch/shortcut shape mismatch");
        return ops::add(shortcut, branch);
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        Tensor<T> g_pre = conv1_.backward(
            bn2_.backward(relu2_.backward(conv2_.backward(grad_out))));
        Tensor<T> g_x;
        if (needs_proj_) {
            g_pre = ops::add(g_pre, proj_->backward(grad_out));
            g_x = Tensor<T>::zeros(input_shape_);
        } else {
            g_x = grad_out;
        }
        return ops::add(g_x, bn1_.backward(relu1_.backward(g_pre)));
    }

    void params(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        bn1_.params(out, prefix + ".bn1");
        conv1_.params(out, prefix + ".conv1");
        bn2_.params(out, prefix + ".bn2");
        conv2_.params(out, prefix + ".conv2");
        if (needs_proj_) proj_->params(out, prefix + ".proj");
    }

    void buffers(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        bn1_.buffers(out, prefix + ".bn1");
        bn2_.buffers(out, prefix + ".bn2");
    }

    Conv2d<T>& conv1() { return conv1_; }
    Conv2d<T>& conv2() { return conv2_; }

private:
    bool needs_proj_;
    BatchNorm2d<T> bn1_, bn2_;
    Conv2d<T> conv1_, conv2_;
    std::optional<Conv2d<T>> proj_;
    ReLU<T> relu1_, relu2_;
    std::vector<std::size_t> input_shape_;
};

/// Mean softmax cross-entropy over the batch; grad is (softmax - onehot)/b.
template <typename T>
std::pair<double, Tensor<T>> softmax_cross_entropy(const Tensor<T>& logits,
                                                   const std::vector<int>& labels) {
    if (logits.rank() != 2) throw DimensionError("softmax_ce: rank 2 logits required");
    std::size_t b = logits.shape[0], k = logits.shape[1];
    if (labels.size() != b) throw DataError("softmax_ce: label count mismatch");
    Tensor<T> grad(logits.shape);
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= k)
            throw DataError("softmax_ce: label " + std::to_string(y) + " out of range");
        double mx = -1e300;
        for (std::size_t j = 0; j < k; ++j)
            mx = std::max(mx, static_cast<double>(logits.at(i, j)));
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            denom += std::exp(static_cast<double>(logits.at(i, j)) - mx);
        double log_denom = std::log(denom);
        loss += -(static_cast<double>(logits.at(i, y)) - mx - log_denom);
        for (std::size_t j = 0; j < k; ++j) {
            double p = std::exp(static_cast<double>(logits.at(i, j)) - mx - log_denom);
            grad.at(i, j) = static_cast<T>((p - (static_cast<std::size_t>(y) == j ? 1.0 : 0.0)) /
                                           static_cast<double>(b));
        }
    }
    return {loss / static_cast<double>(b), grad};
}

}  // namespace hal
