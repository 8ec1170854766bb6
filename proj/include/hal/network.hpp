#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hal/aux_block.hpp"
#include "hal/layers.hpp"

namespace hal {

/// Depth/width description of the network. depth = 6n+4 with n blocks per
/// stage; stage 1 keeps resolution, later stages downsample by 2.
struct NetworkSpec {
    int depth = 10;
    std::vector<std::size_t> stage_widths = {16, 32, 64};
    std::size_t num_classes = 10;
    bool aux_enabled = false;
    std::size_t aux_superclass_count = 0;

    std::size_t blocks_per_stage() const {
        if (depth < 10 || (depth - 4) % 6 != 0)
            throw ConfigError("network depth must be 6n+4 with n >= 1, got " +
                              std::to_string(depth));
        return static_cast<std::size_t>((depth - 4) / 6);
    }
};

/// Pre-activation ResNet: 3x3 stem, staged residual blocks, final BN+ReLU,
/// global average pooling, optional auxiliary block, fully-connected output.
template <typename T>
class ResNet {
public:
    ResNet(const NetworkSpec& spec, std::size_t in_channels, Rng& rng) : spec_(spec) {
        std::size_t n = spec.blocks_per_stage();
        if (spec.stage_widths.empty()) throw ConfigError("network: no stages");
        stem_ = std::make_unique<Conv2d<T>>(in_channels, spec.stage_widths[0], 3, 1, 1, rng);
        std::size_t ch = spec.stage_widths[0];
        for (std::size_t s = 0; s < spec.stage_widths.size(); ++s) {
            std::size_t width = spec.stage_widths[s];
            for (std::size_t b = 0; b < n; ++b) {
                std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
                blocks_.push_back(
                    std::make_unique<PreactResidualBlock<T>>(ch, width, stride, rng));
                ch = width;
            }
        }
        final_bn_ = std::make_unique<BatchNorm2d<T>>(ch);
        if (spec.aux_enabled) {
            if (spec.aux_superclass_count < 1)
                throw ConfigError("network: aux enabled but superclass count is 0");
            aux_ = std::make_unique<AuxBlock<T>>(ch, spec.aux_superclass_count, rng);
        }
        fc_ = std::make_unique<Linear<T>>(ch, spec.num_classes, rng);
        features_ = ch;
    }

    std::size_t features() const { return features_; }
    const NetworkSpec& spec() const { return spec_; }
    AuxBlock<T>* aux() { return aux_.get(); }
    Conv2d<T>& stem_layer() { return *stem_; }
    std::vector<std::unique_ptr<PreactResidualBlock<T>>>& residual_blocks() { return blocks_; }
    BatchNorm2d<T>& final_bn_layer() { return *final_bn_; }
    Linear<T>& fc_layer() { return *fc_; }

    /// x_star must be non-null iff the auxiliary block is enabled.
    Tensor<T> forward(const Tensor<T>& x, const Tensor<T>* x_star, bool train) {
        if (spec_.aux_enabled && x_star == nullptr)
            throw StateError("network: aux enabled but no superclass batch given");
        Tensor<T> h = stem_->forward(x);
        for (auto& blk : blocks_) h = blk->forward(h, train);
        h = final_relu_.forward(final_bn_->forward(h, train));
        Tensor<T> pooled = pool_.forward(h);
        if (spec_.aux_enabled) pooled = aux_->forward(pooled, *x_star);
        return fc_->forward(pooled);
    }

    void backward(const Tensor<T>& grad_logits) {
        Tensor<T> g = fc_->backward(grad_logits);
        if (spec_.aux_enabled) g = aux_->backward(g);
        g = final_bn_->backward(final_relu_.backward(pool_.backward(g)));
        for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = (*it)->backward(g);
        stem_->backward(g);
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        stem_->params(out, "stem");
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            blocks_[i]->params(out, "block" + std::to_string(i));
        final_bn_->params(out, "final_bn");
        if (aux_) aux_->params(out, "aux");
        fc_->params(out, "fc");
        return out;
    }

    /// Parameters plus batch-norm running statistics, for checkpoints.
    std::vector<ParamRef<T>> state() {
        std::vector<ParamRef<T>> out = params();
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            blocks_[i]->buffers(out, "block" + std::to_string(i));
        final_bn_->buffers(out, "final_bn");
        return out;
    }

    void zero_grad() {
        for (auto& p : params())
            if (p.grad) std::fill(p.grad->data.begin(), p.grad->data.end(), T{0});
    }

private:
    NetworkSpec spec_;
    std::size_t features_ = 0;
    std::unique_ptr<Conv2d<T>> stem_;
    std::vector<std::unique_ptr<PreactResidualBlock<T>>> blocks_;
    std::unique_ptr<BatchNorm2d<T>> final_bn_;
    ReLU<T> final_relu_;
    GlobalAvgPool<T> pool_;
    std::unique_ptr<AuxBlock<T>> aux_;
    std::unique_ptr<Linear<T>> fc_;
};

}  // namespace hal
