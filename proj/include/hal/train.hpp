#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hal/dataset.hpp"
#include "hal/network.hpp"

namespace hal {

struct TrainConfig {
    int depth = 10;
    std::vector<std::size_t> stage_widths = {16, 32, 64};
    std::size_t batch_size = 128;
    int epochs = 250;
    double lr_max = 1.0;
    double lr_min = 0.0;
    double momentum = 0.9;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    AugmentPolicy augment = AugmentPolicy::train_default();
    std::optional<SuperclassScheme> scheme;  // nullopt = baseline, no aux block
    int eval_every = 1;
    int checkpoint_every = 50;
    std::size_t eval_batch = 256;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (lr_min > lr_max) throw ConfigError("lr_min must not exceed lr_max");
    }
};

/// Training aborted on a non-finite loss; carries the last known state.
struct TrainAbort : std::runtime_error {
    int epoch;
    std::size_t batch;
    double lr;
    TrainAbort(int epoch_, std::size_t batch_, double lr_)
        : std::runtime_error("training aborted: non-finite loss at epoch " +
                             std::to_string(epoch_) + ", batch " + std::to_string(batch_) +
                             ", lr " + std::to_string(lr_)),
          epoch(epoch_), batch(batch_), lr(lr_) {}
};

/// Single half-cosine sweep from lr_max at t=0 to lr_min at t=epochs.
inline double cosine_lr(int t, const TrainConfig& cfg) {
    return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) *
                            (1.0 + std::cos(M_PI * static_cast<double>(t) /
                                            static_cast<double>(cfg.epochs)));
}

struct EvalPoint {
    int epoch;  // 1-based, the epoch after which evaluation ran
    double test_loss;
    double test_error_pct;
};

struct RunRecord {
    std::vector<double> train_loss;  // one entry per epoch
    std::vector<EvalPoint> evals;
    double final_test_loss = 0.0;
    double final_test_error_pct = 0.0;
    double wall_time_sec = 0.0;
    std::string checkpoint_path;
};

inline NetworkSpec network_spec_for(const TrainConfig& cfg) {
    NetworkSpec spec;
    spec.depth = cfg.depth;
    spec.stage_widths = cfg.stage_widths;
    spec.aux_enabled = cfg.scheme.has_value();
    spec.aux_superclass_count =
        cfg.scheme ? static_cast<std::size_t>(cfg.scheme->num_superclasses) : 0;
    return spec;
}

/// SGD with classical momentum: v = mu*v + g + wd*w; w -= lr*v.
template <typename T>
class SgdOptimizer {
public:
    explicit SgdOptimizer(std::vector<ParamRef<T>> params, double momentum,
                          double weight_decay)
        : params_(std::move(params)), momentum_(momentum), weight_decay_(weight_decay) {
        for (auto& p : params_) velocity_.emplace_back(Tensor<T>::zeros(p.value->shape));
    }

    void step(double lr) {
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& p = params_[k];
            auto& v = velocity_[k];
            for (std::size_t i = 0; i < p.value->data.size(); ++i) {
                double g = static_cast<double>(p.grad->data[i]) +
                           weight_decay_ * static_cast<double>(p.value->data[i]);
                double vel = momentum_ * static_cast<double>(v.data[i]) + g;
                v.data[i] = static_cast<T>(vel);
                p.value->data[i] = static_cast<T>(static_cast<double>(p.value->data[i]) -
                                                  lr * vel);
            }
        }
    }

private:
    std::vector<ParamRef<T>> params_;
    std::vector<Tensor<T>> velocity_;
    double momentum_, weight_decay_;
};

/// Test-split evaluation: normalization only, batch norm in inference mode.
/// When a scheme is given the superclass input comes from the ground-truth
/// label, matching the training protocol.
template <typename T>
std::pair<double, double> evaluate(ResNet<T>& net, const LabeledDataset& ds,
                                   const std::optional<SuperclassScheme>& scheme,
                                   const std::vector<double>& mean,
                                   const std::vector<double>& stdev,
                                   std::size_t eval_batch = 256) {
    AugmentPolicy policy = AugmentPolicy::test_default();
    Rng unused(0);
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    double loss_sum = 0.0;
    std::size_t wrong = 0;
    std::size_t nb = num_batches(ds.size(), eval_batch);
    for (std::size_t b = 0; b < nb; ++b) {
        auto idx = batch_indices(order, eval_batch, b);
        Tensor<T> images = augment(gather_images<T>(ds, idx), policy, mean, stdev, unused);
        std::vector<int> labels = gather_labels(ds.labels, idx);
        Tensor<T> logits;
        if (scheme) {
            Tensor<T> x_star = onehot_batch<T>(*scheme, labels);
            logits = net.forward(images, &x_star, false);
        } else {
            logits = net.forward(images, nullptr, false);
        }
        auto [loss, grad] = softmax_cross_entropy(logits, labels);
        loss_sum += loss * static_cast<double>(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < logits.shape[1]; ++j)
                if (logits.at(r, j) > logits.at(r, best)) best = j;
            if (static_cast<int>(best) != labels[r]) ++wrong;
        }
    }
    double n = static_cast<double>(ds.size());
    return {loss_sum / n, 100.0 * static_cast<double>(wrong) / n};
}

/// Full training loop. Callbacks fire inside the loop so the caller can
/// write checkpoints; pass nullptr to skip.
template <typename T>
RunRecord train(const TrainConfig& cfg, const LabeledDataset& train_ds,
                const LabeledDataset& test_ds, ResNet<T>& net,
                const std::function<void(int /*epoch_1based*/)>& on_checkpoint = nullptr) {
    cfg.validate();
    if (cfg.scheme && train_ds.superclasses.empty())
        throw ConfigError("train: scheme set but dataset has no superclasses applied");
    auto t0 = std::chrono::steady_clock::now();
    Rng data_rng(cfg.seed ^ 0xDA7A5EEDULL);
    SgdOptimizer<T> opt(net.params(), cfg.momentum, cfg.weight_decay);
    RunRecord rec;
    std::size_t n = train_ds.size();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cosine_lr(epoch, cfg);
        auto order = epoch_order(n, true, data_rng);
        double loss_sum = 0.0;
        std::size_t nb = num_batches(n, cfg.batch_size);
        for (std::size_t b = 0; b < nb; ++b) {
            auto idx = batch_indices(order, cfg.batch_size, b);
            Tensor<T> images = augment(gather_images<T>(train_ds, idx), cfg.augment,
                                       train_ds.channel_mean, train_ds.channel_std,
                                       data_rng);
            std::vector<int> labels = gather_labels(train_ds.labels, idx);
            net.zero_grad();
            Tensor<T> logits;
            if (cfg.scheme) {
                Tensor<T> x_star = onehot_batch<T>(*cfg.scheme, labels);
                logits = net.forward(images, &x_star, true);
            } else {
                logits = net.forward(images, nullptr, true);
            }
            auto [loss, grad] = softmax_cross_entropy(logits, labels);
            if (!std::isfinite(loss)) throw TrainAbort(epoch, b, lr);
            net.backward(grad);
            opt.step(lr);
            loss_sum += loss * static_cast<double>(idx.size());
        }
        rec.train_loss.push_back(loss_sum / static_cast<double>(n));
        bool last = epoch + 1 == cfg.epochs;
        if ((epoch + 1) % cfg.eval_every == 0 || last) {
            auto [tl, terr] = evaluate(net, test_ds, cfg.scheme, train_ds.channel_mean,
                                       train_ds.channel_std, cfg.eval_batch);
            rec.evals.push_back({epoch + 1, tl, terr});
            if (last) {
                rec.final_test_loss = tl;
                rec.final_test_error_pct = terr;
            }
        }
        if (on_checkpoint && (last || (epoch + 1) % cfg.checkpoint_every == 0))
            on_checkpoint(epoch + 1);
    }
    rec.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace hal
