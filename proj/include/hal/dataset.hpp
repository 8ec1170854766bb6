#pragma once

#include <string>
#include <vector>

#include "hal/superclass.hpp"
#include "hal/tensor.hpp"

namespace hal {

enum class Split { Train, Test };

/// Images with labels and (optionally) superclasses. Pixels in [0,1].
struct LabeledDataset {
    Tensor<float> images;           // [n x c x h x w]
    std::vector<int> labels;        // in [0,10)
    std::vector<int> superclasses;  // filled by apply_scheme, else empty
    Split split = Split::Train;
    std::vector<double> channel_mean;  // filled by compute_channel_stats
    std::vector<double> channel_std;

    std::size_t size() const { return labels.size(); }
    std::size_t channels() const { return images.shape[1]; }
};

struct AugmentPolicy {
    std::size_t pad = 4;
    bool random_crop = false;
    bool horizontal_flip = false;
    bool normalize = true;

    static AugmentPolicy train_default() { return {4, true, true, true}; }
    static AugmentPolicy test_default() { return {4, false, false, true}; }
};

/// IDX-format loader (big-endian u32 headers, u8 pixels scaled by 1/255).
LabeledDataset load_mnist(const std::string& images_path, const std::string& labels_path);

/// Standard CIFAR-10 binary batches: 3073-byte records, channel-planar RGB.
LabeledDataset load_cifar10(const std::vector<std::string>& batch_paths);

/// Pre-converted raw tensors in the checkpoint container format:
/// "images" [n x c x h x w] f32 in [0,1], "labels" [n] f32.
LabeledDataset load_raw(const std::string& path);

/// Keep the first k samples of each class, preserving order.
LabeledDataset subset_per_class(const LabeledDataset& ds, std::size_t k);

void apply_scheme(LabeledDataset& ds, const SuperclassScheme& scheme);

/// Per-channel mean/std over this (training) split; stored on the dataset.
void compute_channel_stats(LabeledDataset& ds);

/// Deterministic epoch order: identity or a seeded Fisher-Yates permutation.
std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, Rng& rng);

/// Slice batch b of the epoch order; the final short batch is included.
std::vector<std::size_t> batch_indices(const std::vector<std::size_t>& order,
                                       std::size_t batch_size, std::size_t batch);

inline std::size_t num_batches(std::size_t n, std::size_t batch_size) {
    return (n + batch_size - 1) / batch_size;
}

/// Gather images for the given sample indices as scalar type T.
template <typename T>
Tensor<T> gather_images(const LabeledDataset& ds, const std::vector<std::size_t>& idx) {
    std::size_t c = ds.images.shape[1], h = ds.images.shape[2], w = ds.images.shape[3];
    std::size_t chw = c * h * w;
    Tensor<T> out({idx.size(), c, h, w});
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t k = 0; k < chw; ++k)
            out.data[r * chw + k] = static_cast<T>(ds.images.data[idx[r] * chw + k]);
    return out;
}

inline std::vector<int> gather_labels(const std::vector<int>& labels,
                                      const std::vector<std::size_t>& idx) {
    std::vector<int> out(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) out[r] = labels[idx[r]];
    return out;
}

/// Pad-and-crop, horizontal flip, then per-channel normalization.
/// Rng draws per image: crop top, crop left, flip coin (only for enabled steps).
template <typename T>
Tensor<T> augment(const Tensor<T>& batch, const AugmentPolicy& policy,
                  const std::vector<double>& mean, const std::vector<double>& stdev,
                  Rng& rng) {
    std::size_t b = batch.shape[0], c = batch.shape[1], h = batch.shape[2],
                w = batch.shape[3];
    Tensor<T> out = batch;
    if (policy.random_crop && policy.pad > 0) {
        std::size_t p = policy.pad;
        Tensor<T> shifted({b, c, h, w});
        for (std::size_t n = 0; n < b; ++n) {
            std::size_t top = rng.uniform_int(2 * p + 1);
            std::size_t left = rng.uniform_int(2 * p + 1);
            // crop window (top,left) of the zero-padded image, done in place
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t i = 0; i < h; ++i)
                    for (std::size_t j = 0; j < w; ++j) {
                        std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i + top) -
                                            static_cast<std::ptrdiff_t>(p);
                        std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j + left) -
                                            static_cast<std::ptrdiff_t>(p);
                        T v = T{0};
                        if (si >= 0 && sj >= 0 && si < static_cast<std::ptrdiff_t>(h) &&
                            sj < static_cast<std::ptrdiff_t>(w))
                            v = out.at(n, ch, si, sj);
                        shifted.at(n, ch, i, j) = v;
                    }
        }
        out = std::move(shifted);
    }
    if (policy.horizontal_flip) {
        for (std::size_t n = 0; n < b; ++n) {
            if (!rng.bernoulli(0.5)) continue;
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t i = 0; i < h; ++i)
                    for (std::size_t j = 0; j < w / 2; ++j)
                        std::swap(out.at(n, ch, i, j), out.at(n, ch, i, w - 1 - j));
        }
    }
    if (policy.normalize) {
        if (mean.size() != c || stdev.size() != c)
            throw DataError("augment: channel stats missing or wrong arity");
        for (std::size_t n = 0; n < b; ++n)
            for (std::size_t ch = 0; ch < c; ++ch) {
                double m = mean[ch], s = stdev[ch];
                for (std::size_t i = 0; i < h; ++i)
                    for (std::size_t j = 0; j < w; ++j)
                        out.at(n, ch, i, j) =
                            static_cast<T>((static_cast<double>(out.at(n, ch, i, j)) - m) / s);
            }
    }
    return out;
}

}  // namespace hal
