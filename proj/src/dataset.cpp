#include "hal/dataset.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "hal/checkpoint.hpp"

namespace hal {

namespace {

std::uint32_t get_u32_be(std::ifstream& f, const std::string& path) {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
        throw FormatError("idx: truncated header in '" + path + "'");
    return (static_cast<std::uint32_t>(b[0]) << 24) |
           (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

LabeledDataset load_mnist(const std::string& images_path, const std::string& labels_path) {
    std::ifstream fi(images_path, std::ios::binary);
    if (!fi) throw FormatError("idx: cannot open '" + images_path + "'");
    if (get_u32_be(fi, images_path) != 0x00000803u)
        throw FormatError("idx: bad image magic in '" + images_path + "'");
    std::size_t n = get_u32_be(fi, images_path);
    std::size_t h = get_u32_be(fi, images_path);
    std::size_t w = get_u32_be(fi, images_path);
    std::vector<unsigned char> pixels(n * h * w);
    if (!fi.read(reinterpret_cast<char*>(pixels.data()),
                 static_cast<std::streamsize>(pixels.size())))
        throw FormatError("idx: truncated image data in '" + images_path + "'");

    std::ifstream fl(labels_path, std::ios::binary);
    if (!fl) throw FormatError("idx: cannot open '" + labels_path + "'");
    if (get_u32_be(fl, labels_path) != 0x00000801u)
        throw FormatError("idx: bad label magic in '" + labels_path + "'");
    std::size_t nl = get_u32_be(fl, labels_path);
    if (nl != n)
        throw FormatError("idx: image/label count mismatch (" + std::to_string(n) +
                          " vs " + std::to_string(nl) + ")");
    std::vector<unsigned char> raw_labels(n);
    if (!fl.read(reinterpret_cast<char*>(raw_labels.data()),
                 static_cast<std::streamsize>(n)))
        throw FormatError("idx: truncated label data in '" + labels_path + "'");

    LabeledDataset ds;
    ds.images = Tensor<float>({n, 1, h, w});
    for (std::size_t i = 0; i < pixels.size(); ++i)
        ds.images.data[i] = static_cast<float>(pixels[i]) / 255.0f;
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (raw_labels[i] > 9)
            throw FormatError("idx: label " + std::to_string(raw_labels[i]) +
                              " out of range at record " + std::to_string(i));
        ds.labels[i] = raw_labels[i];
    }
    return ds;
}

LabeledDataset load_cifar10(const std::vector<std::string>& batch_paths) {
    constexpr std::size_t kRecord = 3073;  // 1 label byte + 3*32*32 pixels
    LabeledDataset ds;
    std::vector<float> images;
    for (const auto& path : batch_paths) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw FormatError("cifar10: cannot open '" + path + "'");
        f.seekg(0, std::ios::end);
        std::size_t len = static_cast<std::size_t>(f.tellg());
        f.seekg(0);
        if (len == 0 || len % kRecord != 0)
            throw FormatError("cifar10: '" + path + "' length " + std::to_string(len) +
                              " is not a multiple of 3073");
        std::vector<unsigned char> buf(len);
        if (!f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(len)))
            throw FormatError("cifar10: read failed for '" + path + "'");
        std::size_t records = len / kRecord;
        for (std::size_t r = 0; r < records; ++r) {
            const unsigned char* rec = buf.data() + r * kRecord;
            if (rec[0] > 9)
                throw FormatError("cifar10: label " + std::to_string(rec[0]) +
                                  " out of range in '" + path + "'");
            ds.labels.push_back(rec[0]);
            for (std::size_t k = 0; k < 3072; ++k)
                images.push_back(static_cast<float>(rec[1 + k]) / 255.0f);
        }
    }
    std::size_t n = ds.labels.size();
    ds.images = Tensor<float>({n, 3, 32, 32}, std::move(images));
    return ds;
}

LabeledDataset load_raw(const std::string& path) {
    auto tensors = read_named_tensors(path);
    const Tensor<float>* images = nullptr;
    const Tensor<float>* labels = nullptr;
    for (const auto& nt : tensors) {
        if (nt.name == "images") images = &nt.tensor;
        if (nt.name == "labels") labels = &nt.tensor;
    }
    if (!images || !labels)
        throw FormatError("raw dataset: '" + path + "' must contain 'images' and 'labels'");
    if (images->rank() != 4) throw FormatError("raw dataset: images must be rank 4");
    if (labels->rank() != 1 || labels->shape[0] != images->shape[0])
        throw FormatError("raw dataset: labels must be [n] matching images");
    LabeledDataset ds;
    ds.images = *images;
    ds.labels.resize(labels->size());
    for (std::size_t i = 0; i < labels->size(); ++i) {
        int v = static_cast<int>(std::lround(labels->data[i]));
        if (v < 0 || v > 9)
            throw FormatError("raw dataset: label " + std::to_string(v) + " out of range");
        ds.labels[i] = v;
    }
    return ds;
}

LabeledDataset subset_per_class(const LabeledDataset& ds, std::size_t k) {
    std::array<std::size_t, 10> taken{};
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (taken[ds.labels[i]]++ < k) keep.push_back(i);
    LabeledDataset out;
    out.split = ds.split;
    out.images = gather_images<float>(ds, keep);
    out.labels = gather_labels(ds.labels, keep);
    if (!ds.superclasses.empty()) out.superclasses = gather_labels(ds.superclasses, keep);
    out.channel_mean = ds.channel_mean;
    out.channel_std = ds.channel_std;
    return out;
}

void apply_scheme(LabeledDataset& ds, const SuperclassScheme& scheme) {
    ds.superclasses.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        ds.superclasses[i] = assign(scheme, ds.labels[i]);
}

void compute_channel_stats(LabeledDataset& ds) {
    std::size_t n = ds.images.shape[0], c = ds.images.shape[1],
                hw = ds.images.shape[2] * ds.images.shape[3];
    ds.channel_mean.assign(c, 0.0);
    ds.channel_std.assign(c, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < hw; ++k) {
                double v = ds.images.data[(i * c + ch) * hw + k];
                sum += v;
                sq += v * v;
            }
        double cnt = static_cast<double>(n * hw);
        double mean = sum / cnt;
        double var = sq / cnt - mean * mean;
        ds.channel_mean[ch] = mean;
        ds.channel_std[ch] = std::sqrt(var > 0.0 ? var : 1e-12);
    }
}

std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, Rng& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    if (shuffle)
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_int(i)]);
    return order;
}

std::vector<std::size_t> batch_indices(const std::vector<std::size_t>& order,
                                       std::size_t batch_size, std::size_t batch) {
    std::size_t start = batch * batch_size;
    std::size_t end = std::min(start + batch_size, order.size());
    return std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
}

}  // namespace hal
