#pragma once

#include <vector>

#include "hal/aux_block.hpp"
#include "hal/dataset.hpp"
#include "hal/network.hpp"

namespace hal {

/// Per-superclass score statistics.
struct GroupStats {
    int superclass;
    std::size_t count;
    double mean;
    double stdev;  // sample std
};

std::vector<GroupStats> group_score_stats(const std::vector<AuxScoreRow>& rows, int s);

/// |mean0 - mean1| / pooled std for two groups; min over pairs when s > 2.
double separation_statistic(const std::vector<AuxScoreRow>& rows, int s);

/// Inference pass over a dataset collecting the auxiliary score of every
/// sample. Normalization only (test-time pipeline), batch norm in inference.
template <typename T>
std::vector<AuxScoreRow> aux_scores_over_dataset(ResNet<T>& net, const LabeledDataset& ds,
                                                 const SuperclassScheme& scheme,
                                                 const std::vector<double>& mean,
                                                 const std::vector<double>& stdev,
                                                 std::size_t batch = 256) {
    if (!net.aux()) throw StateError("aux scores: network has no auxiliary block");
    AugmentPolicy policy = AugmentPolicy::test_default();
    Rng unused(0);
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<AuxScoreRow> rows;
    rows.reserve(ds.size());
    std::size_t nb = num_batches(ds.size(), batch);
    for (std::size_t b = 0; b < nb; ++b) {
        auto idx = batch_indices(order, batch, b);
        Tensor<T> images = augment(gather_images<T>(ds, idx), policy, mean, stdev, unused);
        std::vector<int> labels = gather_labels(ds.labels, idx);
        Tensor<T> x_star = onehot_batch<T>(scheme, labels);
        (void)net.forward(images, &x_star, false);
        std::vector<int> supers(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) supers[r] = assign(scheme, labels[r]);
        auto part = net.aux()->export_scores(supers, b * batch);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

}  // namespace hal
