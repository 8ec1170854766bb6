#pragma once

#include <array>
#include <string>
#include <vector>

#include "hal/tensor.hpp"

namespace hal {

enum class DatasetKind { Mnist, Svhn, Cifar10 };
enum class SuperclassCase { Case1, Case2, Case3, Case4 };

DatasetKind dataset_from_string(const std::string& s);
std::string dataset_to_string(DatasetKind d);

/// A named total partition of the labels {0..9} into s superclasses.
struct SuperclassScheme {
    std::string name;
    int num_superclasses = 0;
    std::array<int, 10> mapping{};  // label -> superclass id
    std::string semantics;

    /// groups[g] lists the labels of superclass g
    static SuperclassScheme from_groups(const std::string& name,
                                        const std::vector<std::vector<int>>& groups,
                                        const std::string& semantics = "");

    std::vector<std::vector<int>> groups() const;
    void validate() const;  // total partition, no empty group
};

/// The eight built-in schemes. MNIST and SVHN share cases 1-4.
SuperclassScheme builtin_scheme(DatasetKind dataset, SuperclassCase c);

/// Parse "case1".."case4"
SuperclassCase case_from_string(const std::string& s);
std::string case_to_string(SuperclassCase c);

int assign(const SuperclassScheme& scheme, int label);

std::vector<double> onehot(int superclass, int s);

/// Batched one-hot rows for a label vector, via the scheme.
template <typename T>
Tensor<T> onehot_batch(const SuperclassScheme& scheme, const std::vector<int>& labels) {
    Tensor<T> out({labels.size(), static_cast<std::size_t>(scheme.num_superclasses)});
    for (std::size_t r = 0; r < labels.size(); ++r)
        out.at(r, static_cast<std::size_t>(assign(scheme, labels[r]))) = T{1};
    return out;
}

/// CIFAR-10 class names indexed by label (airplane=0 ... truck=9).
const std::array<std::string, 10>& cifar10_class_names();

}  // namespace hal
