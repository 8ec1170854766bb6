#include "hal/superclass.hpp"

#include <algorithm>

namespace hal {

DatasetKind dataset_from_string(const std::string& s) {
    if (s == "mnist") return DatasetKind::Mnist;
    if (s == "svhn") return DatasetKind::Svhn;
    if (s == "cifar10") return DatasetKind::Cifar10;
    throw ConfigError("unknown dataset '" + s + "' (expected mnist, svhn or cifar10)");
}

std::string dataset_to_string(DatasetKind d) {
    switch (d) {
        case DatasetKind::Mnist: return "mnist";
        case DatasetKind::Svhn: return "svhn";
        case DatasetKind::Cifar10: return "cifar10";
    }
    return "?";
}

SuperclassCase case_from_string(const std::string& s) {
    if (s == "case1") return SuperclassCase::Case1;
    if (s == "case2") return SuperclassCase::Case2;
    if (s == "case3") return SuperclassCase::Case3;
    if (s == "case4") return SuperclassCase::Case4;
    throw ConfigError("unknown case '" + s + "' (valid: baseline, case1, case2, case3, case4)");
}

std::string case_to_string(SuperclassCase c) {
    switch (c) {
        case SuperclassCase::Case1: return "case1";
        case SuperclassCase::Case2: return "case2";
        case SuperclassCase::Case3: return "case3";
        case SuperclassCase::Case4: return "case4";
    }
    return "?";
}

SuperclassScheme SuperclassScheme::from_groups(const std::string& name,
                                               const std::vector<std::vector<int>>& groups,
                                               const std::string& semantics) {
    SuperclassScheme s;
    s.name = name;
    s.semantics = semantics;
    s.num_superclasses = static_cast<int>(groups.size());
    s.mapping.fill(-1);
    for (int g = 0; g < s.num_superclasses; ++g) {
        if (groups[g].empty())
            throw ConfigError("scheme '" + name + "': superclass " + std::to_string(g) +
                              " is empty");
        for (int label : groups[g]) {
            if (label < 0 || label > 9)
                throw ConfigError("scheme '" + name + "': label " + std::to_string(label) +
                                  " out of range");
            if (s.mapping[label] != -1)
                throw ConfigError("scheme '" + name + "': label " + std::to_string(label) +
                                  " assigned twice");
            s.mapping[label] = g;
        }
    }
    s.validate();
    return s;
}

void SuperclassScheme::validate() const {
    if (num_superclasses < 1)
        throw ConfigError("scheme '" + name + "': no superclasses");
    std::vector<int> hit(num_superclasses, 0);
    for (int label = 0; label < 10; ++label) {
        int g = mapping[label];
        if (g < 0 || g >= num_superclasses)
            throw ConfigError("scheme '" + name + "': label " + std::to_string(label) +
                              " unassigned");
        ++hit[g];
    }
    for (int g = 0; g < num_superclasses; ++g)
        if (hit[g] == 0)
            throw ConfigError("scheme '" + name + "': superclass " + std::to_string(g) +
                              " is empty");
}

std::vector<std::vector<int>> SuperclassScheme::groups() const {
    std::vector<std::vector<int>> g(num_superclasses);
    for (int label = 0; label < 10; ++label) g[mapping[label]].push_back(label);
    return g;
}

SuperclassScheme builtin_scheme(DatasetKind dataset, SuperclassCase c) {
    const std::string ds = dataset_to_string(dataset);
    if (dataset == DatasetKind::Mnist || dataset == DatasetKind::Svhn) {
        switch (c) {
            case SuperclassCase::Case1:
                return SuperclassScheme::from_groups(ds + "_case1",
                                                     {{5, 6, 7, 8, 9}, {0, 1, 2, 3, 4}},
                                                     ">= 5");
            case SuperclassCase::Case2:
                return SuperclassScheme::from_groups(ds + "_case2",
                                                     {{1, 3, 5, 7, 9}, {0, 2, 4, 6, 8}},
                                                     "mod 2");
            case SuperclassCase::Case3:
                return SuperclassScheme::from_groups(ds + "_case3",
                                                     {{2, 3, 5, 7}, {0, 1, 4, 6, 8, 9}},
                                                     "prime");
            case SuperclassCase::Case4:
                return SuperclassScheme::from_groups(
                    ds + "_case4", {{0, 6, 8, 9}, {2, 3, 5}, {1, 4, 7}},
                    "circle / curve / straight line");
        }
    } else {
        switch (c) {
            case SuperclassCase::Case1:
                return SuperclassScheme::from_groups("cifar10_case1",
                                                     {{5, 6, 7, 8, 9}, {0, 1, 2, 3, 4}},
                                                     "label >= 5");
            case SuperclassCase::Case2:
                return SuperclassScheme::from_groups("cifar10_case2",
                                                     {{1, 3, 5, 7, 9}, {0, 2, 4, 6, 8}},
                                                     "odd / even label");
            case SuperclassCase::Case3:
                return SuperclassScheme::from_groups("cifar10_case3",
                                                     {{2, 3, 4, 5, 6, 7}, {0, 1, 8, 9}},
                                                     "animal / transportation");
            case SuperclassCase::Case4:
                return SuperclassScheme::from_groups(
                    "cifar10_case4", {{1, 9}, {3, 5}, {4, 7}, {0, 8}, {2, 6}},
                    "car / small animal / big animal / craft / others");
        }
    }
    throw ConfigError("unknown (dataset, case) combination");
}

int assign(const SuperclassScheme& scheme, int label) {
    if (label < 0 || label > 9)
        throw DataError("superclass assign: label " + std::to_string(label) +
                        " out of range");
    return scheme.mapping[label];
}

std::vector<double> onehot(int superclass, int s) {
    if (superclass < 0 || superclass >= s)
        throw DataError("onehot: index " + std::to_string(superclass) + " out of range");
    std::vector<double> v(s, 0.0);
    v[superclass] = 1.0;
    return v;
}

const std::array<std::string, 10>& cifar10_class_names() {
    static const std::array<std::string, 10> names = {
        "airplane", "car", "bird", "cat", "deer",
        "dog", "frog", "horse", "ship", "truck"};
    return names;
}

}  // namespace hal
