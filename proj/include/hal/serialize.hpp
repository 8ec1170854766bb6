#pragma once

#include <unordered_map>

#include "hal/checkpoint.hpp"
#include "hal/network.hpp"

namespace hal {

template <typename T>
void save_network(ResNet<T>& net, const std::string& path) {
    std::vector<NamedTensorF32> tensors;
    for (auto& p : net.state())
        tensors.push_back({p.name, p.value->template cast<float>()});
    write_named_tensors(path, tensors);
}

template <typename T>
void load_network(ResNet<T>& net, const std::string& path) {
    auto tensors = read_named_tensors(path);
    std::unordered_map<std::string, const Tensor<float>*> by_name;
    for (const auto& nt : tensors) by_name[nt.name] = &nt.tensor;
    for (auto& p : net.state()) {
        auto it = by_name.find(p.name);
        if (it == by_name.end())
            throw FormatError("checkpoint: missing parameter '" + p.name + "'");
        if (it->second->shape != p.value->shape)
            throw FormatError("checkpoint: shape mismatch for '" + p.name + "' (" +
                              shape_str(it->second->shape) + " vs " +
                              shape_str(p.value->shape) + ")");
        *p.value = it->second->template cast<T>();
    }
}

}  // namespace hal
