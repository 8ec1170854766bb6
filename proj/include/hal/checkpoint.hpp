#pragma once

#include <string>
#include <vector>

#include "hal/tensor.hpp"

namespace hal {

struct NamedTensorF32 {
    std::string name;
    Tensor<float> tensor;
};

/// Flat binary container: magic "HALCKPT1", then per tensor
/// u32-LE name length, name bytes, u32-LE rank, u32-LE extents, f32-LE data.
void write_named_tensors(const std::string& path, const std::vector<NamedTensorF32>& tensors);
std::vector<NamedTensorF32> read_named_tensors(const std::string& path);

}  // namespace hal
