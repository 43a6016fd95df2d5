#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "curioflock/nn/parameters.hpp"

namespace curioflock::nn {

inline constexpr std::string_view kCheckpointMagic = "CURIOFLOCK-CKPT-1";

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Layout: the magic line, a text manifest ("tensors <n>" then one line per
// tensor: "<name> f32 row-major <d0> <d1> ..."), a "data" line, then the raw
// little-endian float32 arrays in manifest order.
void save_checkpoint(const std::filesystem::path& path, const std::vector<const ParameterSet*>& sets,
                     const std::vector<std::pair<std::string, std::string>>& metadata = {});
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path,
                                         std::vector<std::pair<std::string, std::string>>* metadata = nullptr);

// Copies every tensor of `params` from the checkpoint; names and shapes must
// match exactly.
void restore_parameters(ParameterSet& params, const std::vector<NamedTensor>& tensors);

}  // namespace curioflock::nn
