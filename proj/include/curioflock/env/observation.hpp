#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "curioflock/nn/tensor.hpp"

namespace curioflock::env {

inline constexpr int kObservationChannels = 3;

// Planar (C, H, W) 8-bit RGB frame from an agent's head camera.
struct ObservationImage {
  int resolution = 0;
  std::vector<std::uint8_t> pixels;

  ObservationImage() = default;
  explicit ObservationImage(int res)
      : resolution(res), pixels(static_cast<std::size_t>(kObservationChannels) * res * res, 0) {}

  std::uint8_t& at(int channel, int y, int x) {
    return pixels[(static_cast<std::size_t>(channel) * resolution + y) * resolution + x];
  }
  std::uint8_t at(int channel, int y, int x) const {
    return pixels[(static_cast<std::size_t>(channel) * resolution + y) * resolution + x];
  }

  friend bool operator==(const ObservationImage&, const ObservationImage&) = default;
};

// Stacks frames into an (N, 3, R, R) tensor scaled to [0, 1].
nn::Tensor to_tensor(std::span<const ObservationImage* const> frames);
nn::Tensor to_tensor(const ObservationImage& frame);

}  // namespace curioflock::env
