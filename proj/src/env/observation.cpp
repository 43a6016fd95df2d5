#include "curioflock/env/observation.hpp"

#include <stdexcept>

namespace curioflock::env {

nn::Tensor to_tensor(std::span<const ObservationImage* const> frames) {
  if (frames.empty()) throw std::invalid_argument("to_tensor: no frames");
  const int res = frames.front()->resolution;
  const std::size_t per_frame = static_cast<std::size_t>(kObservationChannels) * res * res;
  nn::Tensor out({static_cast<int>(frames.size()), kObservationChannels, res, res});
  constexpr nn::Real scale = nn::Real(1) / nn::Real(255);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const ObservationImage& f = *frames[i];
    if (f.resolution != res || f.pixels.size() != per_frame) {
      throw nn::ShapeError("to_tensor: frame " + std::to_string(i) + " has resolution " + std::to_string(f.resolution) +
                           ", expected " + std::to_string(res));
    }
    nn::Real* dst = out.ptr() + i * per_frame;
    for (std::size_t j = 0; j < per_frame; ++j) dst[j] = static_cast<nn::Real>(f.pixels[j]) * scale;
  }
  return out;
}

nn::Tensor to_tensor(const ObservationImage& frame) {
  const ObservationImage* one[] = {&frame};
  return to_tensor(std::span<const ObservationImage* const>(one));
}

}  // namespace curioflock::env
