#include "curioflock/networks.hpp"

#include <stdexcept>

namespace curioflock {

using nn::Conv2d;
using nn::Dense;
using nn::Elu;
using nn::Flatten;
using nn::LayerSpec;
using nn::Relu;
using nn::ResidualBlock;
using nn::SoftmaxHead;

EncoderSize parse_encoder_size(std::string_view name) {
  if (name == "small") return EncoderSize::Small;
  if (name == "medium") return EncoderSize::Medium;
  if (name == "large") return EncoderSize::Large;
  throw std::invalid_argument("unknown encoder size '" + std::string(name) + "' (expected small/medium/large)");
}

std::string_view to_string(EncoderSize size) {
  switch (size) {
    case EncoderSize::Small: return "small";
    case EncoderSize::Medium: return "medium";
    case EncoderSize::Large: return "large";
  }
  return "?";
}

bool supported_resolution(int resolution) { return resolution == 64 || resolution == 96 || resolution == 128; }

namespace {

LayerSpec activation_for(EncoderSize size) {
  if (size == EncoderSize::Large) return Relu{};
  return Elu{};
}

}  // namespace

std::vector<LayerSpec> encoder_layers(EncoderSize size, int resolution, int channels) {
  if (!supported_resolution(resolution)) {
    throw std::invalid_argument("unsupported resolution " + std::to_string(resolution) + " (expected 64, 96 or 128)");
  }
  if (channels != 3) throw std::invalid_argument("encoders take 3-channel RGB input");

  std::vector<LayerSpec> layers;
  switch (size) {
    case EncoderSize::Small:
      layers = {Conv2d{channels, 32, 8, 4, 0}, Elu{}, Conv2d{32, 64, 4, 2, 0}, Elu{}};
      break;
    case EncoderSize::Medium:
      // The two 3x3 layers are padded so the medium tower keeps the small
      // tower's 64-channel grid and strictly adds capacity.
      layers = {Conv2d{channels, 32, 8, 4, 0}, Elu{},           Conv2d{32, 64, 4, 2, 0}, Elu{},
                Conv2d{64, 64, 3, 1, 1},       Elu{},           Conv2d{64, 64, 3, 1, 1}, Elu{}};
      break;
    case EncoderSize::Large:
      layers = {Conv2d{channels, 32, 8, 4, 0}, Relu{}};
      for (int i = 0; i < 3; ++i) layers.push_back(ResidualBlock{32, 32, 1});
      layers.push_back(ResidualBlock{32, 64, 2});
      for (int i = 0; i < 3; ++i) layers.push_back(ResidualBlock{64, 64, 1});
      break;
  }
  // Resolve the flattened size by building the conv tower once.
  nn::Stack tower("probe", {channels, resolution, resolution}, layers);
  const int flat = static_cast<int>(nn::shape_size(tower.output_shape()));
  layers.push_back(Flatten{});
  layers.push_back(Dense{flat, kFeatureDim});
  layers.push_back(activation_for(size));
  return layers;
}

EncoderNet build_encoder(EncoderSize size, int resolution, int channels, std::string prefix) {
  EncoderNet net;
  net.stack = nn::Stack(std::move(prefix), {channels, resolution, resolution}, encoder_layers(size, resolution, channels));
  net.feature_dim = kFeatureDim;
  return net;
}

nn::Stack build_inverse_head(std::string prefix, bool log_space) {
  return nn::Stack(std::move(prefix), {2 * kFeatureDim},
                   {Dense{2 * kFeatureDim, kInverseHidden}, Elu{}, Dense{kInverseHidden, 6},
                    SoftmaxHead{{3, 3}, 0, log_space}});
}

nn::Stack build_forward_head(std::string prefix) {
  return nn::Stack(std::move(prefix), {kFeatureDim + 6},
                   {Dense{kFeatureDim + 6, kForwardHidden}, Elu{}, Dense{kForwardHidden, kFeatureDim}});
}

nn::Stack build_actor_critic(EncoderSize size, int resolution, std::string prefix, bool log_space) {
  std::vector<LayerSpec> layers = encoder_layers(size, resolution, 3);
  const LayerSpec act = activation_for(size);
  layers.push_back(Dense{kFeatureDim, kActorHidden});
  layers.push_back(act);
  layers.push_back(Dense{kActorHidden, kActorHidden});
  layers.push_back(act);
  layers.push_back(Dense{kActorHidden, kPolicyOutputs});
  layers.push_back(SoftmaxHead{{3, 3}, 1, log_space});
  return nn::Stack(std::move(prefix), {3, resolution, resolution}, std::move(layers));
}

}  // namespace curioflock
