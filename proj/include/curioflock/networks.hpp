#pragma once

#include <string>
#include <string_view>

#include "curioflock/nn/layers.hpp"

namespace curioflock {

// Visual encoder depth: small = 2 conv + ELU, medium = 4 conv + ELU,
// large = stem conv + 7 residual blocks (15 conv) + ReLU.
enum class EncoderSize { Small, Medium, Large };

EncoderSize parse_encoder_size(std::string_view name);
std::string_view to_string(EncoderSize size);

inline constexpr int kFeatureDim = 128;
inline constexpr int kInverseHidden = 256;
inline constexpr int kForwardHidden = 256;
inline constexpr int kActorHidden = 128;
inline constexpr int kPolicyOutputs = 3 + 3 + 1;  // translation, rotation, value

bool supported_resolution(int resolution);

struct EncoderNet {
  nn::Stack stack;
  int feature_dim = kFeatureDim;
};

// Conv tower plus the activation-terminated 128-unit feature layer, as a
// layer list (reused by the actor stack).
std::vector<nn::LayerSpec> encoder_layers(EncoderSize size, int resolution, int channels);

EncoderNet build_encoder(EncoderSize size, int resolution, int channels, std::string prefix = "wm.phi");

// (256) -> 256 ELU -> log-softmax heads of 3 (translation) and 3 (rotation).
nn::Stack build_inverse_head(std::string prefix = "wm.inv", bool log_space = true);

// (128 + 6) -> 256 ELU -> 128 linear outputs.
nn::Stack build_forward_head(std::string prefix = "wm.fwd");

// encoder -> 128 ELU/ReLU -> 128 ELU/ReLU -> [log-softmax 3 | log-softmax 3 | value].
nn::Stack build_actor_critic(EncoderSize size, int resolution, std::string prefix = "actor", bool log_space = true);

}  // namespace curioflock
