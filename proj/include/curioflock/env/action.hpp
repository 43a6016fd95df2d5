#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace curioflock::env {

// Index order matches the policy heads: (forward, backward, none) and
// (clockwise, counterclockwise, none).
enum class Translation : std::uint8_t { Forward = 0, Backward = 1, None = 2 };
enum class Rotation : std::uint8_t { Clockwise = 0, CounterClockwise = 1, None = 2 };

inline constexpr int kTranslationChoices = 3;
inline constexpr int kRotationChoices = 3;
inline constexpr int kActionOneHotDim = kTranslationChoices + kRotationChoices;

struct AgentAction {
  Translation translation = Translation::None;
  Rotation rotation = Rotation::None;

  friend bool operator==(const AgentAction&, const AgentAction&) = default;
};

// Per-motion metabolic costs; a combined action pays both.
inline constexpr double kForwardCost = -0.001;
inline constexpr double kBackwardCost = -0.01;
inline constexpr double kRotationCost = -0.0005;
inline constexpr double kIdleCost = 0.0;

double metabolic_cost(const AgentAction& action);

// Six-dimensional concatenated one-hot: translation block then rotation block.
std::array<float, kActionOneHotDim> one_hot(const AgentAction& action);

AgentAction action_from_indices(int translation, int rotation);
int translation_index(const AgentAction& action);
int rotation_index(const AgentAction& action);

// Combined index in [0, 9): translation * 3 + rotation.
int combined_index(const AgentAction& action);

std::string_view to_string(Translation t);
std::string_view to_string(Rotation r);

}  // namespace curioflock::env
