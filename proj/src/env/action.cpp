#include "curioflock/env/action.hpp"

#include <stdexcept>
#include <string>

namespace curioflock::env {

double metabolic_cost(const AgentAction& action) {
  double cost = kIdleCost;
  switch (action.translation) {
    case Translation::Forward: cost += kForwardCost; break;
    case Translation::Backward: cost += kBackwardCost; break;
    case Translation::None: break;
  }
  if (action.rotation != Rotation::None) cost += kRotationCost;
  return cost;
}

std::array<float, kActionOneHotDim> one_hot(const AgentAction& action) {
  std::array<float, kActionOneHotDim> v{};
  v[static_cast<std::size_t>(translation_index(action))] = 1.0f;
  v[static_cast<std::size_t>(kTranslationChoices + rotation_index(action))] = 1.0f;
  return v;
}

AgentAction action_from_indices(int translation, int rotation) {
  if (translation < 0 || translation >= kTranslationChoices || rotation < 0 || rotation >= kRotationChoices) {
    throw std::out_of_range("action indices out of range: (" + std::to_string(translation) + ", " +
                            std::to_string(rotation) + ")");
  }
  return {static_cast<Translation>(translation), static_cast<Rotation>(rotation)};
}

int translation_index(const AgentAction& action) { return static_cast<int>(action.translation); }
int rotation_index(const AgentAction& action) { return static_cast<int>(action.rotation); }
int combined_index(const AgentAction& action) { return translation_index(action) * 3 + rotation_index(action); }

std::string_view to_string(Translation t) {
  switch (t) {
    case Translation::Forward: return "forward";
    case Translation::Backward: return "backward";
    case Translation::None: return "none";
  }
  return "?";
}

std::string_view to_string(Rotation r) {
  switch (r) {
    case Rotation::Clockwise: return "cw";
    case Rotation::CounterClockwise: return "ccw";
    case Rotation::None: return "none";
  }
  return "?";
}

}  // namespace curioflock::env
