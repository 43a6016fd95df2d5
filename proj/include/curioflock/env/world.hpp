#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "curioflock/env/action.hpp"
#include "curioflock/env/observation.hpp"
#include "curioflock/env/rasterizer.hpp"

namespace curioflock::env {

using Rng = std::mt19937_64;

enum class WorldKind { Simple, SimpleSmall, RealisticArena };

WorldKind parse_world_kind(std::string_view name);
std::string_view to_string(WorldKind kind);

// Body and motion constants, in world units.
inline constexpr double kAgentRadius = 1.2;
inline constexpr double kAgentHeight = 3.5;
inline constexpr double kTranslationStep = 0.5;
inline constexpr double kRotationStepDeg = 10.0;
inline constexpr double kEyeHeight = 3.0;
inline constexpr double kFieldOfViewDeg = 90.0;
inline constexpr double kNearPlane = 0.1;
inline constexpr double kFarPlane = 200.0;
inline constexpr double kAmbient = 0.2;
inline constexpr double kLightElevationDeg = 60.0;
inline constexpr double kObjectRadius = 1.4;
inline constexpr int kImprintActionTicks = 10;

inline constexpr double kSimpleSide = 60.0;
inline constexpr double kSimpleSmallSide = 30.0;
inline constexpr double kArenaDiameter = 21.0;

struct LightingSpec {
  double angle_offset_deg = 0.0;  // azimuth rotation of the directional light
  double intensity_multiplier = 1.0;
};

struct WorldSpec {
  WorldKind kind = WorldKind::Simple;
  std::uint64_t seed = 0;             // object controller stream
  std::uint64_t distractor_seed = 0;  // arena scenery layout
  LightingSpec light;

  // Floor area used by spatial statistics: side^2 or pi * r^2.
  double floor_area() const;
  // Cube side, or fence diameter for the arena.
  double extent() const;
};

struct AgentBody {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, 0 = +x, counterclockwise positive
};

enum class ObjectShape { Cube, Sphere, Cone, Torus };
enum class ObjectColor { Red, Green, Blue, Yellow };

ObjectShape parse_object_shape(std::string_view name);
ObjectColor parse_object_color(std::string_view name);
std::string_view to_string(ObjectShape shape);
std::string_view to_string(ObjectColor color);
Color color_of(ObjectColor color);

struct ImprintObject {
  ObjectShape shape = ObjectShape::Cube;
  ObjectColor color = ObjectColor::Red;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  // Training: random-walk controller. Test: fixed in place, spinning.
  bool training_mode = true;
  double spin_rate_deg = 5.0;
  AgentAction current_action;
  int ticks_in_action = 0;
  long draws = 0;
};

struct StepResult {
  std::vector<ObservationImage> observations;
  std::vector<double> metabolic;
};

class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The shared 3D world: geometry, lighting, bodies and imprint objects.
class World {
 public:
  World(WorldSpec spec, int n_agents, int resolution);

  const WorldSpec& spec() const { return spec_; }
  int resolution() const { return resolution_; }
  int agent_count() const { return static_cast<int>(agents_.size()); }
  const std::vector<AgentBody>& agents() const { return agents_; }
  const AgentBody& agent(int i) const { return agents_.at(static_cast<std::size_t>(i)); }
  void set_agent(int i, AgentBody body);
  long tick() const { return tick_; }

  const std::vector<ImprintObject>& objects() const { return objects_; }
  ImprintObject& object(int i) { return objects_.at(static_cast<std::size_t>(i)); }
  void add_object(ImprintObject object);
  void clear_objects() { objects_.clear(); }

  // True when a body of `radius` centred at (x, y) lies in the navigable region.
  bool inside(double x, double y, double radius) const;

  // Fresh uniform poses for agents and training-mode objects, without overlap.
  void spawn_random(Rng& rng);

  // Rotations, then translations (in agent order, blocked by walls, agents
  // and objects), then object controllers; renders post-move frames.
  StepResult step(std::span<const AgentAction> actions);
  // The same transition without rendering; returns the metabolic costs.
  std::vector<double> advance(std::span<const AgentAction> actions);

  // Advances one training-mode object by one tick.
  void imprint_controller_step(int object_index, Rng& rng);

  ObservationImage render(int agent_index, int resolution) const;
  ObservationImage render(int agent_index) const { return render(agent_index, resolution_); }
  std::vector<ObservationImage> render_all() const;

  void set_lighting(double angle_offset_deg, double intensity_multiplier);
  DirectionalLight light() const;

  // Renders from an arbitrary pose, excluding agent `skip_agent` (-1: none).
  ObservationImage render_from(const AgentBody& pose, int skip_agent, int resolution) const;

 private:
  bool agent_position_free(int agent, double x, double y) const;
  bool object_position_free(int object, double x, double y) const;
  void build_static_mesh();

  WorldSpec spec_;
  int resolution_;
  std::vector<AgentBody> agents_;
  std::vector<ImprintObject> objects_;
  long tick_ = 0;
  Rng object_rng_;
  Mesh static_mesh_;
  Color background_;
};

// Appends the renderable mesh of one object.
void add_object_mesh(Mesh& mesh, const ImprintObject& object);

}  // namespace curioflock::env
