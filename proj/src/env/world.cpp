#include "curioflock/env/world.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "curioflock/env/scene.hpp"

namespace curioflock::env {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDeg = std::numbers::pi / 180.0;
constexpr int kSpawnTries = 10000;
constexpr double kFenceRadius = kArenaDiameter / 2.0;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a;
}

double rotation_sign(Rotation r) {
  switch (r) {
    case Rotation::Clockwise: return -1.0;
    case Rotation::CounterClockwise: return 1.0;
    case Rotation::None: return 0.0;
  }
  return 0.0;
}

double translation_sign(Translation t) {
  switch (t) {
    case Translation::Forward: return 1.0;
    case Translation::Backward: return -1.0;
    case Translation::None: return 0.0;
  }
  return 0.0;
}

bool overlaps(double ax, double ay, double ar, double bx, double by, double br) {
  const double dx = ax - bx, dy = ay - by;
  return dx * dx + dy * dy < (ar + br) * (ar + br);
}

void add_arena_scenery(Mesh& mesh, std::uint64_t seed) {
  add_noisy_ground(mesh, 150.0, 60, palette::kGrass, 0.25, seed);
  // Fence: posts on the ring plus a low rail made of short boxes.
  const int posts = 24;
  for (int i = 0; i < posts; ++i) {
    const double a = kTwoPi * i / posts;
    const double r = kFenceRadius + 0.15;
    add_oriented_box(mesh, Vec3{r * std::cos(a), r * std::sin(a), 0.75}, Vec3{0.12, 0.12, 0.75}, a, palette::kFence);
    const double am = a + std::numbers::pi / posts;
    const double chord = 2.0 * r * std::sin(std::numbers::pi / posts);
    add_oriented_box(mesh, Vec3{r * std::cos(am), r * std::sin(am), 1.1}, Vec3{0.05, chord / 2.0, 0.07}, am,
                     palette::kFence);
  }
  // Distractors: rocks and trees outside the fence.
  Rng rng(seed ^ 0x5DEECE66DULL);
  std::uniform_int_distribution<int> count(8, 12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const double a = kTwoPi * unit(rng);
    const double r = 14.0 + 36.0 * unit(rng);
    const Vec3 base{r * std::cos(a), r * std::sin(a), 0.0};
    if (unit(rng) < 0.5) {
      const double s = 0.8 + 1.5 * unit(rng);
      add_sphere(mesh, base + Vec3{0, 0, s * 0.5}, s, 5, 8, palette::kRock);
    } else {
      const double h = 4.0 + 4.0 * unit(rng);
      add_cylinder(mesh, base, 0.3, h * 0.35, 6, palette::kTrunk, 0.0, -1.0, palette::kTrunk);
      add_cone(mesh, base + Vec3{0, 0, h * 0.3}, 1.2 + 0.8 * unit(rng), h * 0.7, 8, palette::kTreeTop);
    }
  }
  // Mountains on the horizon.
  for (int i = 0; i < 9; ++i) {
    const double a = kTwoPi * (i + 0.3 * unit(rng)) / 9;
    const double r = 160.0;
    add_cone(mesh, Vec3{r * std::cos(a), r * std::sin(a), -1.0}, 30.0 + 15.0 * unit(rng), 25.0 + 20.0 * unit(rng),
             10, palette::kMountain);
  }
}

}  // namespace

WorldKind parse_world_kind(std::string_view name) {
  if (name == "simple") return WorldKind::Simple;
  if (name == "simple_small") return WorldKind::SimpleSmall;
  if (name == "realistic_arena") return WorldKind::RealisticArena;
  throw std::invalid_argument("unknown world kind: " + std::string(name));
}

std::string_view to_string(WorldKind kind) {
  switch (kind) {
    case WorldKind::Simple: return "simple";
    case WorldKind::SimpleSmall: return "simple_small";
    case WorldKind::RealisticArena: return "realistic_arena";
  }
  return "?";
}

double WorldSpec::extent() const {
  switch (kind) {
    case WorldKind::Simple: return kSimpleSide;
    case WorldKind::SimpleSmall: return kSimpleSmallSide;
    case WorldKind::RealisticArena: return kArenaDiameter;
  }
  return kSimpleSide;
}

double WorldSpec::floor_area() const {
  if (kind == WorldKind::RealisticArena) return std::numbers::pi * kFenceRadius * kFenceRadius;
  return extent() * extent();
}

ObjectShape parse_object_shape(std::string_view name) {
  if (name == "cube") return ObjectShape::Cube;
  if (name == "sphere") return ObjectShape::Sphere;
  if (name == "cone") return ObjectShape::Cone;
  if (name == "torus") return ObjectShape::Torus;
  throw std::invalid_argument("unknown object shape: " + std::string(name));
}

ObjectColor parse_object_color(std::string_view name) {
  if (name == "red") return ObjectColor::Red;
  if (name == "green") return ObjectColor::Green;
  if (name == "blue") return ObjectColor::Blue;
  if (name == "yellow") return ObjectColor::Yellow;
  throw std::invalid_argument("unknown object color: " + std::string(name));
}

std::string_view to_string(ObjectShape shape) {
  switch (shape) {
    case ObjectShape::Cube: return "cube";
    case ObjectShape::Sphere: return "sphere";
    case ObjectShape::Cone: return "cone";
    case ObjectShape::Torus: return "torus";
  }
  return "?";
}

std::string_view to_string(ObjectColor color) {
  switch (color) {
    case ObjectColor::Red: return "red";
    case ObjectColor::Green: return "green";
    case ObjectColor::Blue: return "blue";
    case ObjectColor::Yellow: return "yellow";
  }
  return "?";
}

Color color_of(ObjectColor color) {
  switch (color) {
    case ObjectColor::Red: return palette::kRed;
    case ObjectColor::Green: return palette::kGreen;
    case ObjectColor::Blue: return palette::kBlue;
    case ObjectColor::Yellow: return palette::kYellow;
  }
  return palette::kWhite;
}

void add_object_mesh(Mesh& mesh, const ImprintObject& o) {
  const Color c = color_of(o.color);
  const Vec3 base{o.x, o.y, 0.0};
  switch (o.shape) {
    case ObjectShape::Cube:
      add_oriented_box(mesh, base + Vec3{0, 0, 1.0}, Vec3{1.0, 1.0, 1.0}, o.heading, c);
      break;
    case ObjectShape::Sphere:
      add_sphere(mesh, base + Vec3{0, 0, 1.2}, 1.2, 8, 12, c);
      break;
    case ObjectShape::Cone:
      add_cone(mesh, base, 1.2, 2.6, 12, c);
      break;
    case ObjectShape::Torus:
      add_torus(mesh, base + Vec3{0, 0, 1.35}, 1.0, 0.35, 14, 6, o.heading, c);
      break;
  }
}

World::World(WorldSpec spec, int n_agents, int resolution)
    : spec_(spec), resolution_(resolution), agents_(static_cast<std::size_t>(n_agents)), object_rng_(spec.seed) {
  if (n_agents < 0) throw std::invalid_argument("negative agent count");
  if (resolution <= 0) throw std::invalid_argument("resolution must be positive");
  build_static_mesh();
}

void World::build_static_mesh() {
  static_mesh_.clear();
  if (spec_.kind == WorldKind::RealisticArena) {
    add_arena_scenery(static_mesh_, spec_.distractor_seed);
    background_ = palette::kSky;
  } else {
    add_chamber(static_mesh_, spec_.extent(), spec_.extent(), palette::kWhite);
    background_ = Color{0, 0, 0};
  }
}

void World::set_agent(int i, AgentBody body) {
  if (!inside(body.x, body.y, kAgentRadius)) throw PlacementError("agent pose outside navigable region");
  body.heading = wrap_angle(body.heading);
  agents_.at(static_cast<std::size_t>(i)) = body;
}

void World::add_object(ImprintObject object) {
  if (!inside(object.x, object.y, kObjectRadius)) throw PlacementError("object outside navigable region");
  objects_.push_back(object);
}

bool World::inside(double x, double y, double radius) const {
  if (spec_.kind == WorldKind::RealisticArena) {
    return std::hypot(x, y) + radius <= kFenceRadius;
  }
  const double h = spec_.extent() / 2.0;
  return x - radius >= -h && x + radius <= h && y - radius >= -h && y + radius <= h;
}

bool World::agent_position_free(int agent, double x, double y) const {
  if (!inside(x, y, kAgentRadius)) return false;
  for (int j = 0; j < agent_count(); ++j) {
    if (j == agent) continue;
    const auto& b = agents_[static_cast<std::size_t>(j)];
    if (overlaps(x, y, kAgentRadius, b.x, b.y, kAgentRadius)) return false;
  }
  for (const auto& o : objects_) {
    if (overlaps(x, y, kAgentRadius, o.x, o.y, kObjectRadius)) return false;
  }
  return true;
}

bool World::object_position_free(int object, double x, double y) const {
  if (!inside(x, y, kObjectRadius)) return false;
  for (const auto& b : agents_) {
    if (overlaps(x, y, kObjectRadius, b.x, b.y, kAgentRadius)) return false;
  }
  for (int j = 0; j < static_cast<int>(objects_.size()); ++j) {
    if (j == object) continue;
    const auto& o = objects_[static_cast<std::size_t>(j)];
    if (overlaps(x, y, kObjectRadius, o.x, o.y, kObjectRadius)) return false;
  }
  return true;
}

void World::spawn_random(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double half = spec_.extent() / 2.0;
  auto sample = [&](double radius, auto&& accept) {
    for (int t = 0; t < kSpawnTries; ++t) {
      const double x = -half + 2.0 * half * unit(rng);
      const double y = -half + 2.0 * half * unit(rng);
      if (inside(x, y, radius) && accept(x, y)) return std::pair{x, y};
    }
    throw PlacementError("could not place body without overlap after " + std::to_string(kSpawnTries) + " tries");
  };
  // Park everything far away so placement only sees already-placed bodies.
  const double park = 1e9;
  for (auto& a : agents_) a.x = a.y = park;
  for (auto& o : objects_) {
    if (o.training_mode) o.x = o.y = park;
  }
  for (int i = 0; i < agent_count(); ++i) {
    auto [x, y] = sample(kAgentRadius, [&](double px, double py) {
      for (int j = 0; j < i; ++j) {
        const auto& b = agents_[static_cast<std::size_t>(j)];
        if (overlaps(px, py, kAgentRadius, b.x, b.y, kAgentRadius)) return false;
      }
      for (const auto& o : objects_) {
        if (!o.training_mode && overlaps(px, py, kAgentRadius, o.x, o.y, kObjectRadius)) return false;
      }
      return true;
    });
    auto& a = agents_[static_cast<std::size_t>(i)];
    a.x = x;
    a.y = y;
    a.heading = kTwoPi * unit(rng);
  }
  for (std::size_t k = 0; k < objects_.size(); ++k) {
    auto& o = objects_[k];
    if (!o.training_mode) continue;
    auto [x, y] = sample(kObjectRadius, [&](double px, double py) {
      return object_position_free(static_cast<int>(k), px, py);
    });
    o.x = x;
    o.y = y;
    o.heading = kTwoPi * unit(rng);
    o.ticks_in_action = 0;
  }
}

void World::imprint_controller_step(int object_index, Rng& rng) {
  auto& o = objects_.at(static_cast<std::size_t>(object_index));
  if (!o.training_mode) {
    o.heading = wrap_angle(o.heading + o.spin_rate_deg * kDeg);
    return;
  }
  if (o.ticks_in_action % kImprintActionTicks == 0) {
    std::uniform_int_distribution<int> pick(0, 2);
    const int t = pick(rng);
    const int r = pick(rng);
    o.current_action = action_from_indices(t, r);
    o.ticks_in_action = 0;
    ++o.draws;
  }
  ++o.ticks_in_action;
  o.heading = wrap_angle(o.heading + rotation_sign(o.current_action.rotation) * kRotationStepDeg * kDeg);
  const double d = translation_sign(o.current_action.translation) * kTranslationStep;
  const double nx = o.x + d * std::cos(o.heading);
  const double ny = o.y + d * std::sin(o.heading);
  if (d != 0.0 && object_position_free(object_index, nx, ny)) {
    o.x = nx;
    o.y = ny;
  }
}

std::vector<double> World::advance(std::span<const AgentAction> actions) {
  if (static_cast<int>(actions.size()) != agent_count()) {
    throw std::invalid_argument("step: expected " + std::to_string(agent_count()) + " actions, got " +
                                std::to_string(actions.size()));
  }
  std::vector<double> metabolic;
  metabolic.reserve(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    auto& a = agents_[i];
    a.heading = wrap_angle(a.heading + rotation_sign(actions[i].rotation) * kRotationStepDeg * kDeg);
    metabolic.push_back(metabolic_cost(actions[i]));
  }
  for (std::size_t i = 0; i < actions.size(); ++i) {
    auto& a = agents_[i];
    const double d = translation_sign(actions[i].translation) * kTranslationStep;
    if (d == 0.0) continue;
    const double nx = a.x + d * std::cos(a.heading);
    const double ny = a.y + d * std::sin(a.heading);
    if (agent_position_free(static_cast<int>(i), nx, ny)) {
      a.x = nx;
      a.y = ny;
    }
  }
  for (int k = 0; k < static_cast<int>(objects_.size()); ++k) imprint_controller_step(k, object_rng_);
  ++tick_;
  return metabolic;
}

StepResult World::step(std::span<const AgentAction> actions) {
  StepResult result;
  result.metabolic = advance(actions);
  result.observations = render_all();
  return result;
}

void World::set_lighting(double angle_offset_deg, double intensity_multiplier) {
  if (!(intensity_multiplier > 0.0)) throw std::invalid_argument("intensity multiplier must be positive");
  spec_.light.angle_offset_deg = angle_offset_deg;
  spec_.light.intensity_multiplier = intensity_multiplier;
}

DirectionalLight World::light() const {
  const double el = kLightElevationDeg * kDeg;
  const double az = spec_.light.angle_offset_deg * kDeg;
  DirectionalLight l;
  l.to_light = Vec3{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
  l.intensity = spec_.light.intensity_multiplier;
  l.ambient = kAmbient;
  return l;
}

ObservationImage World::render_from(const AgentBody& pose, int skip_agent, int resolution) const {
  Mesh dynamic;
  for (int j = 0; j < agent_count(); ++j) {
    if (j == skip_agent) continue;
    const auto& b = agents_[static_cast<std::size_t>(j)];
    add_cylinder(dynamic, Vec3{b.x, b.y, 0.0}, kAgentRadius, kAgentHeight, 16, palette::kAgentYellow, b.heading,
                 std::numbers::pi / 6.0, palette::kAgentStripe);
  }
  for (const auto& o : objects_) add_object_mesh(dynamic, o);

  Camera cam;
  cam.eye = Vec3{pose.x, pose.y, kEyeHeight};
  cam.yaw = pose.heading;
  cam.hfov_deg = kFieldOfViewDeg;
  cam.near_plane = kNearPlane;
  cam.far_plane = kFarPlane;
  const DirectionalLight l = light();
  Rasterizer r(resolution);
  r.clear(background_);
  r.draw(static_mesh_, cam, l);
  r.draw(dynamic, cam, l);
  return r.image();
}

ObservationImage World::render(int agent_index, int resolution) const {
  return render_from(agent(agent_index), agent_index, resolution);
}

std::vector<ObservationImage> World::render_all() const {
  std::vector<ObservationImage> out;
  out.reserve(agents_.size());
  for (int i = 0; i < agent_count(); ++i) out.push_back(render(i));
  return out;
}

}  // namespace curioflock::env
