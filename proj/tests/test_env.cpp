#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "curioflock/env/world.hpp"

namespace env = curioflock::env;
using env::AgentAction;
using env::AgentBody;
using env::World;

namespace {

World chamber(int n, int res = 64, env::WorldKind kind = env::WorldKind::Simple) {
  env::WorldSpec spec;
  spec.kind = kind;
  spec.seed = 11;
  return World(spec, n, res);
}

double mean_luminance(const env::ObservationImage& img) {
  double s = 0.0;
  for (auto p : img.pixels) s += p;
  return s / static_cast<double>(img.pixels.size());
}

bool yellowish(const env::ObservationImage& img, int y, int x) {
  const int r = img.at(0, y, x), g = img.at(1, y, x), b = img.at(2, y, x);
  return r > 40 && g > r / 2 && b * 3 < g && r - b > 30;
}

AgentAction act(int t, int r) { return env::action_from_indices(t, r); }

void check_contained(const World& w) {
  const double h = w.spec().extent() / 2.0;
  for (const auto& a : w.agents()) {
    ASSERT_GE(a.x - env::kAgentRadius, -h - 1e-9);
    ASSERT_LE(a.x + env::kAgentRadius, h + 1e-9);
    ASSERT_GE(a.y - env::kAgentRadius, -h - 1e-9);
    ASSERT_LE(a.y + env::kAgentRadius, h + 1e-9);
  }
  for (std::size_t i = 0; i < w.agents().size(); ++i) {
    for (std::size_t j = i + 1; j < w.agents().size(); ++j) {
      const double d = std::hypot(w.agents()[i].x - w.agents()[j].x, w.agents()[i].y - w.agents()[j].y);
      ASSERT_GE(d, 2 * env::kAgentRadius - 1e-9);
    }
  }
}

}  // namespace

TEST(Action, MetabolicTableAndEncoding) {
  EXPECT_DOUBLE_EQ(env::metabolic_cost(act(0, 2)), -0.001);
  EXPECT_DOUBLE_EQ(env::metabolic_cost(act(2, 2)), 0.0);
  EXPECT_DOUBLE_EQ(env::metabolic_cost(act(1, 0)), -0.0105);
  EXPECT_DOUBLE_EQ(env::metabolic_cost(act(2, 1)), -0.0005);
  std::set<int> seen;
  for (int t = 0; t < 3; ++t) {
    for (int r = 0; r < 3; ++r) {
      const auto a = act(t, r);
      seen.insert(env::combined_index(a));
      const auto oh = env::one_hot(a);
      float sum = 0;
      for (float v : oh) sum += v;
      EXPECT_EQ(sum, 2.0f);
      EXPECT_EQ(oh[static_cast<std::size_t>(t)], 1.0f);
      EXPECT_EQ(oh[static_cast<std::size_t>(3 + r)], 1.0f);
    }
  }
  EXPECT_EQ(seen.size(), 9u);
  EXPECT_THROW(env::action_from_indices(3, 0), std::out_of_range);
}

TEST(World, SpawnIsContainedSeparatedAndSeeded) {
  World one = chamber(1);
  env::Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    one.spawn_random(rng);
    check_contained(one);
  }
  World ten = chamber(10);
  env::Rng a(42), b(42);
  ten.spawn_random(a);
  check_contained(ten);
  World again = chamber(10);
  again.spawn_random(b);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(ten.agent(i).x, again.agent(i).x);
    EXPECT_EQ(ten.agent(i).heading, again.agent(i).heading);
  }
}

TEST(World, IdleKeepsPosesAndForwardBackwardReturns) {
  World w = chamber(2);
  w.set_agent(0, {0.0, 0.0, 0.3});
  w.set_agent(1, {10.0, 10.0, 2.0});
  const std::vector<AgentAction> idle(2, act(2, 2));
  const auto r = w.step(idle);
  EXPECT_EQ(w.agent(0).x, 0.0);
  EXPECT_EQ(w.agent(1).heading, 2.0);
  EXPECT_EQ(r.metabolic, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(r.observations.size(), 2u);
  w.advance(std::vector<AgentAction>{act(0, 2), act(2, 2)});
  EXPECT_NEAR(w.agent(0).x, 0.5 * std::cos(0.3), 1e-12);
  w.advance(std::vector<AgentAction>{act(1, 2), act(2, 2)});
  EXPECT_NEAR(w.agent(0).x, 0.0, 1e-6);
  EXPECT_NEAR(w.agent(0).y, 0.0, 1e-6);
  EXPECT_THROW(w.advance(std::vector<AgentAction>(1)), std::invalid_argument);
}

TEST(World, RotationStepsTenDegrees) {
  World w = chamber(1);
  w.set_agent(0, {0, 0, 0});
  w.advance(std::vector<AgentAction>{act(2, 1)});
  EXPECT_NEAR(w.agent(0).heading, 10.0 * std::numbers::pi / 180.0, 1e-12);
  w.advance(std::vector<AgentAction>{act(2, 0)});
  w.advance(std::vector<AgentAction>{act(2, 0)});
  EXPECT_NEAR(w.agent(0).heading, 2 * std::numbers::pi - 10.0 * std::numbers::pi / 180.0, 1e-12);
}

TEST(World, WallsBlockMovement) {
  World w = chamber(1);
  const double h = w.spec().extent() / 2.0;
  // 0.3 units of clearance, less than one step.
  const double x0 = h - env::kAgentRadius - 0.3;
  w.set_agent(0, {x0, 0.0, 0.0});
  w.advance(std::vector<AgentAction>{act(0, 2)});
  EXPECT_EQ(w.agent(0).x, x0);
  // Facing away the same step is free.
  w.set_agent(0, {x0, 0.0, std::numbers::pi});
  w.advance(std::vector<AgentAction>{act(0, 2)});
  EXPECT_NEAR(w.agent(0).x, x0 - 0.5, 1e-12);
  EXPECT_THROW(w.set_agent(0, {h, 0.0, 0.0}), env::PlacementError);
}

TEST(World, AgentsBlockEachOther) {
  World w = chamber(2);
  w.set_agent(0, {0.0, 0.0, 0.0});
  w.set_agent(1, {2.6, 0.0, std::numbers::pi});
  w.advance(std::vector<AgentAction>{act(0, 2), act(0, 2)});
  EXPECT_EQ(w.agent(0).x, 0.0);
  EXPECT_EQ(w.agent(1).x, 2.6);
}

TEST(World, RandomWalkStaysContained) {
  for (auto kind : {env::WorldKind::Simple, env::WorldKind::SimpleSmall}) {
    World w = chamber(10, 64, kind);
    env::Rng rng(3);
    w.spawn_random(rng);
    std::uniform_int_distribution<int> d(0, 2);
    std::vector<AgentAction> acts(10);
    for (int t = 0; t < 3000; ++t) {
      for (auto& a : acts) a = act(d(rng), d(rng));
      w.advance(acts);
    }
    check_contained(w);
  }
  World arena = chamber(6, 64, env::WorldKind::RealisticArena);
  env::Rng rng(5);
  arena.spawn_random(rng);
  std::uniform_int_distribution<int> d(0, 2);
  std::vector<AgentAction> acts(6);
  for (int t = 0; t < 3000; ++t) {
    for (auto& a : acts) a = act(d(rng), d(rng));
    arena.advance(acts);
    for (const auto& a : arena.agents()) {
      ASSERT_LE(std::hypot(a.x, a.y) + env::kAgentRadius, env::kArenaDiameter / 2 + 1e-9);
    }
  }
}

TEST(Render, WallViewIsAchromatic) {
  World w = chamber(1);
  w.set_agent(0, {20.0, 0.0, 0.0});
  const auto img = w.render(0);
  ASSERT_EQ(img.pixels.size(), 3u * 64 * 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      ASSERT_EQ(img.at(0, y, x), img.at(1, y, x));
      ASSERT_EQ(img.at(1, y, x), img.at(2, y, x));
    }
  }
  EXPECT_GT(mean_luminance(img), 30.0);
}

TEST(Render, LuminanceIncreasesWithIntensity) {
  World w = chamber(3);
  env::Rng rng(8);
  for (int k = 0; k < 5; ++k) {
    w.spawn_random(rng);
    double prev = -1.0;
    for (double m : {0.25, 0.5, 0.75, 1.0}) {
      w.set_lighting(0.0, m);
      const double lum = mean_luminance(w.render(0));
      EXPECT_GT(lum, prev) << "intensity " << m;
      prev = lum;
    }
    w.set_lighting(0.0, 2.0);
    EXPECT_GE(mean_luminance(w.render(0)), prev);
  }
  EXPECT_THROW(w.set_lighting(0.0, 0.0), std::invalid_argument);
}

TEST(Render, LightAngleChangesShading) {
  World w = chamber(1);
  // Looking at the two walls whose normals face +x and +y.
  w.set_agent(0, {0.0, 0.0, std::numbers::pi + 0.7});
  const auto base = w.render(0);
  w.set_lighting(90.0, 1.0);
  EXPECT_NE(w.render(0), base);
  w.set_lighting(0.0, 1.0);
  EXPECT_EQ(w.render(0), base);
}

// The agent ahead at distance d projects to [c - c*r/d, c + c*r/d] columns
// for a 90 degree camera.
TEST(Render, AgentAheadAppearsYellowWhereProjected) {
  for (int res : {64, 96, 128}) {
    for (double d : {3.0, 6.0, 9.5}) {
      World w = chamber(2, res);
      w.set_agent(0, {-10.0, 0.0, 0.0});
      w.set_agent(1, {-10.0 + d, 0.0, 1.0});
      const auto img = w.render(0);
      const double c = res / 2.0;
      const double half = c * env::kAgentRadius / (d - env::kAgentRadius) + 1.0;
      int hits = 0;
      for (int y = 0; y < res; ++y) {
        for (int x = 0; x < res; ++x) {
          if (!yellowish(img, y, x)) continue;
          ++hits;
          ASSERT_GE(x + 0.5, c - half) << res << " " << d;
          ASSERT_LE(x + 0.5, c + half) << res << " " << d;
        }
      }
      EXPECT_GT(hits, 0) << res << " " << d;
      w.set_agent(1, {-25.0, 5.0, 0.0});
      const auto behind = w.render(0);
      int none = 0;
      for (int y = 0; y < res; ++y) {
        for (int x = 0; x < res; ++x) none += yellowish(behind, y, x);
      }
      EXPECT_EQ(none, 0);
    }
  }
}

TEST(Render, ArenaShowsSkyAndGround) {
  World w = chamber(1, 64, env::WorldKind::RealisticArena);
  w.set_agent(0, {0.0, 0.0, 0.0});
  const auto img = w.render(0);
  // Top row is sky (blue dominant), bottom row is ground (green dominant).
  EXPECT_GT(img.at(2, 0, 32), img.at(0, 0, 32));
  EXPECT_GT(img.at(1, 63, 32), img.at(2, 63, 32));
}

TEST(Imprint, DrawsEveryTenTicksAndStaysInside) {
  World w = chamber(0, 64, env::WorldKind::SimpleSmall);
  env::ImprintObject o;
  w.add_object(o);
  env::Rng rng(4);
  for (int t = 0; t < 100; ++t) w.imprint_controller_step(0, rng);
  EXPECT_EQ(w.objects()[0].draws, 10);
  for (int t = 0; t < 10000; ++t) {
    w.imprint_controller_step(0, rng);
    ASSERT_TRUE(w.inside(w.objects()[0].x, w.objects()[0].y, env::kObjectRadius));
  }

  World a = chamber(0, 64, env::WorldKind::SimpleSmall), b = chamber(0, 64, env::WorldKind::SimpleSmall);
  a.add_object(o);
  b.add_object(o);
  env::Rng ra(9), rb(9);
  for (int t = 0; t < 500; ++t) {
    a.imprint_controller_step(0, ra);
    b.imprint_controller_step(0, rb);
    ASSERT_EQ(a.objects()[0].x, b.objects()[0].x);
    ASSERT_EQ(a.objects()[0].heading, b.objects()[0].heading);
  }
}

TEST(Imprint, TestModeSpinsInPlace) {
  World w = chamber(0, 64, env::WorldKind::SimpleSmall);
  env::ImprintObject o;
  o.training_mode = false;
  o.x = 5;
  w.add_object(o);
  env::Rng rng(1);
  for (int t = 0; t < 18; ++t) w.imprint_controller_step(0, rng);
  EXPECT_EQ(w.objects()[0].x, 5.0);
  EXPECT_NEAR(w.objects()[0].heading, std::numbers::pi / 2, 1e-9);
}

TEST(Imprint, ObjectsRenderInTheirColor) {
  for (auto shape : {env::ObjectShape::Cube, env::ObjectShape::Sphere, env::ObjectShape::Cone, env::ObjectShape::Torus}) {
    World w = chamber(1, 64, env::WorldKind::SimpleSmall);
    w.set_agent(0, {-5.0, 0.0, 0.0});
    env::ImprintObject o;
    o.shape = shape;
    o.color = env::ObjectColor::Blue;
    o.training_mode = false;
    o.x = 0.0;
    w.add_object(o);
    const auto img = w.render(0);
    int blue = 0;
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) blue += img.at(2, y, x) > img.at(0, y, x) + 30;
    }
    EXPECT_GT(blue, 10) << env::to_string(shape);
  }
}

TEST(World, SameActionsSameFrames) {
  auto run = [] {
    World w = chamber(4);
    env::ImprintObject o;
    w.add_object(o);
    env::Rng rng(77);
    w.spawn_random(rng);
    std::uniform_int_distribution<int> d(0, 2);
    std::vector<AgentAction> acts(4);
    std::vector<env::ObservationImage> frames;
    for (int t = 0; t < 30; ++t) {
      for (auto& a : acts) a = act(d(rng), d(rng));
      auto r = w.step(acts);
      frames.push_back(r.observations[static_cast<std::size_t>(t % 4)]);
    }
    return frames;
  };
  EXPECT_EQ(run(), run());
}

TEST(World, ParsersRoundTrip) {
  for (auto k : {env::WorldKind::Simple, env::WorldKind::SimpleSmall, env::WorldKind::RealisticArena}) {
    EXPECT_EQ(env::parse_world_kind(env::to_string(k)), k);
  }
  EXPECT_EQ(env::parse_object_color("green"), env::ObjectColor::Green);
  EXPECT_EQ(env::parse_object_shape("torus"), env::ObjectShape::Torus);
  EXPECT_THROW(env::parse_world_kind("moon"), std::invalid_argument);
  env::WorldSpec s;
  EXPECT_DOUBLE_EQ(s.floor_area(), 3600.0);
  s.kind = env::WorldKind::RealisticArena;
  EXPECT_NEAR(s.floor_area(), std::numbers::pi * 10.5 * 10.5, 1e-9);
}
