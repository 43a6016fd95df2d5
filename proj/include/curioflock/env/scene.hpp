#pragma once

#include <cstdint>

#include "curioflock/env/rasterizer.hpp"

namespace curioflock::env {

namespace palette {
inline constexpr Color kWhite{1.0f, 1.0f, 1.0f};
inline constexpr Color kAgentYellow{1.0f, 0.85f, 0.1f};
inline constexpr Color kAgentStripe{0.45f, 0.3f, 0.05f};
inline constexpr Color kRed{0.9f, 0.1f, 0.1f};
inline constexpr Color kGreen{0.1f, 0.8f, 0.15f};
inline constexpr Color kBlue{0.1f, 0.2f, 0.9f};
inline constexpr Color kYellow{0.95f, 0.9f, 0.1f};
inline constexpr Color kGrass{0.3f, 0.55f, 0.22f};
inline constexpr Color kFence{0.45f, 0.3f, 0.15f};
inline constexpr Color kRock{0.5f, 0.5f, 0.48f};
inline constexpr Color kTreeTop{0.15f, 0.42f, 0.15f};
inline constexpr Color kTrunk{0.35f, 0.22f, 0.1f};
inline constexpr Color kMountain{0.45f, 0.42f, 0.4f};
inline constexpr Color kSky{0.62f, 0.76f, 0.92f};
}  // namespace palette

// All builders append to `mesh`. Heights run along +z from the floor.

// Closed chamber seen from inside: floor, ceiling and four walls.
void add_chamber(Mesh& mesh, double side, double height, Color color);

// Axis-aligned box with outward normals.
void add_box(Mesh& mesh, Vec3 min, Vec3 max, Color color);

// Vertical cylinder with outward normals and a top cap. Side segments whose
// centre lies within `stripe_half_angle` of `heading` get `stripe`.
void add_cylinder(Mesh& mesh, Vec3 base, double radius, double height, int segments, Color body, double heading,
                  double stripe_half_angle, Color stripe);

void add_cone(Mesh& mesh, Vec3 base, double radius, double height, int segments, Color color);
void add_sphere(Mesh& mesh, Vec3 center, double radius, int rings, int segments, Color color);
// Ring standing upright; its axis is horizontal and rotated by `heading`.
void add_torus(Mesh& mesh, Vec3 center, double major, double minor, int major_segments, int minor_segments,
               double heading, Color color);
// Box rotated about the vertical axis through its centre.
void add_oriented_box(Mesh& mesh, Vec3 center, Vec3 half_extents, double heading, Color color);

// Square ground patch centred at the origin with smooth value-noise shading.
void add_noisy_ground(Mesh& mesh, double half_extent, int cells, Color base, double amplitude, std::uint64_t seed);

}  // namespace curioflock::env
