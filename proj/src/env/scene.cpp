#include "curioflock/env/scene.hpp"

#include <numbers>

namespace curioflock::env {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void add_tri(Mesh& mesh, Vec3 a, Vec3 b, Vec3 c, Color ca, Color cb, Color cc, Vec3 facing) {
  Vec3 n = cross(b - a, c - a).normalized();
  if (dot(n, facing) < 0.0) n = n * -1.0;
  mesh.push_back(Triangle{{a, b, c}, {ca, cb, cc}, n});
}

void add_tri(Mesh& mesh, Vec3 a, Vec3 b, Vec3 c, Color color, Vec3 facing) {
  add_tri(mesh, a, b, c, color, color, color, facing);
}

void add_quad(Mesh& mesh, Vec3 a, Vec3 b, Vec3 c, Vec3 d, Color color, Vec3 facing) {
  add_tri(mesh, a, b, c, color, facing);
  add_tri(mesh, a, c, d, color, facing);
}

Vec3 centroid(Vec3 a, Vec3 b, Vec3 c) { return (a + b + c) * (1.0 / 3.0); }

double lattice(std::uint64_t seed, long i, long j) {
  std::uint64_t h = seed ^ (static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ULL) ^
                    (static_cast<std::uint64_t>(j) * 0xC2B2AE3D27D4EB4FULL);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53) * 2.0 - 1.0;
}

double value_noise(std::uint64_t seed, double x, double y) {
  const long i = static_cast<long>(std::floor(x));
  const long j = static_cast<long>(std::floor(y));
  const double fx = x - static_cast<double>(i);
  const double fy = y - static_cast<double>(j);
  const double sx = fx * fx * (3 - 2 * fx);
  const double sy = fy * fy * (3 - 2 * fy);
  const double a = lattice(seed, i, j), b = lattice(seed, i + 1, j);
  const double c = lattice(seed, i, j + 1), d = lattice(seed, i + 1, j + 1);
  return (a + (b - a) * sx) * (1 - sy) + (c + (d - c) * sx) * sy;
}

Color scaled(Color c, double k) {
  return {static_cast<float>(c.r * k), static_cast<float>(c.g * k), static_cast<float>(c.b * k)};
}

}  // namespace

void add_chamber(Mesh& mesh, double side, double height, Color color) {
  const double h = side / 2.0;
  const Vec3 center{0, 0, height / 2.0};
  const Vec3 p000{-h, -h, 0}, p100{h, -h, 0}, p110{h, h, 0}, p010{-h, h, 0};
  const Vec3 p001{-h, -h, height}, p101{h, -h, height}, p111{h, h, height}, p011{-h, h, height};
  auto inward = [&](Vec3 a, Vec3 b, Vec3 c, Vec3 d) { add_quad(mesh, a, b, c, d, color, center - centroid(a, b, c)); };
  inward(p000, p100, p110, p010);  // floor
  inward(p001, p101, p111, p011);  // ceiling
  inward(p000, p100, p101, p001);  // y = -h
  inward(p010, p110, p111, p011);  // y = +h
  inward(p000, p010, p011, p001);  // x = -h
  inward(p100, p110, p111, p101);  // x = +h
}

void add_box(Mesh& mesh, Vec3 lo, Vec3 hi, Color color) {
  add_oriented_box(mesh, (lo + hi) * 0.5, (hi - lo) * 0.5, 0.0, color);
}

void add_oriented_box(Mesh& mesh, Vec3 center, Vec3 he, double heading, Color color) {
  const double c = std::cos(heading), s = std::sin(heading);
  auto corner = [&](double sx, double sy, double sz) {
    const double lx = sx * he.x, ly = sy * he.y;
    return Vec3{center.x + c * lx - s * ly, center.y + s * lx + c * ly, center.z + sz * he.z};
  };
  const Vec3 v[8] = {corner(-1, -1, -1), corner(1, -1, -1), corner(1, 1, -1), corner(-1, 1, -1),
                     corner(-1, -1, 1),  corner(1, -1, 1),  corner(1, 1, 1),  corner(-1, 1, 1)};
  const int faces[6][4] = {{0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4}, {3, 2, 6, 7}, {0, 3, 7, 4}, {1, 2, 6, 5}};
  for (const auto& f : faces) {
    add_quad(mesh, v[f[0]], v[f[1]], v[f[2]], v[f[3]], color, centroid(v[f[0]], v[f[1]], v[f[2]]) - center);
  }
}

void add_cylinder(Mesh& mesh, Vec3 base, double radius, double height, int segments, Color body, double heading,
                  double stripe_half_angle, Color stripe) {
  const Vec3 top_center = base + Vec3{0, 0, height};
  for (int i = 0; i < segments; ++i) {
    const double a0 = heading + kTwoPi * i / segments;
    const double a1 = heading + kTwoPi * (i + 1) / segments;
    const Vec3 b0{base.x + radius * std::cos(a0), base.y + radius * std::sin(a0), base.z};
    const Vec3 b1{base.x + radius * std::cos(a1), base.y + radius * std::sin(a1), base.z};
    const Vec3 t0 = b0 + Vec3{0, 0, height}, t1 = b1 + Vec3{0, 0, height};
    // Segment centre angle relative to heading, wrapped into (-pi, pi].
    double rel = kTwoPi * (i + 0.5) / segments;
    if (rel > std::numbers::pi) rel -= kTwoPi;
    const Color c = std::abs(rel) <= stripe_half_angle ? stripe : body;
    const double am = 0.5 * (a0 + a1);
    add_quad(mesh, b0, b1, t1, t0, c, Vec3{std::cos(am), std::sin(am), 0});
    add_tri(mesh, top_center, t0, t1, body, Vec3{0, 0, 1});
  }
}

void add_cone(Mesh& mesh, Vec3 base, double radius, double height, int segments, Color color) {
  const Vec3 apex = base + Vec3{0, 0, height};
  for (int i = 0; i < segments; ++i) {
    const double a0 = kTwoPi * i / segments, a1 = kTwoPi * (i + 1) / segments;
    const Vec3 b0{base.x + radius * std::cos(a0), base.y + radius * std::sin(a0), base.z};
    const Vec3 b1{base.x + radius * std::cos(a1), base.y + radius * std::sin(a1), base.z};
    const double am = 0.5 * (a0 + a1);
    add_tri(mesh, b0, b1, apex, color, Vec3{height * std::cos(am), height * std::sin(am), radius});
  }
}

void add_sphere(Mesh& mesh, Vec3 center, double radius, int rings, int segments, Color color) {
  auto point = [&](int ring, int seg) {
    const double theta = std::numbers::pi * ring / rings;
    const double phi = kTwoPi * seg / segments;
    return center + Vec3{radius * std::sin(theta) * std::cos(phi), radius * std::sin(theta) * std::sin(phi),
                         radius * std::cos(theta)};
  };
  for (int r = 0; r < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      const Vec3 a = point(r, s), b = point(r, s + 1), c = point(r + 1, s + 1), d = point(r + 1, s);
      if (r > 0) add_tri(mesh, a, b, c, color, centroid(a, b, c) - center);
      if (r + 1 < rings) add_tri(mesh, a, c, d, color, centroid(a, c, d) - center);
    }
  }
}

void add_torus(Mesh& mesh, Vec3 center, double major, double minor, int major_segments, int minor_segments,
               double heading, Color color) {
  // Ring in the plane spanned by the horizontal direction `heading` and +z.
  const Vec3 u{std::cos(heading), std::sin(heading), 0};
  const Vec3 w{0, 0, 1};
  const Vec3 axis = cross(u, w);
  auto tube_center = [&](int i) {
    const double a = kTwoPi * i / major_segments;
    return center + u * (major * std::cos(a)) + w * (major * std::sin(a));
  };
  auto point = [&](int i, int j) {
    const double a = kTwoPi * i / major_segments;
    const double b = kTwoPi * j / minor_segments;
    const Vec3 radial = u * std::cos(a) + w * std::sin(a);
    return tube_center(i) + radial * (minor * std::cos(b)) + axis * (minor * std::sin(b));
  };
  for (int i = 0; i < major_segments; ++i) {
    for (int j = 0; j < minor_segments; ++j) {
      const Vec3 a = point(i, j), b = point(i + 1, j), c = point(i + 1, j + 1), d = point(i, j + 1);
      const Vec3 tc = (tube_center(i) + tube_center(i + 1)) * 0.5;
      add_quad(mesh, a, b, c, d, color, (a + b + c + d) * 0.25 - tc);
    }
  }
}

void add_noisy_ground(Mesh& mesh, double half_extent, int cells, Color base, double amplitude, std::uint64_t seed) {
  const double step = 2.0 * half_extent / cells;
  auto vertex = [&](int i, int j) { return Vec3{-half_extent + i * step, -half_extent + j * step, 0.0}; };
  auto tint = [&](const Vec3& p) {
    const double n = 0.7 * value_noise(seed, p.x / 12.0, p.y / 12.0) + 0.3 * value_noise(seed + 1, p.x / 4.0, p.y / 4.0);
    return scaled(base, 1.0 + amplitude * n);
  };
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      const Vec3 a = vertex(i, j), b = vertex(i + 1, j), c = vertex(i + 1, j + 1), d = vertex(i, j + 1);
      add_tri(mesh, a, b, c, tint(a), tint(b), tint(c), Vec3{0, 0, 1});
      add_tri(mesh, a, c, d, tint(a), tint(c), tint(d), Vec3{0, 0, 1});
    }
  }
}

}  // namespace curioflock::env
