#pragma once

#include <cmath>
#include <filesystem>
#include <span>
#include <vector>

#include "curioflock/env/observation.hpp"

namespace curioflock::env {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
  friend Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Vec3 normalized() const {
    const double n = norm();
    return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{};
  }
};

struct Color {
  float r = 0, g = 0, b = 0;
};

// Flat-shaded triangle: per-vertex albedo (interpolated), one face normal
// pointing to the visible side.
struct Triangle {
  Vec3 v[3];
  Color albedo[3];
  Vec3 normal;
};

using Mesh = std::vector<Triangle>;

struct Camera {
  Vec3 eye;
  double yaw = 0.0;  // radians; looks along (cos yaw, sin yaw, 0)
  double hfov_deg = 90.0;
  double near_plane = 0.1;
  double far_plane = 200.0;
};

struct DirectionalLight {
  Vec3 to_light{0, 0, 1};  // unit vector towards the light
  double intensity = 1.0;
  double ambient = 0.2;
};

// Z-buffered perspective rasterizer producing square RGB frames.
class Rasterizer {
 public:
  explicit Rasterizer(int resolution);

  void clear(Color background);
  void draw(std::span<const Triangle> mesh, const Camera& camera, const DirectionalLight& light);
  ObservationImage image() const;
  int resolution() const { return res_; }

 private:
  // screen[i] = {x, y, 1/z}; colors are pre-divided by z.
  void fill(const double (*screen)[3], const Color* colors_over_z, double shade);

  int res_;
  double far_inv_ = 0.0;
  std::vector<double> inv_depth_;
  std::vector<Color> color_;
};

// Binary PPM (P6) dump for debugging.
void write_ppm(const std::filesystem::path& path, const ObservationImage& image);

}  // namespace curioflock::env
