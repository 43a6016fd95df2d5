#include "curioflock/env/rasterizer.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace curioflock::env {

namespace {

struct ClipVertex {
  Vec3 pos;  // camera space: x right, y up, z depth
  Color color;
};

ClipVertex lerp(const ClipVertex& a, const ClipVertex& b, double t) {
  ClipVertex out;
  out.pos = a.pos + (b.pos - a.pos) * t;
  out.color = {static_cast<float>(a.color.r + (b.color.r - a.color.r) * t),
               static_cast<float>(a.color.g + (b.color.g - a.color.g) * t),
               static_cast<float>(a.color.b + (b.color.b - a.color.b) * t)};
  return out;
}

// Sutherland-Hodgman against z >= near; a triangle yields at most 4 vertices.
int clip_near(const ClipVertex* in, double near_plane, ClipVertex* out) {
  int count = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool a_in = a.pos.z >= near_plane;
    const bool b_in = b.pos.z >= near_plane;
    if (a_in) out[count++] = a;
    if (a_in != b_in) out[count++] = lerp(a, b, (near_plane - a.pos.z) / (b.pos.z - a.pos.z));
  }
  return count;
}

std::uint8_t to_byte(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

}  // namespace

Rasterizer::Rasterizer(int resolution)
    : res_(resolution),
      inv_depth_(static_cast<std::size_t>(resolution) * resolution),
      color_(static_cast<std::size_t>(resolution) * resolution) {
  if (resolution <= 0) throw std::invalid_argument("rasterizer resolution must be positive");
}

void Rasterizer::clear(Color background) {
  std::fill(inv_depth_.begin(), inv_depth_.end(), 0.0);
  std::fill(color_.begin(), color_.end(), background);
}

void Rasterizer::draw(std::span<const Triangle> mesh, const Camera& camera, const DirectionalLight& light) {
  const double tan_half = std::tan(camera.hfov_deg * std::numbers::pi / 360.0);
  const Vec3 fwd{std::cos(camera.yaw), std::sin(camera.yaw), 0.0};
  const Vec3 right{std::sin(camera.yaw), -std::cos(camera.yaw), 0.0};
  const Vec3 up{0.0, 0.0, 1.0};
  far_inv_ = 1.0 / camera.far_plane;
  const double half = 0.5 * res_;

  for (const Triangle& tri : mesh) {
    if (dot(tri.normal, camera.eye - tri.v[0]) <= 0.0) continue;

    ClipVertex cv[3];
    bool all_near = true, all_far = true, all_left = true, all_right = true, all_up = true, all_down = true;
    for (int i = 0; i < 3; ++i) {
      const Vec3 d = tri.v[i] - camera.eye;
      cv[i].pos = {dot(d, right), dot(d, up), dot(d, fwd)};
      cv[i].color = tri.albedo[i];
      const double z = cv[i].pos.z;
      const double lim = std::max(z, 0.0) * tan_half;
      all_near &= z < camera.near_plane;
      all_far &= z > camera.far_plane;
      all_left &= cv[i].pos.x < -lim;
      all_right &= cv[i].pos.x > lim;
      all_down &= cv[i].pos.y < -lim;
      all_up &= cv[i].pos.y > lim;
    }
    if (all_near || all_far || all_left || all_right || all_up || all_down) continue;

    const double shade = light.ambient + light.intensity * std::max(0.0, dot(tri.normal, light.to_light));

    ClipVertex poly[4];
    const int n = clip_near(cv, camera.near_plane, poly);
    if (n < 3) continue;
    double screen[4][3];
    Color over_z[4];
    for (int i = 0; i < n; ++i) {
      const double inv_z = 1.0 / poly[i].pos.z;
      screen[i][0] = half * (1.0 + poly[i].pos.x * inv_z / tan_half);
      screen[i][1] = half * (1.0 - poly[i].pos.y * inv_z / tan_half);
      screen[i][2] = inv_z;
      over_z[i] = {static_cast<float>(poly[i].color.r * inv_z), static_cast<float>(poly[i].color.g * inv_z),
                   static_cast<float>(poly[i].color.b * inv_z)};
    }
    for (int i = 1; i + 1 < n; ++i) {
      const double s[3][3] = {{screen[0][0], screen[0][1], screen[0][2]},
                              {screen[i][0], screen[i][1], screen[i][2]},
                              {screen[i + 1][0], screen[i + 1][1], screen[i + 1][2]}};
      const Color c[3] = {over_z[0], over_z[i], over_z[i + 1]};
      fill(s, c, shade);
    }
  }
}

void Rasterizer::fill(const double (*s)[3], const Color* c, double shade) {
  const double area = (s[1][0] - s[0][0]) * (s[2][1] - s[0][1]) - (s[2][0] - s[0][0]) * (s[1][1] - s[0][1]);
  if (std::abs(area) < 1e-12) return;
  const double inv_area = 1.0 / area;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min({s[0][0], s[1][0], s[2][0]}))));
  const int x1 = std::min(res_ - 1, static_cast<int>(std::ceil(std::max({s[0][0], s[1][0], s[2][0]}))));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min({s[0][1], s[1][1], s[2][1]}))));
  const int y1 = std::min(res_ - 1, static_cast<int>(std::ceil(std::max({s[0][1], s[1][1], s[2][1]}))));
  for (int py = y0; py <= y1; ++py) {
    const double y = py + 0.5;
    for (int px = x0; px <= x1; ++px) {
      const double x = px + 0.5;
      const double b0 = ((s[1][0] - x) * (s[2][1] - y) - (s[2][0] - x) * (s[1][1] - y)) * inv_area;
      const double b1 = ((s[2][0] - x) * (s[0][1] - y) - (s[0][0] - x) * (s[2][1] - y)) * inv_area;
      const double b2 = 1.0 - b0 - b1;
      if (b0 < 0.0 || b1 < 0.0 || b2 < 0.0) continue;
      const double inv_z = b0 * s[0][2] + b1 * s[1][2] + b2 * s[2][2];
      const std::size_t idx = static_cast<std::size_t>(py) * res_ + px;
      if (inv_z < far_inv_ || inv_z <= inv_depth_[idx]) continue;
      inv_depth_[idx] = inv_z;
      const double k = shade / inv_z;
      color_[idx] = {static_cast<float>((b0 * c[0].r + b1 * c[1].r + b2 * c[2].r) * k),
                     static_cast<float>((b0 * c[0].g + b1 * c[1].g + b2 * c[2].g) * k),
                     static_cast<float>((b0 * c[0].b + b1 * c[1].b + b2 * c[2].b) * k)};
    }
  }
}

ObservationImage Rasterizer::image() const {
  ObservationImage img(res_);
  const std::size_t plane = static_cast<std::size_t>(res_) * res_;
  for (std::size_t i = 0; i < plane; ++i) {
    img.pixels[i] = to_byte(color_[i].r);
    img.pixels[plane + i] = to_byte(color_[i].g);
    img.pixels[2 * plane + i] = to_byte(color_[i].b);
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const ObservationImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const int r = image.resolution;
  out << "P6\n" << r << ' ' << r << "\n255\n";
  for (int y = 0; y < r; ++y) {
    for (int x = 0; x < r; ++x) {
      for (int ch = 0; ch < 3; ++ch) out.put(static_cast<char>(image.at(ch, y, x)));
    }
  }
}

}  // namespace curioflock::env
