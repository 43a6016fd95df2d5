#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace curioflock::analysis {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

// Floor shape used to turn agent counts into densities.
struct AreaDescriptor {
  enum class Shape { Square, Circle };
  Shape shape = Shape::Square;
  double size = 60.0;  // side, or diameter

  double area() const;
  static AreaDescriptor square(double side) { return {Shape::Square, side}; }
  static AreaDescriptor circle(double diameter) { return {Shape::Circle, diameter}; }

  friend bool operator==(const AreaDescriptor&, const AreaDescriptor&) = default;
};

// Per-tick poses of every agent for one episode.
class EpisodeLog {
 public:
  EpisodeLog() = default;
  EpisodeLog(int n_agents, AreaDescriptor area);

  // Throws std::invalid_argument unless there is exactly one pose per agent.
  void add_tick(std::span<const Pose> poses);

  int agent_count() const { return n_agents_; }
  std::size_t tick_count() const { return ticks_.size(); }
  const AreaDescriptor& area() const { return area_; }
  std::span<const Pose> tick(std::size_t t) const { return ticks_.at(t); }

  // FNV-1a over the area and every pose's raw bytes.
  std::uint64_t hash() const;

  // CSV: "# area square|circle <size>", header "tick,agent_id,x,y,heading",
  // one row per agent per tick.
  void write_csv(std::ostream& out) const;
  static EpisodeLog read_csv(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static EpisodeLog load(const std::filesystem::path& path);

  friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;

 private:
  int n_agents_ = 0;
  AreaDescriptor area_;
  std::vector<std::vector<Pose>> ticks_;
};

}  // namespace curioflock::analysis
