#include "curioflock/analysis/episode_log.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace curioflock::analysis {

namespace {

std::uint64_t mix(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

double AreaDescriptor::area() const {
  if (shape == Shape::Circle) return std::numbers::pi * (size / 2.0) * (size / 2.0);
  return size * size;
}

EpisodeLog::EpisodeLog(int n_agents, AreaDescriptor area) : n_agents_(n_agents), area_(area) {
  if (n_agents < 1) throw std::invalid_argument("episode log needs at least one agent");
  if (!(area.size > 0.0)) throw std::invalid_argument("episode log area must be positive");
}

void EpisodeLog::add_tick(std::span<const Pose> poses) {
  if (static_cast<int>(poses.size()) != n_agents_) {
    throw std::invalid_argument("tick has " + std::to_string(poses.size()) + " poses, expected " +
                                std::to_string(n_agents_));
  }
  ticks_.emplace_back(poses.begin(), poses.end());
}

std::uint64_t EpisodeLog::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const int shape = area_.shape == AreaDescriptor::Shape::Circle ? 1 : 0;
  h = mix(h, &shape, sizeof shape);
  h = mix(h, &area_.size, sizeof area_.size);
  h = mix(h, &n_agents_, sizeof n_agents_);
  for (const auto& tick : ticks_) {
    for (const auto& p : tick) {
      h = mix(h, &p.x, sizeof p.x);
      h = mix(h, &p.y, sizeof p.y);
      h = mix(h, &p.heading, sizeof p.heading);
    }
  }
  return h;
}

void EpisodeLog::write_csv(std::ostream& out) const {
  out << "# area " << (area_.shape == AreaDescriptor::Shape::Circle ? "circle" : "square") << ' '
      << std::setprecision(std::numeric_limits<double>::max_digits10) << area_.size << " agents " << n_agents_
      << '\n';
  out << "tick,agent_id,x,y,heading\n";
  for (std::size_t t = 0; t < ticks_.size(); ++t) {
    for (int a = 0; a < n_agents_; ++a) {
      const Pose& p = ticks_[t][static_cast<std::size_t>(a)];
      out << t << ',' << a << ',' << p.x << ',' << p.y << ',' << p.heading << '\n';
    }
  }
}

EpisodeLog EpisodeLog::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("episode log: empty input");
  std::istringstream meta(line);
  std::string hash_mark, area_word, shape, agents_word;
  double size = 0.0;
  int n = 0;
  meta >> hash_mark >> area_word >> shape >> size >> agents_word >> n;
  if (hash_mark != "#" || area_word != "area" || agents_word != "agents" || (shape != "square" && shape != "circle")) {
    throw std::runtime_error("episode log: bad metadata line: " + line);
  }
  EpisodeLog log(n, shape == "circle" ? AreaDescriptor::circle(size) : AreaDescriptor::square(size));
  if (!std::getline(in, line) || line != "tick,agent_id,x,y,heading") {
    throw std::runtime_error("episode log: missing header");
  }
  std::vector<Pose> tick;
  std::size_t expected_tick = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::size_t t = 0;
    int agent = 0;
    Pose p;
    char c1, c2, c3, c4;
    if (!(row >> t >> c1 >> agent >> c2 >> p.x >> c3 >> p.y >> c4 >> p.heading)) {
      throw std::runtime_error("episode log: bad row: " + line);
    }
    if (t != expected_tick || agent != static_cast<int>(tick.size())) {
      throw std::runtime_error("episode log: rows out of order at: " + line);
    }
    tick.push_back(p);
    if (static_cast<int>(tick.size()) == n) {
      log.add_tick(tick);
      tick.clear();
      ++expected_tick;
    }
  }
  if (!tick.empty()) throw std::runtime_error("episode log: truncated final tick");
  return log;
}

void EpisodeLog::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out);
}

EpisodeLog EpisodeLog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_csv(in);
}

}  // namespace curioflock::analysis
