#include "curioflock/analysis/nni.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace curioflock::analysis {

double expected_random_nn_distance(int n_agents, double area) {
  if (n_agents < 2) throw std::invalid_argument("nearest-neighbour statistics need at least 2 agents");
  if (!(area > 0.0)) throw std::invalid_argument("area must be positive");
  return 1.0 / (2.0 * std::sqrt(static_cast<double>(n_agents) / area));
}

double mean_nearest_neighbor_distance(std::span<const Pose> poses) {
  if (poses.size() < 2) throw std::invalid_argument("nearest-neighbour statistics need at least 2 agents");
  double total = 0.0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < poses.size(); ++j) {
      if (i == j) continue;
      best = std::min(best, std::hypot(poses[i].x - poses[j].x, poses[i].y - poses[j].y));
    }
    total += best;
  }
  return total / static_cast<double>(poses.size());
}

NniResult nearest_neighbor_index(const EpisodeLog& log) {
  if (log.agent_count() < 2) throw std::invalid_argument("nearest-neighbour index needs at least 2 agents");
  if (log.tick_count() == 0) throw std::invalid_argument("nearest-neighbour index of an empty log");
  double sum = 0.0;
  for (std::size_t t = 0; t < log.tick_count(); ++t) sum += mean_nearest_neighbor_distance(log.tick(t));
  NniResult r;
  r.mean_observed_nn_distance = sum / static_cast<double>(log.tick_count());
  r.expected_random_nn_distance = expected_random_nn_distance(log.agent_count(), log.area().area());
  r.nni = r.mean_observed_nn_distance / r.expected_random_nn_distance;
  return r;
}

std::vector<double> cross_episode_shuffled_nni(std::span<const EpisodeLog> logs) {
  if (logs.empty()) throw std::invalid_argument("shuffle control needs episodes");
  const int n = logs.front().agent_count();
  const std::size_t ticks = logs.front().tick_count();
  if (logs.size() < static_cast<std::size_t>(n)) throw std::invalid_argument("shuffle control needs at least one episode per agent");
  for (const auto& log : logs) {
    if (log.agent_count() != n || log.tick_count() != ticks || !(log.area() == logs.front().area())) {
      throw std::invalid_argument("shuffle control needs matching episodes");
    }
  }
  std::vector<double> out;
  std::vector<Pose> poses(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < logs.size(); ++k) {
    EpisodeLog mixed(n, logs.front().area());
    for (std::size_t t = 0; t < ticks; ++t) {
      for (int j = 0; j < n; ++j) {
        poses[static_cast<std::size_t>(j)] = logs[(k + static_cast<std::size_t>(j)) % logs.size()].tick(t)[static_cast<std::size_t>(j)];
      }
      mixed.add_tick(poses);
    }
    out.push_back(nearest_neighbor_index(mixed).nni);
  }
  return out;
}

double preference_score(const EpisodeLog& log, Point imprint, Point novel) {
  if (log.tick_count() == 0) throw std::invalid_argument("preference score of an empty log");
  double score = 0.0;
  for (std::size_t t = 0; t < log.tick_count(); ++t) {
    const Pose& p = log.tick(t)[0];
    const double di = std::hypot(p.x - imprint.x, p.y - imprint.y);
    const double dn = std::hypot(p.x - novel.x, p.y - novel.y);
    if (di < dn) {
      score += 1.0;
    } else if (di == dn) {
      score += 0.5;
    }
  }
  return score / static_cast<double>(log.tick_count());
}

}  // namespace curioflock::analysis
