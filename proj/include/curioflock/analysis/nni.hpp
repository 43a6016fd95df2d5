#pragma once

#include <span>
#include <vector>

#include "curioflock/analysis/episode_log.hpp"

namespace curioflock::analysis {

struct NniResult {
  double nni = 0.0;
  double mean_observed_nn_distance = 0.0;
  double expected_random_nn_distance = 0.0;
};

// Clark-Evans expectation 1 / (2 sqrt(n / area)), no edge correction.
double expected_random_nn_distance(int n_agents, double area);

// Mean over agents of the distance to the nearest other agent.
double mean_nearest_neighbor_distance(std::span<const Pose> poses);

// Averages the per-tick mean NN distance uniformly over ticks.
NniResult nearest_neighbor_index(const EpisodeLog& log);

// Control for coordination: episode k is rebuilt with agent j taken from
// episode (k + j) mod E, so positions keep their distribution but agents
// no longer share a history. Needs as many episodes as agents and equal
// tick and agent counts. Returns one NNI per rebuilt episode.
std::vector<double> cross_episode_shuffled_nni(std::span<const EpisodeLog> logs);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Fraction of ticks where agent 0 is closer to `imprint` than to `novel`;
// ties count one half.
double preference_score(const EpisodeLog& log, Point imprint, Point novel);

}  // namespace curioflock::analysis
