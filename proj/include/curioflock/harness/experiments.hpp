#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "curioflock/analysis/episode_log.hpp"
#include "curioflock/analysis/stats.hpp"
#include "curioflock/harness/config.hpp"
#include "curioflock/ppo.hpp"

namespace curioflock::harness {

namespace fs = std::filesystem;

struct RunRecord {
  fs::path dir;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<fs::path> checkpoints;
  std::uint64_t training_hash = 0;  // over per-episode NNI and reward means
  double wall_seconds = 0.0;
};

std::vector<Agent> make_agents(const ExperimentConfig& config);
void save_agents(const std::vector<Agent>& agents, const ExperimentConfig& config, const fs::path& run_dir,
                 const std::string& tag = "");
// Restores "agent_<i>.ckpt" for every agent; throws std::runtime_error when
// a checkpoint is missing.
std::vector<Agent> load_agents(const ExperimentConfig& config, const fs::path& run_dir);

// Trains per the config and writes config.txt, training CSVs, checkpoints
// and record.txt into `run_dir`. Group rearing shares one world; alone
// rearing gives every agent its own world; exp5 adds a moving imprint object.
RunRecord run_training(const ExperimentConfig& config, const fs::path& run_dir, std::ostream* progress = nullptr);

struct TestResult {
  std::vector<analysis::EpisodeLog> logs;
  std::vector<double> nni;  // per episode
};

// Frozen-policy test episodes with every agent in one world under `light`.
TestResult run_test_episodes(const ExperimentConfig& config, const std::vector<Agent>& agents,
                             env::LightingSpec light, std::uint64_t seed);

// Untrained agents choosing uniformly among the 9 actions.
TestResult run_random_baseline(const ExperimentConfig& config, std::uint64_t seed);

// Loads checkpoints from run_dir, runs the test, writes
// test/<condition>/{nni.csv, episode_<k>.csv}. Parameters are verified to be
// unchanged afterwards.
TestResult run_test(const ExperimentConfig& config, const fs::path& run_dir, env::LightingSpec light,
                    const std::string& condition);

// Writes baseline/<condition>/nni.csv (plus logs) under run_dir.
TestResult run_baseline(const ExperimentConfig& config, const fs::path& run_dir, const std::string& condition);

void write_nni_csv(const fs::path& path, const std::string& condition, const std::vector<double>& nni);
std::vector<double> read_nni_csv(const fs::path& path);

struct LightingCondition {
  std::string label;
  env::LightingSpec light;
};
// Seven angle offsets at intensity 1, then eight intensities at angle 0.
std::vector<LightingCondition> lighting_grid();

struct SweepPoint {
  std::string axis;
  std::string level;
  ExperimentConfig config;
};
// Four axes by three levels, one axis varied at a time from `base`.
std::vector<SweepPoint> architecture_sweep(const ExperimentConfig& base);

struct ImprintContrast {
  std::string kind;   // "color" or "shape"
  std::string novel;  // name of the novel color or shape
  std::vector<double> scores;
  analysis::TTestResult test;
};

// Novel colors and shapes paired with the imprinted object.
std::vector<env::ImprintObject> novel_objects(const ExperimentConfig& config, std::vector<std::string>* kinds);

// Two-alternative trials: the agent starts at the centre with a random
// heading; imprinted and novel objects spin on opposite sides, swapping
// sides every trial.
std::vector<ImprintContrast> run_imprint_test(const ExperimentConfig& config, const Agent& agent, std::uint64_t seed);
// Loads the single agent from run_dir and writes test/imprint/preference.csv.
std::vector<ImprintContrast> run_imprint_test(const ExperimentConfig& config, const fs::path& run_dir);

// Same-length trials with a uniformly random policy.
std::vector<ImprintContrast> run_imprint_random(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace curioflock::harness
