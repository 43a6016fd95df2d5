#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "curioflock/env/world.hpp"
#include "curioflock/networks.hpp"
#include "curioflock/ppo.hpp"

namespace curioflock::harness {

enum class Experiment { Exp1, Exp2, Exp3, Exp4, Exp5 };
enum class Rearing { Group, Alone };

Experiment parse_experiment(std::string_view name);
std::string_view to_string(Experiment e);
Rearing parse_rearing(std::string_view name);
std::string_view to_string(Rearing r);

struct ExperimentConfig {
  Experiment experiment = Experiment::Exp1;
  env::WorldKind world = env::WorldKind::Simple;
  std::uint64_t world_seed = 0;
  std::uint64_t distractor_seed = 0;
  int n_agents = 10;
  int train_episodes = 1000;
  int train_episode_length = 1000;
  int test_episodes = 50;
  int test_episode_length = 2000;
  EncoderSize actor_encoder = EncoderSize::Small;
  EncoderSize world_model_encoder = EncoderSize::Small;
  double eta = 0.1;
  double alpha = 0.2;
  int resolution = 96;
  double light_angle = 0.0;
  double light_intensity = 1.0;
  Rearing rearing = Rearing::Group;
  env::ObjectShape imprint_shape = env::ObjectShape::Cube;
  env::ObjectColor imprint_color = env::ObjectColor::Red;
  int trials_per_contrast = 35;
  int trial_length = 2000;
  std::uint64_t seed = 0;
  double scale = 1.0;
  int checkpoint_every = 0;  // episodes; 0 = only at the end
  bool step_log = true;      // write the per-step training CSV
  // PPO settings exposed for desk runs.
  int buffer_size = 2560;
  int batch_size = 256;
  double learning_rate = 1e-3;
  int epochs = 3;

  // Full-scale settings for an experiment.
  static ExperimentConfig full(Experiment e);
  // Desk defaults: scale 0.1, four agents (where groups exist), 64 px.
  static ExperimentConfig desk(Experiment e);

  // Episode counts after the scale factor (ceil, at least 1).
  int scaled_train_episodes() const;
  int scaled_test_episodes() const;
  int scaled_trials() const;

  env::WorldSpec world_spec() const;
  WorldModelConfig world_model_config() const;
  PpoConfig ppo_config() const;
  void validate() const;

  // Canonical "key = value" text, sorted by key.
  std::string to_text() const;
  std::uint64_t hash() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses "key = value" lines ('#' comments). The optional "experiment" and
// "profile" (full|desk) keys pick the defaults the remaining keys override.
ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

// Applies one key/value pair; throws ConfigError for unknown keys or bad values.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

}  // namespace curioflock::harness
