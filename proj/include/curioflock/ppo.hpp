#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "curioflock/actor_critic.hpp"
#include "curioflock/analysis/episode_log.hpp"
#include "curioflock/env/world.hpp"
#include "curioflock/world_model.hpp"

namespace curioflock {

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double entropy_beta = 0.001;
  double clip_epsilon = 0.2;
  int epochs_per_update = 3;
  double learning_rate = 1e-3;
  std::int64_t total_training_steps = 1'000'000;
  int buffer_size = 2560;
  int batch_size = 256;
  double value_coef = 0.5;
  bool normalize_advantages = true;
  double max_grad_norm = 10.0;
  int world_model_epochs = 3;

  // Throws std::invalid_argument on out-of-range settings.
  void validate() const;
};

// R_t = R_m + R_c.
double compose_reward(double metabolic, double curiosity);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// done[t] marks the last step of an episode; bootstrap_value is V(s_T)
// for the state after the final step.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap_value, double gamma, double lambda);

// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A).
double clipped_surrogate(double ratio, double advantage, double clip_epsilon);

using FramePtr = std::shared_ptr<const env::ObservationImage>;

struct Transition {
  FramePtr obs;
  FramePtr next_obs;
  env::AgentAction action;
  double log_prob = 0.0;
  double value = 0.0;
  double metabolic = 0.0;
  double curiosity = 0.0;
  bool done = false;
};

class RolloutBuffer {
 public:
  explicit RolloutBuffer(int capacity);

  // Throws std::logic_error when already full.
  void push(Transition t);
  bool full() const { return static_cast<int>(data_.size()) >= capacity_; }
  int size() const { return static_cast<int>(data_.size()); }
  int capacity() const { return capacity_; }
  void clear();

  const std::vector<Transition>& transitions() const { return data_; }
  // Fills advantages and returns from the stored rewards.
  void finish(double bootstrap_value, double gamma, double lambda);
  bool finished() const { return !advantages_.empty(); }
  const std::vector<double>& advantages() const { return advantages_; }
  const std::vector<double>& returns() const { return returns_; }

 private:
  int capacity_;
  std::vector<Transition> data_;
  std::vector<double> advantages_;
  std::vector<double> returns_;
};

struct PpoReport {
  double policy_loss = 0.0;   // negative clipped surrogate
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  int minibatches = 0;
};

// Loss of one minibatch with optional gradient accumulation; exposed for
// gradient checks.
struct MinibatchLoss {
  double total = 0.0;
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};
MinibatchLoss ppo_minibatch_loss(const ActorCritic& ac, const nn::Tensor& obs, std::span<const env::AgentAction> actions,
                                 std::span<const double> old_log_probs, std::span<const double> advantages,
                                 std::span<const double> returns, const PpoConfig& config, nn::Gradients* grads);

// Clipped-surrogate epochs over shuffled minibatches. The buffer must be
// full and finished. On a non-finite loss or gradient every parameter and
// optimizer moment is restored and nn::NonFiniteError is thrown.
PpoReport ppo_update(const RolloutBuffer& buffer, ActorCritic& ac, const PpoConfig& config, double learning_rate,
                     nn::Rng& rng);

// Shuffled minibatch world-model epochs on the buffer's transitions.
IcmLoss world_model_update(const RolloutBuffer& buffer, WorldModel& wm, const PpoConfig& config, double learning_rate,
                           nn::Rng& rng);

struct Agent {
  // The world model uses wm_config.encoder; both nets see wm_config.resolution.
  Agent(int id, EncoderSize actor_encoder, const WorldModelConfig& wm_config, const PpoConfig& ppo,
        std::uint64_t seed);

  int id;
  ActorCritic actor;
  WorldModel world_model;
  RolloutBuffer buffer;
  nn::Rng rng;
  std::int64_t steps = 0;
  int updates = 0;
};

struct StepRecord {
  int episode = 0;
  int step = 0;
  int agent_id = 0;
  double metabolic = 0.0;
  double curiosity = 0.0;
  env::AgentAction action;
};

struct EpisodeSummary {
  int episode = 0;
  std::vector<double> mean_metabolic;  // per agent
  std::vector<double> mean_curiosity;  // per agent
  double nni = 0.0;                    // NaN for single-agent runs
};

struct UpdateRecord {
  int agent_id = 0;
  int episode = 0;
  PpoReport ppo;
  IcmLoss world_model;
  double learning_rate = 0.0;
};

struct TrainingLog {
  std::vector<EpisodeSummary> episodes;
  std::vector<UpdateRecord> updates;
  std::int64_t step_records = 0;
};

struct TrainOptions {
  int episodes = 1;
  int episode_length = 1000;
  PpoConfig ppo;
  std::uint64_t spawn_seed = 0;
  // Optional sinks.
  std::ostream* step_csv = nullptr;  // (episode, step, agent_id, R_m, R_c, action_translation, action_rotation)
  std::function<void(const EpisodeSummary&, const analysis::EpisodeLog&)> on_episode;
};

void write_step_csv_header(std::ostream& out);

// Runs synchronous multi-agent training in `world`: each tick every agent
// samples from its current policy, the world advances once, and each
// agent's buffer triggers its own PPO and world-model updates when full.
TrainingLog train(std::vector<Agent>& agents, env::World& world, const TrainOptions& options);

}  // namespace curioflock
