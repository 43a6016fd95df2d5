#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "curioflock/env/action.hpp"
#include "curioflock/env/observation.hpp"
#include "curioflock/networks.hpp"
#include "curioflock/nn/layers.hpp"
#include "curioflock/nn/parameters.hpp"

namespace curioflock {

struct WorldModelConfig {
  EncoderSize encoder = EncoderSize::Small;
  int resolution = 64;
  double alpha = 0.2;  // weight of the forward loss
  double eta = 0.1;    // intrinsic reward scale
  double max_grad_norm = 10.0;
};

struct IcmLoss {
  double inverse_loss = 0.0;
  double forward_loss = 0.0;
  double combined = 0.0;
};

// One (s_t, a_t, s_{t+1}) transition by reference.
struct TransitionView {
  const env::ObservationImage* obs = nullptr;
  env::AgentAction action;
  const env::ObservationImage* next_obs = nullptr;
};

// Intrinsic curiosity module: a feature encoder shared by an inverse-dynamics
// head (predicts a_t from x_t, x_{t+1}) and a forward-dynamics head (predicts
// x_{t+1} from x_t, a_t). Parameters live in one set under "wm.phi.*",
// "wm.inv.*" and "wm.fwd.*" and are optimized jointly.
class WorldModel {
 public:
  WorldModel(const WorldModelConfig& config, std::uint64_t seed);

  nn::Tensor encode(const env::ObservationImage& obs) const;
  nn::Tensor encode(const nn::Tensor& obs_batch) const;

  IcmLoss icm_loss(const TransitionView& transition) const;
  IcmLoss icm_loss(std::span<const TransitionView> batch) const;

  // eta * L_f for one transition; never touches parameters.
  double intrinsic_reward(const TransitionView& transition) const;
  std::vector<double> intrinsic_rewards(std::span<const TransitionView> batch) const;

  // One joint optimizer step on the batch-mean combined loss. Returns the
  // pre-step losses. Throws nn::NonFiniteError (parameters untouched) when
  // the loss or a gradient is not finite.
  IcmLoss update(std::span<const TransitionView> batch, double learning_rate);

  // Batch-mean losses on raw tensors; accumulates gradients when `grads` is
  // non-null.
  IcmLoss evaluate(const nn::Tensor& obs, const nn::Tensor& next_obs, std::span<const env::AgentAction> actions,
                   nn::Gradients* grads) const;
  // Per-sample L_f.
  std::vector<double> forward_errors(const nn::Tensor& obs, const nn::Tensor& next_obs,
                                     std::span<const env::AgentAction> actions) const;

  const WorldModelConfig& config() const { return config_; }
  void set_eta(double eta);
  void set_alpha(double alpha);

  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }
  const nn::Stack& encoder() const { return encoder_.stack; }
  const nn::Stack& inverse_head() const { return inverse_; }
  const nn::Stack& forward_head() const { return forward_; }

 private:
  void stack_batch(std::span<const TransitionView> batch, nn::Tensor& obs, nn::Tensor& next_obs,
                   std::vector<env::AgentAction>& actions) const;

  WorldModelConfig config_;
  EncoderNet encoder_;
  nn::Stack inverse_;
  nn::Stack forward_;
  nn::ParameterSet params_;
};

nn::Tensor action_one_hot_batch(std::span<const env::AgentAction> actions);

}  // namespace curioflock
