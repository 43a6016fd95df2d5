#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "curioflock/env/action.hpp"
#include "curioflock/env/observation.hpp"
#include "curioflock/networks.hpp"
#include "curioflock/nn/layers.hpp"
#include "curioflock/nn/parameters.hpp"

namespace curioflock {

struct PolicyOutput {
  std::array<double, 3> translation_probs{};
  std::array<double, 3> rotation_probs{};
  double value = 0.0;
  // Log-probabilities straight from the log-softmax heads.
  std::array<double, 3> translation_log_probs{};
  std::array<double, 3> rotation_log_probs{};
};

struct SampledAction {
  env::AgentAction action;
  double log_prob = 0.0;
  double entropy = 0.0;
};

double categorical_entropy(const std::array<double, 3>& probs);

// Draws translation and rotation independently from their heads. Throws
// std::domain_error on NaN, negative or unnormalized probabilities.
SampledAction sample_action(const PolicyOutput& out, nn::Rng& rng);

// Builds a PolicyOutput from probabilities alone (log-probs derived).
PolicyOutput make_policy_output(const std::array<double, 3>& translation, const std::array<double, 3>& rotation,
                                double value = 0.0);

// The policy pi(s_t) with a scalar value head sharing encoder and trunk.
// Parameters live under "actor.*".
class ActorCritic {
 public:
  ActorCritic(EncoderSize size, int resolution, std::uint64_t seed);

  PolicyOutput policy_forward(const env::ObservationImage& obs) const;
  std::vector<PolicyOutput> policy_forward(const nn::Tensor& obs_batch) const;

  struct Evaluation {
    std::vector<double> log_probs;
    std::vector<double> entropies;
    std::vector<double> values;
  };
  Evaluation evaluate_actions(const nn::Tensor& obs_batch, std::span<const env::AgentAction> actions) const;

  const nn::Stack& stack() const { return stack_; }
  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }
  EncoderSize encoder_size() const { return size_; }
  int resolution() const { return resolution_; }

  // Parameter-name prefix of the final dense layer feeding the heads.
  std::string output_layer_prefix() const;

 private:
  EncoderSize size_;
  int resolution_;
  nn::Stack stack_;
  nn::ParameterSet params_;
};

// Row -> PolicyOutput for a log-space head output row [3 | 3 | value].
PolicyOutput decode_policy_row(std::span<const nn::Real> row);

}  // namespace curioflock
