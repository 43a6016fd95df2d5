#include "curioflock/actor_critic.hpp"

#include <cmath>
#include <stdexcept>

namespace curioflock {

namespace {

void validate_probs(const std::array<double, 3>& p, const char* head) {
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw std::domain_error(std::string("degenerate ") + head + " probabilities");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-4) throw std::domain_error(std::string(head) + " probabilities do not sum to 1");
}

int draw(const std::array<double, 3>& p, double u) {
  double acc = 0.0;
  for (int i = 0; i < 2; ++i) {
    acc += p[static_cast<std::size_t>(i)];
    if (u < acc) return i;
  }
  // Skip trailing zero-probability entries that rounding could otherwise select.
  for (int i = 2; i > 0; --i) {
    if (p[static_cast<std::size_t>(i)] > 0.0) return i;
  }
  return 0;
}

}  // namespace

double categorical_entropy(const std::array<double, 3>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

PolicyOutput make_policy_output(const std::array<double, 3>& translation, const std::array<double, 3>& rotation,
                                double value) {
  PolicyOutput out;
  out.translation_probs = translation;
  out.rotation_probs = rotation;
  out.value = value;
  for (std::size_t i = 0; i < 3; ++i) {
    out.translation_log_probs[i] = std::log(translation[i]);
    out.rotation_log_probs[i] = std::log(rotation[i]);
  }
  return out;
}

SampledAction sample_action(const PolicyOutput& out, nn::Rng& rng) {
  validate_probs(out.translation_probs, "translation");
  validate_probs(out.rotation_probs, "rotation");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int t = draw(out.translation_probs, unit(rng));
  const int r = draw(out.rotation_probs, unit(rng));
  SampledAction s;
  s.action = env::action_from_indices(t, r);
  s.log_prob = out.translation_log_probs[static_cast<std::size_t>(t)] + out.rotation_log_probs[static_cast<std::size_t>(r)];
  s.entropy = categorical_entropy(out.translation_probs) + categorical_entropy(out.rotation_probs);
  return s;
}

PolicyOutput decode_policy_row(std::span<const nn::Real> row) {
  PolicyOutput out;
  for (std::size_t i = 0; i < 3; ++i) {
    out.translation_log_probs[i] = row[i];
    out.rotation_log_probs[i] = row[3 + i];
    out.translation_probs[i] = std::exp(out.translation_log_probs[i]);
    out.rotation_probs[i] = std::exp(out.rotation_log_probs[i]);
  }
  out.value = row[6];
  return out;
}

ActorCritic::ActorCritic(EncoderSize size, int resolution, std::uint64_t seed)
    : size_(size), resolution_(resolution), stack_(build_actor_critic(size, resolution, "actor", true)) {
  nn::Rng rng(seed);
  stack_.init_parameters(params_, rng);
}

std::string ActorCritic::output_layer_prefix() const {
  return stack_.prefix() + "." + std::to_string(stack_.layers().size() - 2) + ".dense.";
}

PolicyOutput ActorCritic::policy_forward(const env::ObservationImage& obs) const {
  return policy_forward(env::to_tensor(obs)).front();
}

std::vector<PolicyOutput> ActorCritic::policy_forward(const nn::Tensor& obs_batch) const {
  nn::Tensor out = stack_.forward(params_, obs_batch);
  std::vector<PolicyOutput> result;
  result.reserve(static_cast<std::size_t>(out.dim(0)));
  for (int i = 0; i < out.dim(0); ++i) result.push_back(decode_policy_row(out.row(i)));
  return result;
}

ActorCritic::Evaluation ActorCritic::evaluate_actions(const nn::Tensor& obs_batch,
                                                      std::span<const env::AgentAction> actions) const {
  if (obs_batch.dim(0) != static_cast<int>(actions.size())) {
    throw nn::ShapeError("evaluate_actions: " + std::to_string(obs_batch.dim(0)) + " observations vs " +
                         std::to_string(actions.size()) + " actions");
  }
  for (const auto& a : actions) {
    // Rejects values cast into the enums from out-of-range integers.
    (void)env::action_from_indices(env::translation_index(a), env::rotation_index(a));
  }
  const std::vector<PolicyOutput> outs = policy_forward(obs_batch);
  Evaluation ev;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const auto& o = outs[i];
    ev.log_probs.push_back(o.translation_log_probs[static_cast<std::size_t>(env::translation_index(actions[i]))] +
                           o.rotation_log_probs[static_cast<std::size_t>(env::rotation_index(actions[i]))]);
    ev.entropies.push_back(categorical_entropy(o.translation_probs) + categorical_entropy(o.rotation_probs));
    ev.values.push_back(o.value);
  }
  return ev;
}

}  // namespace curioflock
