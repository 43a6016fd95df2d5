#include "curioflock/world_model.hpp"

#include <cmath>
#include <stdexcept>

#include "curioflock/nn/optimizer.hpp"

namespace curioflock {

using nn::Real;
using nn::Tensor;

namespace {

void check_config(const WorldModelConfig& c) {
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (!(c.eta >= 0.0)) throw std::invalid_argument("eta must be non-negative");
}

}  // namespace

Tensor action_one_hot_batch(std::span<const env::AgentAction> actions) {
  Tensor out({static_cast<int>(actions.size()), env::kActionOneHotDim});
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto v = env::one_hot(actions[i]);
    for (int j = 0; j < env::kActionOneHotDim; ++j) out[i * env::kActionOneHotDim + static_cast<std::size_t>(j)] = v[static_cast<std::size_t>(j)];
  }
  return out;
}

WorldModel::WorldModel(const WorldModelConfig& config, std::uint64_t seed)
    : config_(config),
      encoder_(build_encoder(config.encoder, config.resolution, 3, "wm.phi")),
      inverse_(build_inverse_head("wm.inv", true)),
      forward_(build_forward_head("wm.fwd")) {
  check_config(config_);
  nn::Rng rng(seed);
  encoder_.stack.init_parameters(params_, rng);
  inverse_.init_parameters(params_, rng);
  forward_.init_parameters(params_, rng);
}

void WorldModel::set_eta(double eta) {
  WorldModelConfig c = config_;
  c.eta = eta;
  check_config(c);
  config_ = c;
}

void WorldModel::set_alpha(double alpha) {
  WorldModelConfig c = config_;
  c.alpha = alpha;
  check_config(c);
  config_ = c;
}

Tensor WorldModel::encode(const env::ObservationImage& obs) const {
  Tensor x = encode(env::to_tensor(obs));
  x.reshape({kFeatureDim});
  return x;
}

Tensor WorldModel::encode(const Tensor& obs_batch) const { return encoder_.stack.forward(params_, obs_batch); }

void WorldModel::stack_batch(std::span<const TransitionView> batch, Tensor& obs, Tensor& next_obs,
                             std::vector<env::AgentAction>& actions) const {
  if (batch.empty()) throw std::invalid_argument("world model: empty transition batch");
  std::vector<const env::ObservationImage*> a, b;
  a.reserve(batch.size());
  b.reserve(batch.size());
  actions.clear();
  for (const auto& t : batch) {
    a.push_back(t.obs);
    b.push_back(t.next_obs);
    actions.push_back(t.action);
  }
  obs = env::to_tensor(a);
  next_obs = env::to_tensor(b);
}

IcmLoss WorldModel::evaluate(const Tensor& obs, const Tensor& next_obs, std::span<const env::AgentAction> actions,
                             nn::Gradients* grads) const {
  const int n = obs.dim(0);
  if (n == 0 || next_obs.dim(0) != n || static_cast<int>(actions.size()) != n) {
    throw nn::ShapeError("world model: batch sizes disagree");
  }
  const double alpha = config_.alpha;
  nn::Tape t_obs, t_next, t_inv, t_fwd;
  const bool train = grads != nullptr;
  Tensor x = encoder_.stack.forward(params_, obs, train ? &t_obs : nullptr);
  Tensor xn = encoder_.stack.forward(params_, next_obs, train ? &t_next : nullptr);
  Tensor logp = inverse_.forward(params_, nn::concat_features(x, xn), train ? &t_inv : nullptr);
  Tensor pred = forward_.forward(params_, nn::concat_features(x, action_one_hot_batch(actions)), train ? &t_fwd : nullptr);

  double li = 0.0, lf = 0.0;
  for (int i = 0; i < n; ++i) {
    auto row = logp.row(i);
    li -= static_cast<double>(row[static_cast<std::size_t>(env::translation_index(actions[static_cast<std::size_t>(i)]))]) +
          static_cast<double>(row[static_cast<std::size_t>(3 + env::rotation_index(actions[static_cast<std::size_t>(i)]))]);
    auto p = pred.row(i);
    auto target = xn.row(i);
    double sq = 0.0;
    for (int d = 0; d < kFeatureDim; ++d) {
      const double diff = static_cast<double>(p[static_cast<std::size_t>(d)]) - target[static_cast<std::size_t>(d)];
      sq += diff * diff;
    }
    lf += 0.5 * sq / kFeatureDim;
  }
  IcmLoss loss;
  loss.inverse_loss = li / n;
  loss.forward_loss = lf / n;
  loss.combined = (1.0 - alpha) * loss.inverse_loss + alpha * loss.forward_loss;
  if (!train) return loss;

  Tensor dlogp(logp.shape());
  const Real inv_scale = static_cast<Real>(-(1.0 - alpha) / n);
  for (int i = 0; i < n; ++i) {
    auto row = dlogp.row(i);
    row[static_cast<std::size_t>(env::translation_index(actions[static_cast<std::size_t>(i)]))] = inv_scale;
    row[static_cast<std::size_t>(3 + env::rotation_index(actions[static_cast<std::size_t>(i)]))] = inv_scale;
  }
  Tensor dpred(pred.shape());
  Tensor dxn_direct(xn.shape());
  const double fwd_scale = alpha / (static_cast<double>(n) * kFeatureDim);
  for (std::size_t j = 0; j < pred.size(); ++j) {
    const Real g = static_cast<Real>(fwd_scale * (static_cast<double>(pred[j]) - xn[j]));
    dpred[j] = g;
    dxn_direct[j] = -g;
  }
  Tensor d_inv_in = inverse_.backward(t_inv, dlogp, *grads);
  Tensor d_fwd_in = forward_.backward(t_fwd, dpred, *grads);
  Tensor dx_inv, dxn_inv, dx_fwd, d_onehot;
  nn::split_features(d_inv_in, kFeatureDim, dx_inv, dxn_inv);
  nn::split_features(d_fwd_in, kFeatureDim, dx_fwd, d_onehot);
  for (std::size_t j = 0; j < dx_inv.size(); ++j) {
    dx_inv[j] += dx_fwd[j];
    dxn_inv[j] += dxn_direct[j];
  }
  encoder_.stack.backward(t_obs, dx_inv, *grads);
  encoder_.stack.backward(t_next, dxn_inv, *grads);
  return loss;
}

std::vector<double> WorldModel::forward_errors(const Tensor& obs, const Tensor& next_obs,
                                               std::span<const env::AgentAction> actions) const {
  const int n = obs.dim(0);
  Tensor x = encoder_.stack.forward(params_, obs);
  Tensor xn = encoder_.stack.forward(params_, next_obs);
  Tensor pred = forward_.forward(params_, nn::concat_features(x, action_one_hot_batch(actions)));
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto p = pred.row(i);
    auto t = xn.row(i);
    double sq = 0.0;
    for (int d = 0; d < kFeatureDim; ++d) {
      const double diff = static_cast<double>(p[static_cast<std::size_t>(d)]) - t[static_cast<std::size_t>(d)];
      sq += diff * diff;
    }
    out[static_cast<std::size_t>(i)] = 0.5 * sq / kFeatureDim;
  }
  return out;
}

IcmLoss WorldModel::icm_loss(const TransitionView& transition) const {
  return icm_loss(std::span<const TransitionView>(&transition, 1));
}

IcmLoss WorldModel::icm_loss(std::span<const TransitionView> batch) const {
  Tensor obs, next;
  std::vector<env::AgentAction> actions;
  stack_batch(batch, obs, next, actions);
  return evaluate(obs, next, actions, nullptr);
}

double WorldModel::intrinsic_reward(const TransitionView& transition) const {
  return intrinsic_rewards(std::span<const TransitionView>(&transition, 1)).front();
}

std::vector<double> WorldModel::intrinsic_rewards(std::span<const TransitionView> batch) const {
  Tensor obs, next;
  std::vector<env::AgentAction> actions;
  stack_batch(batch, obs, next, actions);
  std::vector<double> r = forward_errors(obs, next, actions);
  for (double& v : r) v *= config_.eta;
  return r;
}

IcmLoss WorldModel::update(std::span<const TransitionView> batch, double learning_rate) {
  Tensor obs, next;
  std::vector<env::AgentAction> actions;
  stack_batch(batch, obs, next, actions);
  nn::Gradients grads(params_);
  const IcmLoss loss = evaluate(obs, next, actions, &grads);
  if (!std::isfinite(loss.combined)) throw nn::NonFiniteError("world model: non-finite loss");
  nn::clip_global_norm(grads, config_.max_grad_norm);
  nn::optimizer_step(params_, grads, learning_rate);
  return loss;
}

}  // namespace curioflock
