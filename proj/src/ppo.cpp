#include "curioflock/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "curioflock/analysis/nni.hpp"
#include "curioflock/nn/optimizer.hpp"

namespace curioflock {

using nn::Real;
using nn::Tensor;

void PpoConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("ppo config: " + m); };
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must lie in [0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0, 1]");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) fail("clip_epsilon must lie in (0, 1)");
  if (epochs_per_update < 1) fail("epochs_per_update must be >= 1");
  if (world_model_epochs < 0) fail("world_model_epochs must be >= 0");
  if (!(learning_rate >= 0.0)) fail("learning_rate must be >= 0");
  if (total_training_steps < 1) fail("total_training_steps must be >= 1");
  if (buffer_size < 1 || batch_size < 1 || batch_size > buffer_size) fail("need 1 <= batch_size <= buffer_size");
  if (!(entropy_beta >= 0.0) || !(value_coef >= 0.0)) fail("loss coefficients must be >= 0");
  if (!(max_grad_norm > 0.0)) fail("max_grad_norm must be positive");
}

double compose_reward(double metabolic, double curiosity) {
  if (!(metabolic <= 0.0)) throw std::invalid_argument("metabolic cost must be <= 0");
  if (!(curiosity >= 0.0)) throw std::invalid_argument("curiosity reward must be >= 0");
  return metabolic + curiosity;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap_value, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (n == 0) throw std::invalid_argument("compute_gae: empty sequence");
  if (values.size() != n || dones.size() != n) throw std::invalid_argument("compute_gae: sequence lengths differ");
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = bootstrap_value;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    r.advantages[k] = next_adv;
    r.returns[k] = next_adv + values[k];
    next_value = values[k];
  }
  return r;
}

double clipped_surrogate(double ratio, double advantage, double clip_epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

RolloutBuffer::RolloutBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("rollout buffer capacity must be >= 1");
  data_.reserve(static_cast<std::size_t>(capacity));
}

void RolloutBuffer::push(Transition t) {
  if (full()) throw std::logic_error("rollout buffer is full");
  if (!t.obs || !t.next_obs) throw std::invalid_argument("transition without frames");
  data_.push_back(std::move(t));
  advantages_.clear();
  returns_.clear();
}

void RolloutBuffer::clear() {
  data_.clear();
  advantages_.clear();
  returns_.clear();
}

void RolloutBuffer::finish(double bootstrap_value, double gamma, double lambda) {
  std::vector<double> rewards, values;
  std::vector<std::uint8_t> dones;
  for (const auto& t : data_) {
    rewards.push_back(compose_reward(t.metabolic, t.curiosity));
    values.push_back(t.value);
    dones.push_back(t.done ? 1 : 0);
  }
  GaeResult g = compute_gae(rewards, values, dones, bootstrap_value, gamma, lambda);
  advantages_ = std::move(g.advantages);
  returns_ = std::move(g.returns);
}

MinibatchLoss ppo_minibatch_loss(const ActorCritic& ac, const Tensor& obs, std::span<const env::AgentAction> actions,
                                 std::span<const double> old_log_probs, std::span<const double> advantages,
                                 std::span<const double> returns, const PpoConfig& config, nn::Gradients* grads) {
  const std::size_t n = actions.size();
  if (n == 0 || static_cast<std::size_t>(obs.dim(0)) != n || old_log_probs.size() != n || advantages.size() != n ||
      returns.size() != n) {
    throw nn::ShapeError("ppo minibatch: inconsistent batch sizes");
  }
  std::vector<double> adv(advantages.begin(), advantages.end());
  if (config.normalize_advantages && n > 1) {
    const double m = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double a : adv) var += (a - m) * (a - m);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (double& a : adv) a = (a - m) / (sd + 1e-8);
  }

  nn::Tape tape;
  const Tensor out = ac.stack().forward(ac.parameters(), obs, grads ? &tape : nullptr);
  Tensor dout(out.shape());
  const double inv_n = 1.0 / static_cast<double>(n);
  MinibatchLoss loss;
  int clipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int row_i = static_cast<int>(i);
    const PolicyOutput po = decode_policy_row(out.row(row_i));
    const int ti = env::translation_index(actions[i]);
    const int ri = env::rotation_index(actions[i]);
    const double logp = po.translation_log_probs[static_cast<std::size_t>(ti)] +
                        po.rotation_log_probs[static_cast<std::size_t>(ri)];
    const double ratio = std::exp(logp - old_log_probs[i]);
    const double a = adv[i];
    const double surr = clipped_surrogate(ratio, a, config.clip_epsilon);
    if (std::abs(ratio - 1.0) > config.clip_epsilon) ++clipped;
    const double h = categorical_entropy(po.translation_probs) + categorical_entropy(po.rotation_probs);
    const double verr = po.value - returns[i];
    loss.surrogate += surr * inv_n;
    loss.entropy += h * inv_n;
    loss.value_loss += verr * verr * inv_n;
    if (!grads) continue;
    auto g = dout.row(row_i);
    // d(-surr)/d logp: the unclipped branch carries ratio * A, the clipped one nothing.
    const double dsurr = (ratio * a <= surr) ? ratio * a : 0.0;
    g[static_cast<std::size_t>(ti)] += static_cast<Real>(-dsurr * inv_n);
    g[static_cast<std::size_t>(3 + ri)] += static_cast<Real>(-dsurr * inv_n);
    // d(-beta H)/d l_j = beta * p_j * (l_j + 1) within each head.
    for (std::size_t j = 0; j < 3; ++j) {
      g[j] += static_cast<Real>(config.entropy_beta * inv_n * po.translation_probs[j] *
                                (po.translation_log_probs[j] + 1.0));
      g[3 + j] += static_cast<Real>(config.entropy_beta * inv_n * po.rotation_probs[j] *
                                    (po.rotation_log_probs[j] + 1.0));
    }
    g[6] = static_cast<Real>(config.value_coef * 2.0 * verr * inv_n);
  }
  loss.clip_fraction = static_cast<double>(clipped) * inv_n;
  loss.total = -loss.surrogate + config.value_coef * loss.value_loss - config.entropy_beta * loss.entropy;
  if (grads && std::isfinite(loss.total)) ac.stack().backward(tape, dout, *grads);
  return loss;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, nn::Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

Tensor frames_tensor(const std::vector<Transition>& data, std::span<const std::size_t> idx, bool next) {
  std::vector<const env::ObservationImage*> frames;
  frames.reserve(idx.size());
  for (std::size_t k : idx) frames.push_back(next ? data[k].next_obs.get() : data[k].obs.get());
  return env::to_tensor(frames);
}

}  // namespace

PpoReport ppo_update(const RolloutBuffer& buffer, ActorCritic& ac, const PpoConfig& config, double learning_rate,
                     nn::Rng& rng) {
  if (!buffer.full()) throw std::logic_error("ppo_update: buffer not full");
  if (!buffer.finished()) throw std::logic_error("ppo_update: advantages not computed");
  const nn::ParameterSet snapshot = ac.parameters();
  const auto& data = buffer.transitions();
  const std::size_t n = data.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  PpoReport report;
  try {
    for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
      const std::vector<std::size_t> order = shuffled_indices(n, rng);
      for (std::size_t start = 0; start < n; start += bs) {
        const std::size_t end = std::min(n, start + bs);
        std::span<const std::size_t> idx(order.data() + start, end - start);
        std::vector<env::AgentAction> actions;
        std::vector<double> old_lp, adv, ret;
        for (std::size_t k : idx) {
          actions.push_back(data[k].action);
          old_lp.push_back(data[k].log_prob);
          adv.push_back(buffer.advantages()[k]);
          ret.push_back(buffer.returns()[k]);
        }
        nn::Gradients grads(ac.parameters());
        const MinibatchLoss l =
            ppo_minibatch_loss(ac, frames_tensor(data, idx, false), actions, old_lp, adv, ret, config, &grads);
        if (!std::isfinite(l.total)) throw nn::NonFiniteError("ppo: non-finite loss");
        nn::clip_global_norm(grads, config.max_grad_norm);
        nn::optimizer_step(ac.parameters(), grads, learning_rate);
        report.policy_loss += -l.surrogate;
        report.value_loss += l.value_loss;
        report.entropy += l.entropy;
        report.clip_fraction += l.clip_fraction;
        ++report.minibatches;
      }
    }
  } catch (const nn::NonFiniteError&) {
    ac.parameters() = snapshot;
    throw;
  }
  const double k = report.minibatches > 0 ? 1.0 / report.minibatches : 0.0;
  report.policy_loss *= k;
  report.value_loss *= k;
  report.entropy *= k;
  report.clip_fraction *= k;
  return report;
}

IcmLoss world_model_update(const RolloutBuffer& buffer, WorldModel& wm, const PpoConfig& config, double learning_rate,
                           nn::Rng& rng) {
  const auto& data = buffer.transitions();
  const std::size_t n = data.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  IcmLoss mean;
  int batches = 0;
  for (int epoch = 0; epoch < config.world_model_epochs; ++epoch) {
    const std::vector<std::size_t> order = shuffled_indices(n, rng);
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t end = std::min(n, start + bs);
      std::vector<TransitionView> views;
      views.reserve(end - start);
      for (std::size_t p = start; p < end; ++p) {
        const Transition& t = data[order[p]];
        views.push_back(TransitionView{t.obs.get(), t.action, t.next_obs.get()});
      }
      const IcmLoss l = wm.update(views, learning_rate);
      mean.inverse_loss += l.inverse_loss;
      mean.forward_loss += l.forward_loss;
      mean.combined += l.combined;
      ++batches;
    }
  }
  if (batches > 0) {
    mean.inverse_loss /= batches;
    mean.forward_loss /= batches;
    mean.combined /= batches;
  }
  return mean;
}

Agent::Agent(int id_, EncoderSize actor_encoder, const WorldModelConfig& wm_config, const PpoConfig& ppo,
             std::uint64_t seed)
    : id(id_),
      actor(actor_encoder, wm_config.resolution, seed * 4 + 1),
      world_model(wm_config, seed * 4 + 2),
      buffer(ppo.buffer_size),
      rng(seed * 4 + 3) {}

void write_step_csv_header(std::ostream& out) {
  out << "episode,step,agent_id,R_m,R_c,action_translation,action_rotation\n";
}

TrainingLog train(std::vector<Agent>& agents, env::World& world, const TrainOptions& options) {
  if (agents.empty()) throw std::invalid_argument("train: no agents");
  if (static_cast<int>(agents.size()) != world.agent_count()) {
    throw std::invalid_argument("train: agent count does not match the world");
  }
  if (options.episodes < 0 || options.episode_length < 1) throw std::invalid_argument("train: bad schedule");
  const PpoConfig& cfg = options.ppo;
  cfg.validate();

  const env::WorldSpec& spec = world.spec();
  const analysis::AreaDescriptor area = spec.kind == env::WorldKind::RealisticArena
                                            ? analysis::AreaDescriptor::circle(spec.extent())
                                            : analysis::AreaDescriptor::square(spec.extent());
  const std::size_t n_agents = agents.size();
  env::Rng spawn_rng(options.spawn_seed);
  TrainingLog log;
  std::vector<FramePtr> frames(n_agents);
  std::vector<env::AgentAction> actions(n_agents);
  std::vector<SampledAction> sampled(n_agents);

  for (int ep = 0; ep < options.episodes; ++ep) {
    world.spawn_random(spawn_rng);
    {
      auto initial = world.render_all();
      for (std::size_t i = 0; i < n_agents; ++i) frames[i] = std::make_shared<env::ObservationImage>(std::move(initial[i]));
    }
    analysis::EpisodeLog poses(static_cast<int>(n_agents), area);
    EpisodeSummary summary;
    summary.episode = ep;
    summary.mean_metabolic.assign(n_agents, 0.0);
    summary.mean_curiosity.assign(n_agents, 0.0);
    std::vector<double> values(n_agents);

    for (int step = 0; step < options.episode_length; ++step) {
      for (std::size_t i = 0; i < n_agents; ++i) {
        const PolicyOutput po = agents[i].actor.policy_forward(*frames[i]);
        sampled[i] = sample_action(po, agents[i].rng);
        actions[i] = sampled[i].action;
        values[i] = po.value;
      }
      env::StepResult sr = world.step(actions);
      const bool done = step + 1 == options.episode_length;
      std::vector<analysis::Pose> tick;
      for (const auto& b : world.agents()) tick.push_back({b.x, b.y, b.heading});
      poses.add_tick(tick);

      for (std::size_t i = 0; i < n_agents; ++i) {
        Agent& ag = agents[i];
        FramePtr next = std::make_shared<env::ObservationImage>(std::move(sr.observations[i]));
        const double curiosity = ag.world_model.intrinsic_reward(TransitionView{frames[i].get(), actions[i], next.get()});
        const double metabolic = sr.metabolic[i];
        const double reward = compose_reward(metabolic, curiosity);
        if (reward != metabolic + curiosity) throw std::logic_error("reward is not R_m + R_c");
        summary.mean_metabolic[i] += metabolic / options.episode_length;
        summary.mean_curiosity[i] += curiosity / options.episode_length;
        if (options.step_csv) {
          *options.step_csv << ep << ',' << step << ',' << ag.id << ',' << metabolic << ',' << curiosity << ','
                            << env::translation_index(actions[i]) << ',' << env::rotation_index(actions[i]) << '\n';
        }
        ++log.step_records;
        ag.buffer.push(Transition{frames[i], next, actions[i], sampled[i].log_prob, values[i], metabolic, curiosity, done});
        ++ag.steps;
        if (ag.buffer.full()) {
          const double bootstrap = done ? 0.0 : ag.actor.policy_forward(*next).value;
          ag.buffer.finish(bootstrap, cfg.gamma, cfg.lambda);
          const double lr =
              nn::linear_lr(ag.steps - ag.buffer.size(), cfg.total_training_steps, cfg.learning_rate);
          UpdateRecord rec;
          rec.agent_id = ag.id;
          rec.episode = ep;
          rec.learning_rate = lr;
          rec.ppo = ppo_update(ag.buffer, ag.actor, cfg, lr, ag.rng);
          rec.world_model = world_model_update(ag.buffer, ag.world_model, cfg, lr, ag.rng);
          log.updates.push_back(rec);
          ag.buffer.clear();
          ++ag.updates;
        }
        frames[i] = std::move(next);
      }
    }
    summary.nni = n_agents >= 2 ? analysis::nearest_neighbor_index(poses).nni
                                : std::numeric_limits<double>::quiet_NaN();
    if (options.on_episode) options.on_episode(summary, poses);
    log.episodes.push_back(std::move(summary));
  }
  return log;
}

}  // namespace curioflock
