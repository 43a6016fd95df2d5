#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "curioflock/nn/optimizer.hpp"
#include "curioflock/ppo.hpp"

namespace cf = curioflock;
namespace nn = curioflock::nn;
namespace env = curioflock::env;

namespace {

// A_t as the explicit double sum over TD residuals, cut at episode ends.
std::vector<double> gae_double_sum(const std::vector<double>& r, const std::vector<double>& v,
                                   const std::vector<std::uint8_t>& d, double bootstrap, double g, double l) {
  const std::size_t n = r.size();
  auto value_after = [&](std::size_t k) { return k + 1 < n ? v[k + 1] : bootstrap; };
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = t; k < n; ++k) {
      double w = 1.0;
      bool cut = false;
      for (std::size_t j = t; j < k; ++j) {
        if (d[j]) cut = true;
        w *= g * l;
      }
      if (cut) break;
      const double delta = r[k] + (d[k] ? 0.0 : g * value_after(k)) - v[k];
      adv[t] += w * delta;
    }
  }
  return adv;
}

// For sequences without episode ends: the lambda-weighted mean of n-step
// advantage estimates, the last one taking the remaining weight.
std::vector<double> gae_nstep_mixture(const std::vector<double>& r, const std::vector<double>& v, double bootstrap,
                                      double g, double l) {
  const std::size_t n = r.size();
  std::vector<double> adv(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t horizon = n - t;
    double total = 0.0;
    for (std::size_t k = 1; k <= horizon; ++k) {
      double ret = 0.0;
      for (std::size_t j = 0; j < k; ++j) ret += std::pow(g, double(j)) * r[t + j];
      const double tail = t + k < n ? v[t + k] : bootstrap;
      const double a_k = ret + std::pow(g, double(k)) * tail - v[t];
      const double w = k < horizon ? (1 - l) * std::pow(l, double(k - 1)) : std::pow(l, double(horizon - 1));
      total += w * a_k;
    }
    adv[t] = total;
  }
  return adv;
}

cf::Transition bare(const cf::FramePtr& f) {
  cf::Transition t;
  t.obs = f;
  t.next_obs = f;
  return t;
}

env::ObservationImage frame(std::uint8_t fill) {
  env::ObservationImage f(64);
  for (auto& p : f.pixels) p = fill;
  return f;
}

}  // namespace

TEST(Reward, ComposesMetabolicAndCuriosity) {
  const env::AgentAction fwd = env::action_from_indices(0, 2);
  const env::AgentAction back = env::action_from_indices(1, 2);
  EXPECT_NEAR(cf::compose_reward(env::metabolic_cost(fwd), 0.05), 0.049, 1e-12);
  EXPECT_EQ(cf::compose_reward(env::metabolic_cost(env::AgentAction{}), 0.0), 0.0);
  EXPECT_NEAR(cf::compose_reward(env::metabolic_cost(back), 0.002), -0.008, 1e-12);
  EXPECT_THROW(cf::compose_reward(0.1, 0.0), std::invalid_argument);
  EXPECT_THROW(cf::compose_reward(0.0, -0.1), std::invalid_argument);
}

TEST(Gae, MatchesDoubleSumOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> len(1, 32);
  std::bernoulli_distribution done(0.1);
  const double g = 0.99, l = 0.95;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = static_cast<std::size_t>(len(rng));
    std::vector<double> r(n), v(n);
    std::vector<std::uint8_t> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = u(rng);
      v[i] = u(rng);
      d[i] = done(rng) ? 1 : 0;
    }
    const double boot = u(rng);
    const auto res = cf::compute_gae(r, v, d, boot, g, l);
    const auto oracle = gae_double_sum(r, v, d, boot, g, l);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_NEAR(res.advantages[i], oracle[i], 1e-6) << "trial " << trial << " t " << i;
      ASSERT_NEAR(res.returns[i], oracle[i] + v[i], 1e-6);
    }
  }
}

TEST(Gae, MatchesNStepMixtureWithoutEpisodeEnds) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 32);
    std::vector<double> r(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = u(rng);
      v[i] = u(rng);
    }
    const std::vector<std::uint8_t> d(n, 0);
    const double boot = u(rng);
    const auto res = cf::compute_gae(r, v, d, boot, 0.9, 0.8);
    const auto oracle = gae_nstep_mixture(r, v, boot, 0.9, 0.8);
    for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(res.advantages[i], oracle[i], 1e-9);
  }
}

TEST(Gae, HandCases) {
  const std::vector<double> one_r = {1.0}, one_v = {0.0};
  const std::vector<std::uint8_t> term = {1};
  const auto single = cf::compute_gae(one_r, one_v, term, 123.0, 0.99, 0.95);
  EXPECT_DOUBLE_EQ(single.advantages[0], 1.0);
  EXPECT_DOUBLE_EQ(single.returns[0], 1.0);

  // lambda = 0: one-step TD residuals.
  const std::vector<double> r = {1.0, 0.0, 2.0}, v = {0.5, 1.0, -1.0};
  const std::vector<std::uint8_t> d = {0, 0, 0};
  const auto td = cf::compute_gae(r, v, d, 3.0, 0.5, 0.0);
  EXPECT_DOUBLE_EQ(td.advantages[0], 1.0 + 0.5 * 1.0 - 0.5);
  EXPECT_DOUBLE_EQ(td.advantages[1], 0.0 + 0.5 * -1.0 - 1.0);
  EXPECT_DOUBLE_EQ(td.advantages[2], 2.0 + 0.5 * 3.0 + 1.0);

  // Constant reward over a five-step window.
  const std::vector<double> ones(5, 1.0), zeros(5, 0.0);
  const std::vector<std::uint8_t> open(5, 0);
  const auto c = cf::compute_gae(ones, zeros, open, 0.0, 0.99, 0.95);
  double a0 = 0.0;
  for (int k = 0; k < 5; ++k) a0 += std::pow(0.99 * 0.95, k);
  EXPECT_NEAR(c.advantages[0], a0, 1e-6);

  EXPECT_THROW(cf::compute_gae({}, {}, {}, 0.0, 0.99, 0.95), std::invalid_argument);
  EXPECT_THROW(cf::compute_gae(r, one_v, d, 0.0, 0.99, 0.95), std::invalid_argument);
}

TEST(Surrogate, ClipsRatio) {
  EXPECT_DOUBLE_EQ(cf::clipped_surrogate(1.5, 1.0, 0.2), 1.2);
  EXPECT_DOUBLE_EQ(cf::clipped_surrogate(1.0, 0.7, 0.2), 0.7);
  EXPECT_DOUBLE_EQ(cf::clipped_surrogate(0.5, -1.0, 0.2), -0.8);
  EXPECT_DOUBLE_EQ(cf::clipped_surrogate(1.5, -1.0, 0.2), -1.5);
}

TEST(PpoLoss, UnitRatioAndEntropyBonus) {
  cf::ActorCritic ac(cf::EncoderSize::Small, 64, 1);
  ac.parameters().zero("actor.");
  const env::ObservationImage a = frame(10), b = frame(200);
  const env::ObservationImage* frames[] = {&a, &b};
  const nn::Tensor obs = env::to_tensor(frames);
  const std::vector<env::AgentAction> acts = {env::action_from_indices(0, 0), env::action_from_indices(2, 1)};
  const double lp = -2 * std::log(3.0);
  const std::vector<double> old_lp = {lp, lp}, adv = {0.3, 0.9}, ret = {0.0, 0.0};
  cf::PpoConfig cfg;
  cfg.normalize_advantages = false;
  cfg.entropy_beta = 0.0;
  const auto plain = cf::ppo_minibatch_loss(ac, obs, acts, old_lp, adv, ret, cfg, nullptr);
  EXPECT_NEAR(plain.surrogate, 0.6, 1e-6);
  EXPECT_EQ(plain.clip_fraction, 0.0);
  EXPECT_NEAR(plain.entropy, 2 * std::log(3.0), 1e-6);
  cfg.entropy_beta = 0.01;
  const auto bonus = cf::ppo_minibatch_loss(ac, obs, acts, old_lp, adv, ret, cfg, nullptr);
  // The objective gains beta * 2 ln 3, so the minimized loss drops by it.
  EXPECT_NEAR(plain.total - bonus.total, 0.01 * 2 * std::log(3.0), 1e-7);
}

TEST(PpoLoss, ClipFractionCountsOutOfRangeRatios) {
  cf::ActorCritic ac(cf::EncoderSize::Small, 64, 1);
  ac.parameters().zero("actor.");
  const env::ObservationImage a = frame(10);
  const env::ObservationImage* frames[] = {&a, &a};
  const std::vector<env::AgentAction> acts(2, env::AgentAction{});
  const double lp = -2 * std::log(3.0);
  const std::vector<double> old_lp = {lp - std::log(1.5), lp}, adv = {1.0, 1.0}, ret = {0.0, 0.0};
  cf::PpoConfig cfg;
  cfg.normalize_advantages = false;
  const auto l = cf::ppo_minibatch_loss(ac, env::to_tensor(frames), acts, old_lp, adv, ret, cfg, nullptr);
  EXPECT_NEAR(l.surrogate, (1.2 + 1.0) / 2, 1e-6);
  EXPECT_DOUBLE_EQ(l.clip_fraction, 0.5);
}

TEST(RolloutBuffer, CapacityAndFinish) {
  cf::RolloutBuffer buf(3);
  auto f = std::make_shared<const env::ObservationImage>(frame(0));
  for (int i = 0; i < 3; ++i) {
    cf::Transition t{f, f, env::AgentAction{}, 0.0, 0.5, -0.001, 0.01 * i, i == 2};
    buf.push(t);
  }
  EXPECT_TRUE(buf.full());
  EXPECT_THROW(buf.push(bare(f)), std::logic_error);
  EXPECT_THROW(cf::RolloutBuffer(0), std::invalid_argument);
  buf.finish(0.0, 0.99, 0.95);
  ASSERT_TRUE(buf.finished());
  std::vector<double> r, v;
  std::vector<std::uint8_t> d;
  for (const auto& t : buf.transitions()) {
    r.push_back(t.metabolic + t.curiosity);
    v.push_back(t.value);
    d.push_back(t.done ? 1 : 0);
  }
  const auto oracle = gae_double_sum(r, v, d, 0.0, 0.99, 0.95);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(buf.advantages()[i], oracle[i], 1e-12);
  buf.clear();
  EXPECT_EQ(buf.size(), 0);
  EXPECT_FALSE(buf.finished());
}

TEST(PpoUpdate, NonFiniteLossRestoresParameters) {
  cf::ActorCritic ac(cf::EncoderSize::Small, 64, 3);
  cf::PpoConfig cfg;
  cfg.buffer_size = 4;
  cfg.batch_size = 2;
  cf::RolloutBuffer buf(4);
  auto f = std::make_shared<const env::ObservationImage>(frame(30));
  for (int i = 0; i < 4; ++i) buf.push(cf::Transition{f, f, env::AgentAction{}, -2.0, 0.0, 0.0, 0.1, false});
  buf.finish(0.0, 0.99, 0.95);
  const std::string out_bias = ac.output_layer_prefix() + "bias";
  ac.parameters().mutable_value(out_bias)[6] = std::numeric_limits<nn::Real>::infinity();
  const auto h = ac.parameters().hash();
  nn::Rng rng(1);
  EXPECT_THROW(cf::ppo_update(buf, ac, cfg, 1e-3, rng), nn::NonFiniteError);
  EXPECT_EQ(ac.parameters().hash(), h);
}

TEST(PpoUpdate, RequiresFullFinishedBuffer) {
  cf::ActorCritic ac(cf::EncoderSize::Small, 64, 3);
  cf::PpoConfig cfg;
  cf::RolloutBuffer buf(2);
  auto f = std::make_shared<const env::ObservationImage>(frame(30));
  buf.push(bare(f));
  nn::Rng rng(1);
  EXPECT_THROW(cf::ppo_update(buf, ac, cfg, 1e-3, rng), std::logic_error);
  buf.push(bare(f));
  EXPECT_THROW(cf::ppo_update(buf, ac, cfg, 1e-3, rng), std::logic_error);
}

TEST(PpoConfig, Validation) {
  cf::PpoConfig c;
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.gamma = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

namespace {

env::World small_world(int n) {
  env::WorldSpec spec;
  spec.kind = env::WorldKind::Simple;
  return env::World(spec, n, 64);
}

}  // namespace

TEST(Train, TenStepsGiveTenRecordsAndNoUpdate) {
  auto world = small_world(1);
  std::vector<cf::Agent> agents;
  agents.emplace_back(0, cf::EncoderSize::Small, cf::WorldModelConfig{}, cf::PpoConfig{}, 5);
  cf::TrainOptions opt;
  opt.episodes = 1;
  opt.episode_length = 10;
  std::ostringstream csv;
  opt.step_csv = &csv;
  const auto before = agents[0].actor.parameters().hash();
  const auto log = cf::train(agents, world, opt);
  EXPECT_EQ(log.step_records, 10);
  EXPECT_TRUE(log.updates.empty());
  EXPECT_EQ(agents[0].buffer.size(), 10);
  EXPECT_EQ(agents[0].actor.parameters().hash(), before);
  ASSERT_EQ(log.episodes.size(), 1u);
  EXPECT_TRUE(std::isnan(log.episodes[0].nni));

  // Every logged reward splits into the action's metabolic cost plus a
  // non-negative curiosity term.
  std::istringstream in(csv.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    int ep, step, id, t, r;
    double rm, rc;
    char c;
    std::istringstream row(line);
    row >> ep >> c >> step >> c >> id >> c >> rm >> c >> rc >> c >> t >> c >> r;
    ASSERT_FALSE(row.fail()) << line;
    EXPECT_DOUBLE_EQ(rm, env::metabolic_cost(env::action_from_indices(t, r)));
    EXPECT_GE(rc, 0.0);
    ++rows;
  }
  EXPECT_EQ(rows, 10);
}

TEST(Train, UpdatesFireWhenBufferFillsWithDecayingRate) {
  auto world = small_world(2);
  cf::PpoConfig ppo;
  ppo.buffer_size = 8;
  ppo.batch_size = 4;
  ppo.total_training_steps = 20;
  std::vector<cf::Agent> agents;
  for (int i = 0; i < 2; ++i) agents.emplace_back(i, cf::EncoderSize::Small, cf::WorldModelConfig{}, ppo, 10 + i);
  cf::TrainOptions opt;
  opt.episodes = 2;
  opt.episode_length = 10;
  opt.ppo = ppo;
  const auto log = cf::train(agents, world, opt);
  // 20 steps per agent with a buffer of 8: two updates each.
  ASSERT_EQ(log.updates.size(), 4u);
  std::vector<double> rates;
  for (const auto& u : log.updates) {
    if (u.agent_id == 0) rates.push_back(u.learning_rate);
    EXPECT_EQ(u.ppo.minibatches, 3 * 2);
    EXPECT_TRUE(std::isfinite(u.world_model.combined));
  }
  ASSERT_EQ(rates.size(), 2u);
  EXPECT_DOUBLE_EQ(rates[0], 1e-3);
  EXPECT_DOUBLE_EQ(rates[1], 1e-3 * (1.0 - 8.0 / 20.0));
  EXPECT_EQ(agents[0].updates, 2);
  EXPECT_EQ(log.episodes.size(), 2u);
  EXPECT_TRUE(std::isfinite(log.episodes[1].nni));
}

TEST(Train, SameSeedsSameOutcome) {
  auto run = [] {
    auto world = small_world(2);
    cf::PpoConfig ppo;
    ppo.buffer_size = 6;
    ppo.batch_size = 3;
    std::vector<cf::Agent> agents;
    for (int i = 0; i < 2; ++i) agents.emplace_back(i, cf::EncoderSize::Small, cf::WorldModelConfig{}, ppo, 3 + i);
    cf::TrainOptions opt;
    opt.episodes = 1;
    opt.episode_length = 8;
    opt.ppo = ppo;
    opt.spawn_seed = 9;
    std::uint64_t h = 0;
    opt.on_episode = [&](const cf::EpisodeSummary&, const curioflock::analysis::EpisodeLog& l) { h = l.hash(); };
    cf::train(agents, world, opt);
    return std::make_pair(h, agents[1].actor.parameters().hash() ^ agents[1].world_model.parameters().hash());
  };
  EXPECT_EQ(run(), run());
}

TEST(Train, RejectsMismatchedAgents) {
  auto world = small_world(2);
  std::vector<cf::Agent> agents;
  agents.emplace_back(0, cf::EncoderSize::Small, cf::WorldModelConfig{}, cf::PpoConfig{}, 1);
  EXPECT_THROW(cf::train(agents, world, cf::TrainOptions{}), std::invalid_argument);
}
