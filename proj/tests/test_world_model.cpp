#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "curioflock/actor_critic.hpp"
#include "curioflock/nn/optimizer.hpp"
#include "curioflock/world_model.hpp"

namespace cf = curioflock;
namespace nn = curioflock::nn;
using cf::env::ObservationImage;

namespace {

ObservationImage noise_frame(int res, std::uint64_t seed) {
  ObservationImage img(res);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(d(rng));
  return img;
}

struct Batch {
  std::vector<ObservationImage> frames;
  std::vector<cf::TransitionView> views;
};

Batch make_batch(int n, std::uint64_t seed) {
  Batch b;
  for (int i = 0; i < n + 1; ++i) b.frames.push_back(noise_frame(64, seed * 100 + static_cast<std::uint64_t>(i)));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 2);
  for (int i = 0; i < n; ++i) {
    b.views.push_back({&b.frames[static_cast<std::size_t>(i)], cf::env::action_from_indices(d(rng), d(rng)),
                       &b.frames[static_cast<std::size_t>(i + 1)]});
  }
  return b;
}

}  // namespace

TEST(Icm, CombinedLossIsConvexMixture) {
  const Batch b = make_batch(4, 1);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    cf::WorldModelConfig cfg;
    cfg.alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    cf::WorldModel wm(cfg, 10 + static_cast<std::uint64_t>(k));
    const cf::IcmLoss l = wm.icm_loss(b.views);
    EXPECT_NEAR(l.combined, (1 - cfg.alpha) * l.inverse_loss + cfg.alpha * l.forward_loss, 1e-7);
    EXPECT_GE(l.inverse_loss, 0.0);
    EXPECT_GE(l.forward_loss, 0.0);
  }
}

TEST(Icm, ZeroRewardOnPerfectPrediction) {
  const Batch b = make_batch(3, 2);
  cf::WorldModel wm({}, 3);
  // All-zero weights: features are elu(0) = 0 and the forward head predicts 0.
  wm.parameters().zero("wm.");
  for (const auto& v : b.views) EXPECT_EQ(wm.intrinsic_reward(v), 0.0);
}

TEST(Icm, RewardIsLinearInEta) {
  const Batch b = make_batch(3, 4);
  cf::WorldModel wm({}, 7);
  const double lf = wm.icm_loss(b.views[0]).forward_loss;
  ASSERT_GT(lf, 0.0);
  for (double eta : {0.0, 0.01, 0.1, 0.25, 1.0}) {
    wm.set_eta(eta);
    EXPECT_NEAR(wm.intrinsic_reward(b.views[0]), eta * lf, 1e-12 + 1e-9 * lf);
  }
  EXPECT_THROW(wm.set_eta(-0.1), std::invalid_argument);
}

TEST(Icm, UniformInverseHeadGivesTwoLogThree) {
  const Batch b = make_batch(5, 5);
  cf::WorldModel wm({}, 11);
  wm.parameters().zero("wm.inv");
  EXPECT_NEAR(wm.icm_loss(b.views).inverse_loss, 2 * std::log(3.0), 1e-6);
}

// Forward loss recomputed from the public encoder and head stacks.
TEST(Icm, ForwardLossMatchesDirectComputation) {
  const Batch b = make_batch(2, 6);
  cf::WorldModel wm({}, 13);
  for (const auto& v : b.views) {
    const nn::Tensor x = wm.encode(*v.obs);
    const nn::Tensor xn = wm.encode(*v.next_obs);
    const auto oh = cf::env::one_hot(v.action);
    nn::Tensor in({1, cf::kFeatureDim + 6});
    for (int i = 0; i < cf::kFeatureDim; ++i) in[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
    for (int i = 0; i < 6; ++i) in[static_cast<std::size_t>(cf::kFeatureDim + i)] = oh[static_cast<std::size_t>(i)];
    const nn::Tensor pred = wm.forward_head().forward(wm.parameters(), in);
    double sq = 0.0;
    for (int i = 0; i < cf::kFeatureDim; ++i) {
      const double d = pred[static_cast<std::size_t>(i)] - xn[static_cast<std::size_t>(i)];
      sq += d * d;
    }
    EXPECT_NEAR(wm.icm_loss(v).forward_loss, 0.5 * sq / cf::kFeatureDim, 1e-7);
  }
}

TEST(Icm, RewardQueryDoesNotTouchParameters) {
  const Batch b = make_batch(2, 8);
  cf::WorldModel wm({}, 17);
  const auto h = wm.parameters().hash();
  wm.intrinsic_rewards(b.views);
  EXPECT_EQ(wm.parameters().hash(), h);
}

TEST(Icm, UpdatesReduceLossOnFixedBatch) {
  const Batch b = make_batch(8, 9);
  cf::WorldModel wm({}, 19);
  const double before = wm.icm_loss(b.views).combined;
  for (int i = 0; i < 30; ++i) wm.update(b.views, 1e-3);
  EXPECT_LT(wm.icm_loss(b.views).combined, before);
}

TEST(Icm, NonFiniteUpdateIsRejected) {
  const Batch b = make_batch(2, 10);
  cf::WorldModel wm({}, 23);
  wm.parameters().mutable_value("wm.fwd.2.dense.bias")[0] = std::numeric_limits<nn::Real>::quiet_NaN();
  const auto h = wm.parameters().hash();
  EXPECT_THROW(wm.update(b.views, 1e-3), nn::NonFiniteError);
  EXPECT_EQ(wm.parameters().hash(), h);
}

TEST(ActorCritic, SamplingFollowsProbabilities) {
  const auto out = cf::make_policy_output({0.7, 0.2, 0.1}, {0.1, 0.1, 0.8});
  nn::Rng rng(3);
  std::array<int, 3> tc{}, rc{};
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto s = cf::sample_action(out, rng);
    ++tc[static_cast<std::size_t>(cf::env::translation_index(s.action))];
    ++rc[static_cast<std::size_t>(cf::env::rotation_index(s.action))];
    const double lp = std::log(out.translation_probs[static_cast<std::size_t>(cf::env::translation_index(s.action))]) +
                      std::log(out.rotation_probs[static_cast<std::size_t>(cf::env::rotation_index(s.action))]);
    ASSERT_NEAR(s.log_prob, lp, 1e-9);
  }
  EXPECT_NEAR(tc[0] / double(n), 0.7, 0.02);
  EXPECT_NEAR(rc[2] / double(n), 0.8, 0.02);
}

TEST(ActorCritic, RejectsDegenerateProbabilities) {
  nn::Rng rng(1);
  EXPECT_THROW(cf::sample_action(cf::make_policy_output({0.5, 0.5, 0.5}, {1, 0, 0}), rng), std::domain_error);
  EXPECT_THROW(cf::sample_action(cf::make_policy_output({std::nan(""), 0.5, 0.5}, {1, 0, 0}), rng),
               std::domain_error);
  EXPECT_THROW(cf::sample_action(cf::make_policy_output({-0.1, 0.6, 0.5}, {1, 0, 0}), rng), std::domain_error);
}

TEST(ActorCritic, EntropyOfUniformHead) {
  EXPECT_NEAR(cf::categorical_entropy({1 / 3.0, 1 / 3.0, 1 / 3.0}), std::log(3.0), 1e-12);
  EXPECT_NEAR(cf::categorical_entropy({1.0, 0.0, 0.0}), 0.0, 1e-12);
}

TEST(ActorCritic, EvaluateMatchesSingleForward) {
  cf::ActorCritic ac(cf::EncoderSize::Small, 64, 5);
  const ObservationImage a = noise_frame(64, 1), b = noise_frame(64, 2);
  const ObservationImage* frames[] = {&a, &b};
  const nn::Tensor batch = cf::env::to_tensor(frames);
  const std::vector<cf::env::AgentAction> acts = {cf::env::action_from_indices(0, 1),
                                                  cf::env::action_from_indices(2, 2)};
  const auto ev = ac.evaluate_actions(batch, acts);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto po = ac.policy_forward(*frames[i]);
    const double lp = po.translation_log_probs[static_cast<std::size_t>(cf::env::translation_index(acts[i]))] +
                      po.rotation_log_probs[static_cast<std::size_t>(cf::env::rotation_index(acts[i]))];
    EXPECT_NEAR(ev.log_probs[i], lp, 1e-5);
    EXPECT_NEAR(ev.values[i], po.value, 1e-5);
    EXPECT_NEAR(po.translation_probs[0] + po.translation_probs[1] + po.translation_probs[2], 1.0, 1e-5);
  }
}

TEST(Icm, ZeroLearningRateReturnsLossesWithoutChange) {
  const Batch b = make_batch(2, 12);
  cf::WorldModel wm({}, 29);
  const auto h = wm.parameters().hash();
  const cf::IcmLoss l = wm.update(b.views, 0.0);
  EXPECT_GT(l.combined, 0.0);
  EXPECT_EQ(wm.parameters().hash(), h);
}

TEST(Icm, SingleTransitionForwardLossDecreases) {
  const Batch b = make_batch(1, 13);
  cf::WorldModel wm({}, 31);
  const double start = wm.icm_loss(b.views[0]).forward_loss;
  for (int i = 0; i < 100; ++i) wm.update(std::span<const cf::TransitionView>(&b.views[0], 1), 1e-3);
  EXPECT_LT(wm.icm_loss(b.views[0]).forward_loss, start);
}

TEST(Icm, DuplicatedBatchHasSameGradient) {
  const Batch b = make_batch(1, 14);
  cf::WorldModel wm({}, 37);
  const nn::Tensor one = cf::env::to_tensor(*b.views[0].obs);
  const nn::Tensor next = cf::env::to_tensor(*b.views[0].next_obs);
  const ObservationImage* o3[] = {b.views[0].obs, b.views[0].obs, b.views[0].obs};
  const ObservationImage* n3[] = {b.views[0].next_obs, b.views[0].next_obs, b.views[0].next_obs};
  const std::vector<cf::env::AgentAction> a1(1, b.views[0].action), a3(3, b.views[0].action);
  nn::Gradients g1(wm.parameters()), g3(wm.parameters());
  wm.evaluate(one, next, a1, &g1);
  wm.evaluate(cf::env::to_tensor(o3), cf::env::to_tensor(n3), a3, &g3);
  for (std::size_t p = 0; p < g1.count(); ++p) {
    for (std::size_t i = 0; i < g1[p].size(); ++i) {
      ASSERT_NEAR(g1[p][i], g3[p][i], 1e-5 + 1e-3 * std::abs(g1[p][i]));
    }
  }
}

TEST(Icm, EncodingIsDeterministic) {
  cf::WorldModel wm({}, 41);
  const ObservationImage f = noise_frame(64, 77);
  const nn::Tensor a = wm.encode(f);
  EXPECT_EQ(a.size(), static_cast<std::size_t>(cf::kFeatureDim));
  EXPECT_EQ(a, wm.encode(f));
  EXPECT_TRUE(a.all_finite());
}

TEST(ActorCritic, CertainHeadAlwaysChosen) {
  const auto out = cf::make_policy_output({1, 0, 0}, {0, 0, 1});
  nn::Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto s = cf::sample_action(out, rng);
    ASSERT_EQ(s.action, cf::env::action_from_indices(0, 2));
    ASSERT_EQ(s.log_prob, 0.0);
  }
}

TEST(ActorCritic, UniformHeadsLogProbAndEntropy) {
  const double third = 1.0 / 3.0;
  const auto out = cf::make_policy_output({third, third, third}, {third, third, third});
  nn::Rng rng(2);
  const auto s = cf::sample_action(out, rng);
  EXPECT_NEAR(s.log_prob, -2 * std::log(3.0), 1e-9);
  EXPECT_NEAR(s.entropy, 2 * std::log(3.0), 1e-9);

  cf::ActorCritic ac(cf::EncoderSize::Small, 64, 3);
  ac.parameters().zero("actor.");
  const ObservationImage f = noise_frame(64, 5);
  const std::vector<cf::env::AgentAction> acts = {cf::env::action_from_indices(1, 0)};
  const auto ev = ac.evaluate_actions(cf::env::to_tensor(f), acts);
  EXPECT_NEAR(ev.log_probs[0], -2 * std::log(3.0), 1e-6);
  EXPECT_NEAR(ev.entropies[0], 2 * std::log(3.0), 1e-6);
}

TEST(ActorCritic, EmpiricalFrequenciesWithinThreeSigma) {
  const std::array<double, 3> probs = {0.5, 0.3, 0.2};
  const auto out = cf::make_policy_output(probs, probs);
  nn::Rng rng(99);
  const int n = 10000;
  std::array<int, 3> tc{}, rc{};
  for (int i = 0; i < n; ++i) {
    const auto s = cf::sample_action(out, rng);
    ++tc[static_cast<std::size_t>(cf::env::translation_index(s.action))];
    ++rc[static_cast<std::size_t>(cf::env::rotation_index(s.action))];
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const double sigma = std::sqrt(n * probs[k] * (1 - probs[k]));
    EXPECT_LE(std::abs(tc[k] - n * probs[k]), 3 * sigma);
    EXPECT_LE(std::abs(rc[k] - n * probs[k]), 3 * sigma);
  }
}

TEST(ActorCritic, SampledLogProbMatchesEvaluation) {
  cf::ActorCritic ac(cf::EncoderSize::Small, 64, 17);
  nn::Rng rng(4);
  for (int k = 0; k < 5; ++k) {
    const ObservationImage f = noise_frame(64, 100 + static_cast<std::uint64_t>(k));
    const auto s = cf::sample_action(ac.policy_forward(f), rng);
    const std::vector<cf::env::AgentAction> acts = {s.action};
    const auto ev = ac.evaluate_actions(cf::env::to_tensor(f), acts);
    EXPECT_NEAR(ev.log_probs[0], s.log_prob, 1e-6);
    const double h = ev.entropies[0];
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 2 * std::log(3.0) + 1e-9);
  }
}
