#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "curioflock/analysis/episode_log.hpp"
#include "curioflock/analysis/nni.hpp"
#include "curioflock/analysis/stats.hpp"

namespace an = curioflock::analysis;
using an::AreaDescriptor;
using an::EpisodeLog;
using an::Pose;

namespace {

// Brute force, kept separate from the library on purpose.
double oracle_mean_nn(const std::vector<Pose>& ps) {
  double sum = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ps.size(); ++j) {
      if (i == j) continue;
      const double dx = ps[i].x - ps[j].x, dy = ps[i].y - ps[j].y;
      best = std::min(best, std::sqrt(dx * dx + dy * dy));
    }
    sum += best;
  }
  return sum / static_cast<double>(ps.size());
}

std::vector<Pose> uniform_square(int n, double side, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-side / 2, side / 2);
  std::vector<Pose> ps(static_cast<std::size_t>(n));
  for (auto& p : ps) p = {u(rng), u(rng), 0.0};
  return ps;
}

// Composite Simpson on the t density from 0 to t.
double oracle_t_cdf(double t, double nu) {
  const double c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(nu * std::numbers::pi);
  auto f = [&](double x) { return c * std::pow(1 + x * x / nu, -(nu + 1) / 2); };
  const int n = 20000;
  const double h = t / n;
  double s = f(0) + f(t);
  for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4 : 2);
  return 0.5 + s * h / 3;
}

EpisodeLog one_tick(const std::vector<Pose>& ps, AreaDescriptor area) {
  EpisodeLog log(static_cast<int>(ps.size()), area);
  log.add_tick(ps);
  return log;
}

}  // namespace

TEST(Nni, ExpectedDistanceExamples) {
  EXPECT_NEAR(an::expected_random_nn_distance(10, 3600.0), 9.48683, 1e-5);
  EXPECT_DOUBLE_EQ(an::expected_random_nn_distance(4, 4.0), 0.5);
  const double a = an::expected_random_nn_distance(7, 100.0);
  EXPECT_NEAR(an::expected_random_nn_distance(7, 200.0), a * std::sqrt(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(AreaDescriptor::square(60).area(), 3600.0);
  EXPECT_NEAR(AreaDescriptor::circle(21).area(), std::numbers::pi * 10.5 * 10.5, 1e-9);
}

TEST(Nni, CoincidentPointsGiveZero) {
  const std::vector<Pose> ps(5, Pose{3.0, -2.0, 0.0});
  EXPECT_EQ(an::nearest_neighbor_index(one_tick(ps, AreaDescriptor::square(60))).nni, 0.0);
}

TEST(Nni, TwoAgentsAtKnownDistance) {
  for (double d : {0.5, 3.0, 17.0}) {
    const std::vector<Pose> ps{{0, 0, 0}, {d * 0.6, d * 0.8, 1}};
    const auto r = an::nearest_neighbor_index(one_tick(ps, AreaDescriptor::square(60)));
    EXPECT_NEAR(r.mean_observed_nn_distance, d, 1e-12);
    EXPECT_NEAR(r.nni, d / (1.0 / (2.0 * std::sqrt(2.0 / 3600.0))), 1e-12);
  }
}

TEST(Nni, MatchesBruteForceAndAveragesTicks) {
  std::mt19937_64 rng(5);
  EpisodeLog log(8, AreaDescriptor::square(60));
  double sum = 0.0;
  for (int t = 0; t < 30; ++t) {
    const auto ps = uniform_square(8, 60, rng);
    EXPECT_NEAR(an::mean_nearest_neighbor_distance(ps), oracle_mean_nn(ps), 1e-12);
    sum += oracle_mean_nn(ps);
    log.add_tick(ps);
  }
  const auto r = an::nearest_neighbor_index(log);
  EXPECT_NEAR(r.mean_observed_nn_distance, sum / 30, 1e-12);
  EXPECT_NEAR(r.nni, r.mean_observed_nn_distance / r.expected_random_nn_distance, 1e-12);
}

// Uniform placement lands near the Monte-Carlo expectation, which sits a bit
// above 1 because there is no edge correction.
TEST(Nni, UniformPlacementNearMonteCarloExpectation) {
  std::mt19937_64 orng(1234);
  double oracle = 0.0;
  const int samples = 40000;
  for (int k = 0; k < samples; ++k) oracle += oracle_mean_nn(uniform_square(10, 60, orng));
  oracle /= samples * (1.0 / (2.0 * std::sqrt(10.0 / 3600.0)));
  EXPECT_GT(oracle, 1.0);

  std::mt19937_64 rng(99);
  double total = 0.0;
  for (int e = 0; e < 50; ++e) {
    EpisodeLog log(10, AreaDescriptor::square(60));
    for (int t = 0; t < 100; ++t) log.add_tick(uniform_square(10, 60, rng));
    total += an::nearest_neighbor_index(log).nni;
  }
  EXPECT_NEAR(total / 50, oracle, 0.1);
}

TEST(Nni, InvariantUnderRigidMotionAndScale) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 20; ++k) {
    const auto ps = uniform_square(6, 60, rng);
    const double base = an::nearest_neighbor_index(one_tick(ps, AreaDescriptor::square(60))).nni;
    const double th = 0.3 * k;
    std::vector<Pose> moved = ps, scaled = ps;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      moved[i].x = std::cos(th) * ps[i].x - std::sin(th) * ps[i].y + 13.0;
      moved[i].y = std::sin(th) * ps[i].x + std::cos(th) * ps[i].y - 4.0;
      scaled[i].x = 2.5 * ps[i].x;
      scaled[i].y = 2.5 * ps[i].y;
    }
    EXPECT_NEAR(an::nearest_neighbor_index(one_tick(moved, AreaDescriptor::square(60))).nni, base, 1e-10);
    EXPECT_NEAR(an::nearest_neighbor_index(one_tick(scaled, AreaDescriptor::square(150))).nni, base, 1e-10);
  }
}

TEST(Nni, RejectsBadInput) {
  EXPECT_THROW(an::expected_random_nn_distance(1, 100.0), std::invalid_argument);
  EXPECT_THROW(an::expected_random_nn_distance(4, 0.0), std::invalid_argument);
  EXPECT_THROW(an::nearest_neighbor_index(EpisodeLog(3, AreaDescriptor::square(60))), std::invalid_argument);
}

TEST(Preference, ScoresExamples) {
  const an::Point imp{-5, 0}, nov{5, 0};
  EpisodeLog glued(1, AreaDescriptor::square(20));
  EpisodeLog middle(1, AreaDescriptor::square(20));
  EpisodeLog mixed(1, AreaDescriptor::square(20));
  for (int t = 0; t < 100; ++t) {
    const Pose g{-4.0, 0.5, 0.0}, m{0.0, 3.0, 0.0};
    glued.add_tick(std::vector<Pose>{g});
    middle.add_tick(std::vector<Pose>{m});
    mixed.add_tick(std::vector<Pose>{t < 60 ? Pose{-2, 0, 0} : Pose{2, 0, 0}});
  }
  EXPECT_DOUBLE_EQ(an::preference_score(glued, imp, nov), 1.0);
  EXPECT_DOUBLE_EQ(an::preference_score(middle, imp, nov), 0.5);
  EXPECT_DOUBLE_EQ(an::preference_score(mixed, imp, nov), 0.6);
}

TEST(Preference, SwappingObjectsComplements) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-8, 8);
  EpisodeLog log(1, AreaDescriptor::square(20));
  for (int t = 0; t < 500; ++t) log.add_tick(std::vector<Pose>{{u(rng), u(rng), 0.0}});
  const an::Point a{-5, 1}, b{4, -2};
  EXPECT_NEAR(an::preference_score(log, a, b) + an::preference_score(log, b, a), 1.0, 1e-12);
  EXPECT_THROW(an::preference_score(EpisodeLog(1, AreaDescriptor::square(20)), a, b), std::invalid_argument);
}

TEST(Stats, StudentTCdfMatchesIntegration) {
  for (double df : {1.0, 10.0, 98.0}) {
    for (double t : {-4.0, -1.5, -0.2, 0.0, 0.7, 2.0, 3.3}) {
      EXPECT_NEAR(an::student_t_cdf(t, df), oracle_t_cdf(t, df), 1e-6) << df << " " << t;
    }
  }
  EXPECT_THROW(an::student_t_cdf(1.0, 0.0), std::invalid_argument);
}

TEST(Stats, IndependentTextbookPair) {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 3, 4, 5};
  const auto r = an::independent_t_test(a, b);
  EXPECT_DOUBLE_EQ(r.df, 6.0);
  EXPECT_NEAR(r.t, -1.0 / std::sqrt(5.0 / 6.0), 1e-12);
  EXPECT_NEAR(r.cohens_d, -1.0 / std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_NEAR(r.p, 2.0 * oracle_t_cdf(r.t, 6.0), 1e-6);
  const auto s = an::independent_t_test(b, a);
  EXPECT_DOUBLE_EQ(s.t, -r.t);
  EXPECT_DOUBLE_EQ(s.p, r.p);
  EXPECT_DOUBLE_EQ(s.cohens_d, -r.cohens_d);
}

TEST(Stats, IdenticalSamplesAndDegrees) {
  const std::vector<double> a{0.9, 1.1, 1.3, 0.7};
  const auto r = an::independent_t_test(a, a);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(r.p, 1.0);
  EXPECT_EQ(r.cohens_d, 0.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x(50), y(50), z(35);
  for (auto& v : x) v = n(rng);
  for (auto& v : y) v = n(rng) + 0.3;
  for (auto& v : z) v = n(rng);
  const auto xy = an::independent_t_test(x, y);
  EXPECT_DOUBLE_EQ(xy.df, 98.0);
  EXPECT_GT(xy.p, 0.0);
  EXPECT_LE(xy.p, 1.0);
  EXPECT_DOUBLE_EQ(an::one_sample_t_test(z, 0.0).df, 34.0);
}

TEST(Stats, OneSampleExample) {
  const std::vector<double> s{0.6, 0.7, 0.8};
  const auto r = an::one_sample_t_test(s, 0.5);
  EXPECT_DOUBLE_EQ(r.df, 2.0);
  EXPECT_NEAR(r.t, 0.2 / (0.1 / std::sqrt(3.0)), 1e-9);
  EXPECT_NEAR(r.p, 2.0 * (1.0 - oracle_t_cdf(r.t, 2.0)), 1e-6);
  EXPECT_NEAR(an::sample_sd(s), 0.1, 1e-12);
}

TEST(Stats, DegenerateSamples) {
  const std::vector<double> c{2, 2, 2}, d{3, 3, 3};
  EXPECT_THROW(an::independent_t_test(c, d), an::DegenerateSampleError);
  EXPECT_THROW(an::one_sample_t_test(c, 1.0), an::DegenerateSampleError);
  EXPECT_EQ(an::one_sample_t_test(c, 2.0).p, 1.0);
  EXPECT_THROW(an::independent_t_test(std::vector<double>{1.0}, d), std::invalid_argument);
  EXPECT_THROW(an::mean(std::vector<double>{}), std::invalid_argument);
}

TEST(EpisodeLogTest, CsvRoundTripAndHash) {
  std::mt19937_64 rng(8);
  EpisodeLog log(3, AreaDescriptor::circle(21));
  for (int t = 0; t < 40; ++t) {
    auto ps = uniform_square(3, 14, rng);
    ps[1].heading = 0.1 * t;
    log.add_tick(ps);
  }
  std::stringstream ss;
  log.write_csv(ss);
  const auto back = EpisodeLog::read_csv(ss);
  EXPECT_EQ(back, log);
  EXPECT_EQ(back.hash(), log.hash());

  EpisodeLog other = one_tick(uniform_square(3, 14, rng), AreaDescriptor::circle(21));
  EXPECT_NE(other.hash(), log.hash());
  EXPECT_THROW(log.add_tick(std::vector<Pose>(2)), std::invalid_argument);
  std::stringstream bad("tick,agent_id,x,y,heading\n0,0,1,2\n");
  EXPECT_THROW(EpisodeLog::read_csv(bad), std::exception);
}

TEST(ShuffleControl, HandCaseAndIdenticalEpisodes) {
  const auto area = AreaDescriptor::square(60);
  std::vector<EpisodeLog> logs{one_tick({{0, 0, 0}, {1, 0, 0}}, area), one_tick({{10, 0, 0}, {13, 0, 0}}, area)};
  const double e = 1.0 / (2.0 * std::sqrt(2.0 / 3600.0));
  const auto s = an::cross_episode_shuffled_nni(logs);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0], 13.0 / e, 1e-12);
  EXPECT_NEAR(s[1], 9.0 / e, 1e-12);

  std::mt19937_64 rng(4);
  EpisodeLog one(3, area);
  for (int t = 0; t < 20; ++t) one.add_tick(uniform_square(3, 60, rng));
  const std::vector<EpisodeLog> same(4, one);
  for (double v : an::cross_episode_shuffled_nni(same)) EXPECT_DOUBLE_EQ(v, an::nearest_neighbor_index(one).nni);
}

// Clusters at an episode-specific spot: tight together, spread apart once
// agents come from different episodes.
TEST(ShuffleControl, BreaksEpisodeSpecificClusters) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> centre(-25, 25), jitter(-1, 1);
  std::vector<EpisodeLog> logs;
  for (int k = 0; k < 10; ++k) {
    const double cx = centre(rng), cy = centre(rng);
    EpisodeLog log(4, AreaDescriptor::square(60));
    for (int t = 0; t < 30; ++t) {
      std::vector<Pose> ps(4);
      for (auto& p : ps) p = {cx + jitter(rng), cy + jitter(rng), 0.0};
      log.add_tick(ps);
    }
    logs.push_back(log);
  }
  double actual = 0.0;
  for (const auto& l : logs) actual += an::nearest_neighbor_index(l).nni / 10;
  const auto s = an::cross_episode_shuffled_nni(logs);
  EXPECT_LT(actual, 0.2);
  EXPECT_GT(an::mean(s), 0.6);
}

TEST(ShuffleControl, RejectsMismatchedEpisodes) {
  const auto area = AreaDescriptor::square(60);
  const std::vector<EpisodeLog> few{one_tick({{0, 0, 0}, {1, 0, 0}, {2, 2, 0}}, area),
                                    one_tick({{0, 0, 0}, {1, 0, 0}, {2, 2, 0}}, area)};
  EXPECT_THROW(an::cross_episode_shuffled_nni(few), std::invalid_argument);
  std::vector<EpisodeLog> ragged{one_tick({{0, 0, 0}, {1, 0, 0}}, area), one_tick({{0, 0, 0}, {1, 0, 0}}, area)};
  ragged[1].add_tick(std::vector<Pose>{{0, 0, 0}, {2, 0, 0}});
  EXPECT_THROW(an::cross_episode_shuffled_nni(ragged), std::invalid_argument);
  EXPECT_THROW(an::cross_episode_shuffled_nni({}), std::invalid_argument);
}
