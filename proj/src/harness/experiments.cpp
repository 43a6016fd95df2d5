#include "curioflock/harness/experiments.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "curioflock/analysis/nni.hpp"
#include "curioflock/nn/checkpoint.hpp"

namespace curioflock::harness {

namespace {

std::uint64_t agent_seed(const ExperimentConfig& c, int i) {
  return c.seed * 1'000'003ULL + static_cast<std::uint64_t>(i) + 1;
}

analysis::AreaDescriptor area_of(const env::WorldSpec& spec) {
  return spec.kind == env::WorldKind::RealisticArena ? analysis::AreaDescriptor::circle(spec.extent())
                                                     : analysis::AreaDescriptor::square(spec.extent());
}

std::uint64_t mix_double(std::uint64_t h, double v) { return nn::fnv1a(&v, sizeof v, h); }

env::AgentAction uniform_action(nn::Rng& rng) {
  std::uniform_int_distribution<int> pick(0, 2);
  const int t = pick(rng);
  const int r = pick(rng);
  return env::action_from_indices(t, r);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

env::ImprintObject imprint_object(const ExperimentConfig& c) {
  env::ImprintObject o;
  o.shape = c.imprint_shape;
  o.color = c.imprint_color;
  return o;
}

// One side of the test chamber, minus a margin for the object body.
double object_offset(const env::WorldSpec& spec) { return spec.extent() / 2.0 - 4.0; }

using PolicyFn = std::function<env::AgentAction(int, const env::World&, nn::Rng&)>;

TestResult run_episodes(const ExperimentConfig& config, int n_agents, env::LightingSpec light, std::uint64_t seed,
                        const PolicyFn& policy) {
  env::WorldSpec spec = config.world_spec();
  spec.light = light;
  env::World world(spec, n_agents, config.resolution);
  nn::Rng rng(seed);
  const int episodes = config.scaled_test_episodes();
  TestResult result;
  std::vector<env::AgentAction> actions(static_cast<std::size_t>(n_agents));
  for (int ep = 0; ep < episodes; ++ep) {
    world.spawn_random(rng);
    analysis::EpisodeLog log(n_agents, area_of(spec));
    std::vector<analysis::Pose> tick(static_cast<std::size_t>(n_agents));
    for (int step = 0; step < config.test_episode_length; ++step) {
      for (int i = 0; i < n_agents; ++i) actions[static_cast<std::size_t>(i)] = policy(i, world, rng);
      world.advance(actions);
      for (int i = 0; i < n_agents; ++i) {
        const auto& b = world.agent(i);
        tick[static_cast<std::size_t>(i)] = {b.x, b.y, b.heading};
      }
      log.add_tick(tick);
    }
    result.nni.push_back(n_agents >= 2 ? analysis::nearest_neighbor_index(log).nni
                                       : std::numeric_limits<double>::quiet_NaN());
    result.logs.push_back(std::move(log));
  }
  return result;
}

void save_test(const TestResult& r, const fs::path& dir, const std::string& condition) {
  fs::create_directories(dir);
  write_nni_csv(dir / "nni.csv", condition, r.nni);
  for (std::size_t k = 0; k < r.logs.size(); ++k) {
    std::ostringstream name;
    name << "episode_" << std::setw(4) << std::setfill('0') << k << ".csv";
    r.logs[k].save(dir / name.str());
  }
}

}  // namespace

std::vector<Agent> make_agents(const ExperimentConfig& config) {
  std::vector<Agent> agents;
  agents.reserve(static_cast<std::size_t>(config.n_agents));
  const WorldModelConfig wm = config.world_model_config();
  const PpoConfig ppo = config.ppo_config();
  for (int i = 0; i < config.n_agents; ++i) agents.emplace_back(i, config.actor_encoder, wm, ppo, agent_seed(config, i));
  return agents;
}

void save_agents(const std::vector<Agent>& agents, const ExperimentConfig& config, const fs::path& run_dir,
                 const std::string& tag) {
  fs::create_directories(run_dir);
  for (const auto& a : agents) {
    const std::string name = "agent_" + std::to_string(a.id) + (tag.empty() ? "" : "_" + tag) + ".ckpt";
    nn::save_checkpoint(run_dir / name, {&a.actor.parameters(), &a.world_model.parameters()},
                        {{"config_hash", std::to_string(config.hash())},
                         {"agent", std::to_string(a.id)},
                         {"steps", std::to_string(a.steps)}});
  }
}

std::vector<Agent> load_agents(const ExperimentConfig& config, const fs::path& run_dir) {
  std::vector<Agent> agents = make_agents(config);
  for (auto& a : agents) {
    const fs::path path = run_dir / ("agent_" + std::to_string(a.id) + ".ckpt");
    if (!fs::exists(path)) throw std::runtime_error("missing checkpoint " + path.string());
    const auto tensors = nn::load_checkpoint(path);
    nn::restore_parameters(a.actor.parameters(), tensors);
    nn::restore_parameters(a.world_model.parameters(), tensors);
  }
  return agents;
}

RunRecord run_training(const ExperimentConfig& config, const fs::path& run_dir, std::ostream* progress) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(run_dir);
  save_config(config, run_dir / "config.txt");

  RunRecord record;
  record.dir = run_dir;
  record.seed = config.seed;
  {
    std::ostringstream h;
    h << std::hex << std::setw(16) << std::setfill('0') << config.hash();
    record.config_hash = h.str();
  }

  std::vector<Agent> agents = make_agents(config);
  std::ofstream steps_csv;
  if (config.step_log) {
    steps_csv = open_out(run_dir / "train_steps.csv");
    write_step_csv_header(steps_csv);
  }
  std::ofstream episodes_csv = open_out(run_dir / "train_episodes.csv");
  episodes_csv << "world,episode,agent_id,mean_R_m,mean_R_c,nni\n";
  std::ofstream updates_csv = open_out(run_dir / "train_updates.csv");
  updates_csv << "world,episode,agent_id,learning_rate,policy_loss,value_loss,entropy,clip_fraction,"
                 "inverse_loss,forward_loss\n";

  std::uint64_t hash = 0xcbf29ce484222325ULL;
  const int episodes = config.scaled_train_episodes();

  auto run_world = [&](std::vector<Agent>& group, int world_index, std::uint64_t spawn_seed) {
    env::WorldSpec spec = config.world_spec();
    spec.seed = config.world_seed + static_cast<std::uint64_t>(world_index);
    env::World world(spec, static_cast<int>(group.size()), config.resolution);
    if (config.experiment == Experiment::Exp5) {
      env::ImprintObject o = imprint_object(config);
      const double off = object_offset(spec);
      o.x = off;  // replaced by spawn_random each episode
      world.add_object(o);
    }
    TrainOptions opts;
    opts.episodes = episodes;
    opts.episode_length = config.train_episode_length;
    opts.ppo = config.ppo_config();
    opts.spawn_seed = spawn_seed;
    opts.step_csv = config.step_log ? &steps_csv : nullptr;
    opts.on_episode = [&](const EpisodeSummary& s, const analysis::EpisodeLog&) {
      for (std::size_t i = 0; i < group.size(); ++i) {
        episodes_csv << world_index << ',' << s.episode << ',' << group[i].id << ',' << s.mean_metabolic[i] << ','
                     << s.mean_curiosity[i] << ',' << s.nni << '\n';
        hash = mix_double(hash, s.mean_metabolic[i]);
        hash = mix_double(hash, s.mean_curiosity[i]);
      }
      hash = mix_double(hash, s.nni);
      if (progress) {
        *progress << "world " << world_index << " episode " << s.episode + 1 << "/" << episodes;
        if (!std::isnan(s.nni)) *progress << " nni " << s.nni;
        *progress << " mean R_c " << s.mean_curiosity.front() << std::endl;
      }
      if (config.checkpoint_every > 0 && (s.episode + 1) % config.checkpoint_every == 0) {
        save_agents(group, config, run_dir, "ep" + std::to_string(s.episode + 1));
      }
    };
    const TrainingLog log = train(group, world, opts);
    for (const auto& u : log.updates) {
      updates_csv << world_index << ',' << u.episode << ',' << u.agent_id << ',' << u.learning_rate << ','
                  << u.ppo.policy_loss << ',' << u.ppo.value_loss << ',' << u.ppo.entropy << ','
                  << u.ppo.clip_fraction << ',' << u.world_model.inverse_loss << ',' << u.world_model.forward_loss
                  << '\n';
    }
  };

  if (config.rearing == Rearing::Group || agents.size() == 1) {
    run_world(agents, 0, config.seed);
  } else {
    for (std::size_t i = 0; i < agents.size(); ++i) {
      std::vector<Agent> single;
      single.push_back(std::move(agents[i]));
      run_world(single, static_cast<int>(i), config.seed + i);
      agents[i] = std::move(single.front());
    }
  }

  for (const auto& a : agents) hash = mix_double(hash, static_cast<double>(a.actor.parameters().hash()));
  save_agents(agents, config, run_dir);
  for (const auto& a : agents) record.checkpoints.push_back(run_dir / ("agent_" + std::to_string(a.id) + ".ckpt"));
  record.training_hash = hash;
  record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ofstream rec = open_out(run_dir / "record.txt");
  rec << "config_hash " << record.config_hash << "\nseed " << record.seed << "\ntraining_hash " << std::hex
      << record.training_hash << std::dec << "\nwall_seconds " << record.wall_seconds << '\n';
  for (const auto& c : record.checkpoints) rec << "checkpoint " << c.filename().string() << '\n';
  return record;
}

TestResult run_test_episodes(const ExperimentConfig& config, const std::vector<Agent>& agents,
                             env::LightingSpec light, std::uint64_t seed) {
  if (agents.empty()) throw std::invalid_argument("run_test_episodes: no agents");
  std::vector<nn::Rng> rngs;
  for (const auto& a : agents) rngs.emplace_back(seed * 31 + static_cast<std::uint64_t>(a.id) + 7);
  PolicyFn policy = [&](int i, const env::World& world, nn::Rng&) {
    const auto& ag = agents[static_cast<std::size_t>(i)];
    const PolicyOutput po = ag.actor.policy_forward(world.render(i));
    return sample_action(po, rngs[static_cast<std::size_t>(i)]).action;
  };
  return run_episodes(config, static_cast<int>(agents.size()), light, seed, policy);
}

TestResult run_random_baseline(const ExperimentConfig& config, std::uint64_t seed) {
  nn::Rng action_rng(seed ^ 0xA5A5A5A5ULL);
  PolicyFn policy = [&](int, const env::World&, nn::Rng&) { return uniform_action(action_rng); };
  return run_episodes(config, config.n_agents, config.world_spec().light, seed, policy);
}

TestResult run_test(const ExperimentConfig& config, const fs::path& run_dir, env::LightingSpec light,
                    const std::string& condition) {
  std::vector<Agent> agents = load_agents(config, run_dir);
  std::vector<std::uint64_t> before;
  for (const auto& a : agents) before.push_back(a.actor.parameters().hash() ^ a.world_model.parameters().hash());
  TestResult r = run_test_episodes(config, agents, light, config.seed + 0x7e57);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if ((agents[i].actor.parameters().hash() ^ agents[i].world_model.parameters().hash()) != before[i]) {
      throw std::logic_error("parameters changed during testing");
    }
  }
  save_test(r, run_dir / "test" / condition, condition);
  return r;
}

TestResult run_baseline(const ExperimentConfig& config, const fs::path& run_dir, const std::string& condition) {
  TestResult r = run_random_baseline(config, config.seed + 0xba5e);
  save_test(r, run_dir / "baseline" / condition, condition);
  return r;
}

void write_nni_csv(const fs::path& path, const std::string& condition, const std::vector<double>& nni) {
  std::ofstream out = open_out(path);
  out << "condition,episode,nni\n";
  for (std::size_t k = 0; k < nni.size(); ++k) out << condition << ',' << k << ',' << nni[k] << '\n';
}

std::vector<double> read_nni_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto last = line.rfind(',');
    if (last == std::string::npos) throw std::runtime_error("bad nni row in " + path.string());
    out.push_back(std::stod(line.substr(last + 1)));
  }
  return out;
}

std::vector<LightingCondition> lighting_grid() {
  std::vector<LightingCondition> grid;
  for (int a = 0; a <= 90; a += 15) grid.push_back({"angle_" + std::to_string(a), {static_cast<double>(a), 1.0}});
  for (int k = 1; k <= 8; ++k) {
    const double m = 0.25 * k;
    std::ostringstream label;
    label << "intensity_" << std::fixed << std::setprecision(2) << m;
    grid.push_back({label.str(), {0.0, m}});
  }
  return grid;
}

std::vector<SweepPoint> architecture_sweep(const ExperimentConfig& base) {
  std::vector<SweepPoint> out;
  const EncoderSize sizes[] = {EncoderSize::Small, EncoderSize::Medium, EncoderSize::Large};
  for (EncoderSize s : sizes) {
    ExperimentConfig c = base;
    c.experiment = Experiment::Exp4;
    c.actor_encoder = s;
    out.push_back({"actor_encoder", std::string(to_string(s)), c});
  }
  for (EncoderSize s : sizes) {
    ExperimentConfig c = base;
    c.experiment = Experiment::Exp4;
    c.world_model_encoder = s;
    out.push_back({"world_model_encoder", std::string(to_string(s)), c});
  }
  for (double eta : {0.01, 0.1, 1.0}) {
    ExperimentConfig c = base;
    c.experiment = Experiment::Exp4;
    c.eta = eta;
    std::ostringstream l;
    l << eta;
    out.push_back({"eta", l.str(), c});
  }
  for (int res : {64, 96, 128}) {
    ExperimentConfig c = base;
    c.experiment = Experiment::Exp4;
    c.resolution = res;
    out.push_back({"resolution", std::to_string(res), c});
  }
  return out;
}

std::vector<env::ImprintObject> novel_objects(const ExperimentConfig& config, std::vector<std::string>* kinds) {
  std::vector<env::ImprintObject> out;
  const env::ObjectColor colors[] = {env::ObjectColor::Red, env::ObjectColor::Green, env::ObjectColor::Blue,
                                     env::ObjectColor::Yellow};
  const env::ObjectShape shapes[] = {env::ObjectShape::Cube, env::ObjectShape::Sphere, env::ObjectShape::Cone,
                                     env::ObjectShape::Torus};
  for (auto c : colors) {
    if (c == config.imprint_color) continue;
    env::ImprintObject o = imprint_object(config);
    o.color = c;
    out.push_back(o);
    if (kinds) kinds->push_back("color");
  }
  for (auto s : shapes) {
    if (s == config.imprint_shape) continue;
    env::ImprintObject o = imprint_object(config);
    o.shape = s;
    out.push_back(o);
    if (kinds) kinds->push_back("shape");
  }
  return out;
}

namespace {

std::vector<ImprintContrast> imprint_trials(const ExperimentConfig& config, std::uint64_t seed,
                                            const std::function<env::AgentAction(const env::World&, nn::Rng&)>& act) {
  std::vector<std::string> kinds;
  const std::vector<env::ImprintObject> novels = novel_objects(config, &kinds);
  const env::WorldSpec spec = config.world_spec();
  const double off = object_offset(spec);
  nn::Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ImprintContrast> out;
  for (std::size_t k = 0; k < novels.size(); ++k) {
    ImprintContrast contrast;
    contrast.kind = kinds[k];
    contrast.novel = kinds[k] == "color" ? std::string(env::to_string(novels[k].color))
                                         : std::string(env::to_string(novels[k].shape));
    for (int trial = 0; trial < config.scaled_trials(); ++trial) {
      env::World world(spec, 1, config.resolution);
      const double side = trial % 2 == 0 ? 1.0 : -1.0;
      env::ImprintObject imprinted = imprint_object(config);
      imprinted.training_mode = false;
      imprinted.x = side * off;
      env::ImprintObject novel = novels[k];
      novel.training_mode = false;
      novel.x = -side * off;
      world.add_object(imprinted);
      world.add_object(novel);
      world.set_agent(0, env::AgentBody{0.0, 0.0, 2.0 * std::numbers::pi * unit(rng)});
      analysis::EpisodeLog log(1, area_of(spec));
      for (int t = 0; t < config.trial_length; ++t) {
        const env::AgentAction a = act(world, rng);
        world.advance(std::span<const env::AgentAction>(&a, 1));
        const auto& b = world.agent(0);
        const analysis::Pose p{b.x, b.y, b.heading};
        log.add_tick(std::span<const analysis::Pose>(&p, 1));
      }
      contrast.scores.push_back(analysis::preference_score(log, {imprinted.x, imprinted.y}, {novel.x, novel.y}));
    }
    if (contrast.scores.size() >= 2) {
      try {
        contrast.test = analysis::one_sample_t_test(contrast.scores, 0.5);
      } catch (const analysis::DegenerateSampleError&) {
        contrast.test.t = std::numeric_limits<double>::infinity() * (contrast.scores.front() > 0.5 ? 1 : -1);
        contrast.test.df = static_cast<double>(contrast.scores.size() - 1);
        contrast.test.p = 0.0;
      }
    }
    out.push_back(std::move(contrast));
  }
  return out;
}

}  // namespace

std::vector<ImprintContrast> run_imprint_test(const ExperimentConfig& config, const Agent& agent, std::uint64_t seed) {
  nn::Rng policy_rng(seed * 17 + 3);
  return imprint_trials(config, seed, [&](const env::World& world, nn::Rng&) {
    return sample_action(agent.actor.policy_forward(world.render(0)), policy_rng).action;
  });
}

std::vector<ImprintContrast> run_imprint_test(const ExperimentConfig& config, const fs::path& run_dir) {
  std::vector<Agent> agents = load_agents(config, run_dir);
  if (agents.size() != 1) throw std::invalid_argument("imprint test expects a single agent");
  std::vector<ImprintContrast> result = run_imprint_test(config, agents.front(), config.seed + 0x1a9);
  const fs::path dir = run_dir / "test" / "imprint";
  fs::create_directories(dir);
  std::ofstream out = open_out(dir / "preference.csv");
  out << "kind,novel,trial,score\n";
  for (const auto& c : result) {
    for (std::size_t t = 0; t < c.scores.size(); ++t) out << c.kind << ',' << c.novel << ',' << t << ',' << c.scores[t] << '\n';
  }
  return result;
}

std::vector<ImprintContrast> run_imprint_random(const ExperimentConfig& config, std::uint64_t seed) {
  nn::Rng action_rng(seed ^ 0x5EED);
  return imprint_trials(config, seed, [&](const env::World&, nn::Rng&) { return uniform_action(action_rng); });
}

}  // namespace curioflock::harness
