#include "curioflock/harness/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include "curioflock/nn/parameters.hpp"

namespace curioflock::harness {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid value for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("invalid boolean for " + std::string(key) + ": '" + std::string(value) + "'");
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

int scaled(int n, double scale) { return std::max(1, static_cast<int>(std::ceil(n * scale - 1e-9))); }

template <typename F>
auto rethrow_as_config(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("invalid value for " + std::string(key) + ": " + e.what());
  }
}

}  // namespace

Experiment parse_experiment(std::string_view name) {
  if (name == "exp1") return Experiment::Exp1;
  if (name == "exp2") return Experiment::Exp2;
  if (name == "exp3") return Experiment::Exp3;
  if (name == "exp4") return Experiment::Exp4;
  if (name == "exp5") return Experiment::Exp5;
  throw ConfigError("unknown experiment: " + std::string(name));
}

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Exp1: return "exp1";
    case Experiment::Exp2: return "exp2";
    case Experiment::Exp3: return "exp3";
    case Experiment::Exp4: return "exp4";
    case Experiment::Exp5: return "exp5";
  }
  return "?";
}

Rearing parse_rearing(std::string_view name) {
  if (name == "group") return Rearing::Group;
  if (name == "alone") return Rearing::Alone;
  throw ConfigError("unknown rearing condition: " + std::string(name));
}

std::string_view to_string(Rearing r) { return r == Rearing::Group ? "group" : "alone"; }

ExperimentConfig ExperimentConfig::full(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::Exp1:
    case Experiment::Exp2:
      break;
    case Experiment::Exp3:
    case Experiment::Exp4:
      c.world = env::WorldKind::RealisticArena;
      c.train_episodes = 1200;
      c.test_episodes = 30;
      break;
    case Experiment::Exp5:
      c.world = env::WorldKind::SimpleSmall;
      c.n_agents = 1;
      break;
  }
  return c;
}

ExperimentConfig ExperimentConfig::desk(Experiment e) {
  ExperimentConfig c = full(e);
  c.scale = 0.1;
  c.resolution = 64;
  if (c.n_agents > 1) c.n_agents = 4;
  return c;
}

int ExperimentConfig::scaled_train_episodes() const { return scaled(train_episodes, scale); }
int ExperimentConfig::scaled_test_episodes() const { return scaled(test_episodes, scale); }
int ExperimentConfig::scaled_trials() const { return scaled(trials_per_contrast, scale); }

env::WorldSpec ExperimentConfig::world_spec() const {
  env::WorldSpec s;
  s.kind = world;
  s.seed = world_seed;
  s.distractor_seed = distractor_seed;
  s.light.angle_offset_deg = light_angle;
  s.light.intensity_multiplier = light_intensity;
  return s;
}

WorldModelConfig ExperimentConfig::world_model_config() const {
  WorldModelConfig w;
  w.encoder = world_model_encoder;
  w.resolution = resolution;
  w.alpha = alpha;
  w.eta = eta;
  return w;
}

PpoConfig ExperimentConfig::ppo_config() const {
  PpoConfig p;
  p.buffer_size = buffer_size;
  p.batch_size = batch_size;
  p.learning_rate = learning_rate;
  p.epochs_per_update = epochs;
  p.world_model_epochs = epochs;
  p.total_training_steps = static_cast<std::int64_t>(scaled_train_episodes()) * train_episode_length;
  return p;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (n_agents < 1) fail("n_agents must be >= 1");
  if (train_episodes < 0 || test_episodes < 0) fail("episode counts must be >= 0");
  if (train_episode_length < 1 || test_episode_length < 1 || trial_length < 1) fail("episode lengths must be >= 1");
  if (!supported_resolution(resolution)) fail("resolution must be 64, 96 or 128");
  if (!(eta >= 0.0)) fail("eta must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  if (!(light_intensity > 0.0)) fail("light_intensity must be positive");
  if (!(scale > 0.0)) fail("scale must be positive");
  if (trials_per_contrast < 1) fail("trials_per_contrast must be >= 1");
  if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
  if (experiment == Experiment::Exp5 && n_agents != 1) fail("exp5 rears a single agent");
  try {
    ppo_config().validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

std::string ExperimentConfig::to_text() const {
  std::map<std::string, std::string> kv;
  kv["experiment"] = std::string(to_string(experiment));
  kv["world"] = std::string(env::to_string(world));
  kv["world_seed"] = std::to_string(world_seed);
  kv["distractor_seed"] = std::to_string(distractor_seed);
  kv["n_agents"] = std::to_string(n_agents);
  kv["train_episodes"] = std::to_string(train_episodes);
  kv["train_episode_length"] = std::to_string(train_episode_length);
  kv["test_episodes"] = std::to_string(test_episodes);
  kv["test_episode_length"] = std::to_string(test_episode_length);
  kv["actor_encoder"] = std::string(to_string(actor_encoder));
  kv["world_model_encoder"] = std::string(to_string(world_model_encoder));
  kv["eta"] = fmt_double(eta);
  kv["alpha"] = fmt_double(alpha);
  kv["resolution"] = std::to_string(resolution);
  kv["light_angle"] = fmt_double(light_angle);
  kv["light_intensity"] = fmt_double(light_intensity);
  kv["rearing"] = std::string(to_string(rearing));
  kv["imprint_shape"] = std::string(env::to_string(imprint_shape));
  kv["imprint_color"] = std::string(env::to_string(imprint_color));
  kv["trials_per_contrast"] = std::to_string(trials_per_contrast);
  kv["trial_length"] = std::to_string(trial_length);
  kv["seed"] = std::to_string(seed);
  kv["scale"] = fmt_double(scale);
  kv["checkpoint_every"] = std::to_string(checkpoint_every);
  kv["step_log"] = step_log ? "true" : "false";
  kv["buffer_size"] = std::to_string(buffer_size);
  kv["batch_size"] = std::to_string(batch_size);
  kv["learning_rate"] = fmt_double(learning_rate);
  kv["epochs"] = std::to_string(epochs);
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string t = to_text();
  return nn::fnv1a(t.data(), t.size());
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  rethrow_as_config(key, [&] {
    if (key == "experiment") c.experiment = parse_experiment(value);
    else if (key == "world") c.world = env::parse_world_kind(value);
    else if (key == "world_seed") c.world_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "distractor_seed") c.distractor_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "n_agents") c.n_agents = parse_number<int>(key, value);
    else if (key == "train_episodes") c.train_episodes = parse_number<int>(key, value);
    else if (key == "train_episode_length") c.train_episode_length = parse_number<int>(key, value);
    else if (key == "test_episodes") c.test_episodes = parse_number<int>(key, value);
    else if (key == "test_episode_length") c.test_episode_length = parse_number<int>(key, value);
    else if (key == "actor_encoder") c.actor_encoder = parse_encoder_size(value);
    else if (key == "world_model_encoder") c.world_model_encoder = parse_encoder_size(value);
    else if (key == "eta") c.eta = parse_number<double>(key, value);
    else if (key == "alpha") c.alpha = parse_number<double>(key, value);
    else if (key == "resolution") c.resolution = parse_number<int>(key, value);
    else if (key == "light_angle") c.light_angle = parse_number<double>(key, value);
    else if (key == "light_intensity") c.light_intensity = parse_number<double>(key, value);
    else if (key == "rearing") c.rearing = parse_rearing(value);
    else if (key == "imprint_shape") c.imprint_shape = env::parse_object_shape(value);
    else if (key == "imprint_color") c.imprint_color = env::parse_object_color(value);
    else if (key == "trials_per_contrast") c.trials_per_contrast = parse_number<int>(key, value);
    else if (key == "trial_length") c.trial_length = parse_number<int>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "scale") c.scale = parse_number<double>(key, value);
    else if (key == "checkpoint_every") c.checkpoint_every = parse_number<int>(key, value);
    else if (key == "step_log") c.step_log = parse_bool(key, value);
    else if (key == "buffer_size") c.buffer_size = parse_number<int>(key, value);
    else if (key == "batch_size") c.batch_size = parse_number<int>(key, value);
    else if (key == "learning_rate") c.learning_rate = parse_number<double>(key, value);
    else if (key == "epochs") c.epochs = parse_number<int>(key, value);
    else throw ConfigError("unknown config key: " + std::string(key));
    return 0;
  });
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int lineno = 0;
  std::string experiment = "exp1";
  std::string profile = "desk";
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key == "experiment") experiment = value;
    if (key == "profile") {
      if (value != "full" && value != "desk") throw ConfigError(origin + ": profile must be full or desk");
      profile = value;
      continue;
    }
    entries.emplace_back(std::move(key), std::move(value));
  }
  const Experiment e = parse_experiment(experiment);
  ExperimentConfig c = profile == "full" ? ExperimentConfig::full(e) : ExperimentConfig::desk(e);
  for (const auto& [k, v] : entries) {
    try {
      apply_setting(c, k, v);
    } catch (const ConfigError& err) {
      throw ConfigError(origin + ": " + err.what());
    }
  }
  try {
    c.validate();
  } catch (const ConfigError& err) {
    throw ConfigError(origin + ": " + err.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse_config(in, path.string());
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config " + path.string());
  out << config.to_text();
}

}  // namespace curioflock::harness
