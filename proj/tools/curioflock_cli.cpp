// Command-line entry point: train, test, baseline, imprint, sweep, report
// and frame dumps.
#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "curioflock/env/rasterizer.hpp"
#include "curioflock/env/world.hpp"
#include "curioflock/harness/config.hpp"
#include "curioflock/harness/experiments.hpp"
#include "curioflock/harness/report.hpp"

namespace fs = std::filesystem;
using namespace curioflock;
using namespace curioflock::harness;

namespace {

ExperimentConfig load_with_overrides(const std::string& path, std::optional<std::uint64_t> seed,
                                     std::optional<double> scale) {
  ExperimentConfig c = load_config(path);
  if (seed) c.seed = *seed;
  if (scale) c.scale = *scale;
  c.validate();
  return c;
}

fs::path default_run_dir(const ExperimentConfig& c) {
  return fs::path("runs") / (std::string(to_string(c.experiment)) + "-seed" + std::to_string(c.seed));
}

// Parses "angle=K" / "intensity=M" tokens.
env::LightingSpec parse_lighting(const std::vector<std::string>& tokens) {
  env::LightingSpec l;
  for (const auto& t : tokens) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--lighting", "expected key=value, got " + t);
    const std::string key = t.substr(0, eq);
    const double v = std::stod(t.substr(eq + 1));
    if (key == "angle") l.angle_offset_deg = v;
    else if (key == "intensity") l.intensity_multiplier = v;
    else throw CLI::ValidationError("--lighting", "unknown key " + key);
  }
  return l;
}

std::string condition_name(const env::LightingSpec& l) {
  if (l.angle_offset_deg == 0.0 && l.intensity_multiplier == 1.0) return "default";
  std::ostringstream os;
  os << "angle_" << l.angle_offset_deg << "_intensity_" << std::fixed << std::setprecision(2) << l.intensity_multiplier;
  return os.str();
}

void print_nni(const std::string& label, const TestResult& r) {
  double sum = 0.0;
  int n = 0;
  for (double v : r.nni) {
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  std::cout << label << ": " << r.nni.size() << " episodes, mean NNI " << (n ? sum / n : 0.0) << '\n';
}

void print_contrasts(const std::vector<ImprintContrast>& cs) {
  for (const auto& c : cs) {
    double m = 0.0;
    for (double s : c.scores) m += s;
    m /= static_cast<double>(std::max<std::size_t>(c.scores.size(), 1));
    std::cout << c.kind << " vs " << c.novel << ": mean preference " << m << ", t(" << c.test.df << ") = " << c.test.t
              << ", p = " << c.test.p << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curiosity-driven multi-agent workbench"};
  app.require_subcommand(1);

  std::string config_path, run_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> scale;
  bool quiet = false;

  auto* train = app.add_subcommand("train", "Train agents from a config file");
  train->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "Override the seed");
  train->add_option("--scale", scale, "Override the episode scale factor");
  train->add_option("--run", run_dir, "Run directory (default runs/<exp>-seed<N>)");
  train->add_flag("--quiet", quiet, "No per-episode progress");

  std::vector<std::string> lighting;
  bool grid = false;
  auto* test = app.add_subcommand("test", "Test frozen agents from a run directory");
  test->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  test->add_option("--lighting", lighting, "angle=K intensity=M")->expected(1, 2);
  test->add_flag("--grid", grid, "Run the full lighting grid");

  auto* baseline = app.add_subcommand("baseline", "Random-action baseline episodes");
  baseline->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  baseline->add_option("--run", run_dir, "Run directory (default runs/<exp>-seed<N>)");
  baseline->add_option("--seed", seed, "Override the seed");

  bool skip_train = false;
  auto* imprint = app.add_subcommand("imprint", "Imprint training then two-alternative tests");
  imprint->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  imprint->add_option("--run", run_dir, "Run directory (default runs/exp5-seed<N>)");
  imprint->add_option("--seed", seed, "Override the seed");
  imprint->add_option("--scale", scale, "Override the episode scale factor");
  imprint->add_flag("--skip-train", skip_train, "Reuse checkpoints already in the run directory");
  imprint->add_flag("--quiet", quiet, "No per-episode progress");

  auto* sweep = app.add_subcommand("sweep", "Architecture sweep: 4 axes x 3 levels");
  sweep->add_option("--config", config_path, "Base config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--run", run_dir, "Parent run directory")->required();
  sweep->add_option("--seed", seed, "Override the seed");
  sweep->add_option("--scale", scale, "Override the episode scale factor");
  sweep->add_flag("--quiet", quiet, "No per-episode progress");

  auto* report = app.add_subcommand("report", "Write CSV/SVG summaries for a run directory");
  report->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  std::string frame_out;
  int frame_agents = 2;
  auto* frames = app.add_subcommand("frames", "Dump each agent's first frame as PPM");
  frames->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  frames->add_option("--out", frame_out, "Output directory")->required();
  frames->add_option("--agents", frame_agents, "Number of agents")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    std::ostream* progress = quiet ? nullptr : &std::cout;
    if (*train) {
      const ExperimentConfig c = load_with_overrides(config_path, seed, scale);
      const fs::path dir = run_dir.empty() ? default_run_dir(c) : fs::path(run_dir);
      const RunRecord r = run_training(c, dir, progress);
      std::cout << "trained " << r.checkpoints.size() << " agents in " << r.wall_seconds << " s; run " << dir
                << " training hash " << std::hex << r.training_hash << std::dec << '\n';
    } else if (*test) {
      const ExperimentConfig c = load_config(fs::path(run_dir) / "config.txt");
      if (grid || (c.experiment == Experiment::Exp2 && lighting.empty())) {
        for (const auto& cond : lighting_grid()) print_nni(cond.label, run_test(c, run_dir, cond.light, cond.label));
      } else {
        const env::LightingSpec l = lighting.empty() ? c.world_spec().light : parse_lighting(lighting);
        const std::string name = condition_name(l);
        print_nni(name, run_test(c, run_dir, l, name));
      }
    } else if (*baseline) {
      const ExperimentConfig c = load_with_overrides(config_path, seed, std::nullopt);
      const fs::path dir = run_dir.empty() ? default_run_dir(c) : fs::path(run_dir);
      if (c.experiment == Experiment::Exp5) {
        print_contrasts(run_imprint_random(c, c.seed + 0xba5e));
      } else {
        fs::create_directories(dir);
        print_nni("baseline", run_baseline(c, dir, "default"));
      }
    } else if (*imprint) {
      ExperimentConfig c = load_with_overrides(config_path, seed, scale);
      if (c.experiment != Experiment::Exp5) throw ConfigError("imprint needs experiment = exp5");
      const fs::path dir = run_dir.empty() ? default_run_dir(c) : fs::path(run_dir);
      if (!skip_train) run_training(c, dir, progress);
      print_contrasts(run_imprint_test(c, dir));
      emit_report(dir);
    } else if (*sweep) {
      const ExperimentConfig base = load_with_overrides(config_path, seed, scale);
      for (const auto& point : architecture_sweep(base)) {
        const fs::path dir = fs::path(run_dir) / (point.axis + "_" + point.level);
        std::cout << "== " << point.axis << " = " << point.level << '\n';
        run_training(point.config, dir, progress);
        print_nni(point.axis + "=" + point.level, run_test(point.config, dir, point.config.world_spec().light, "default"));
        run_baseline(point.config, dir, "default");
        emit_report(dir);
      }
    } else if (*report) {
      emit_report(run_dir);
      std::cout << "wrote " << (fs::path(run_dir) / "report") << '\n';
    } else if (*frames) {
      const ExperimentConfig c = load_config(config_path);
      env::World world(c.world_spec(), frame_agents, c.resolution);
      env::Rng rng(c.seed);
      world.spawn_random(rng);
      fs::create_directories(frame_out);
      for (int i = 0; i < frame_agents; ++i) {
        env::write_ppm(fs::path(frame_out) / ("agent_" + std::to_string(i) + ".ppm"), world.render(i));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
