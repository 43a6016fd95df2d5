#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace curioflock::harness {

struct ConditionSummary {
  std::string source;     // "test" or "baseline"
  std::string condition;
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  // Against the matching random baseline; NaN when unavailable.
  double t = 0.0;
  double df = 0.0;
  double p = 0.0;
  double cohens_d = 0.0;
};

// Reads test/*/nni.csv and baseline/*/nni.csv under `run_dir`. Each test
// condition is compared with baseline/<condition> when present, otherwise
// with baseline/default.
std::vector<ConditionSummary> summarize_nni(const std::filesystem::path& run_dir);

struct ShuffleSummary {
  std::string condition;
  std::size_t n = 0;
  double actual = 0.0;    // mean test NNI
  double shuffled = 0.0;  // mean NNI after the cross-episode shuffle
};

// Shuffle control for every test/<condition> holding per-episode logs of
// two or more agents; conditions that cannot be shuffled are skipped.
std::vector<ShuffleSummary> summarize_shuffle(const std::filesystem::path& run_dir);

struct BarSeries {
  std::vector<std::string> labels;
  std::vector<double> values;
  std::vector<double> errors;  // may be empty
};

void write_bar_chart_svg(const std::filesystem::path& path, const std::string& title, const BarSeries& bars,
                         double reference_line);
void write_line_chart_svg(const std::filesystem::path& path, const std::string& title, const std::vector<double>& ys);

// Writes report/{nni_summary.csv, shuffle_control.csv,
// preference_summary.csv, training_curve.csv, *.svg}. Output depends only on the run directory
// contents, so regenerating it is byte-identical.
void emit_report(const std::filesystem::path& run_dir);

}  // namespace curioflock::harness
