#include "curioflock/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "curioflock/analysis/nni.hpp"
#include "curioflock/analysis/stats.hpp"
#include "curioflock/harness/experiments.hpp"

namespace curioflock::harness {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> sorted_subdirs(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> finite_only(const std::vector<double>& xs) {
  std::vector<double> out;
  for (double x : xs) {
    if (std::isfinite(x)) out.push_back(x);
  }
  return out;
}

ConditionSummary describe(const std::string& source, const std::string& condition, const std::vector<double>& xs) {
  ConditionSummary s;
  s.source = source;
  s.condition = condition;
  s.n = xs.size();
  s.mean = xs.empty() ? kNaN : analysis::mean(xs);
  s.sd = xs.size() >= 2 ? analysis::sample_sd(xs) : kNaN;
  s.t = s.df = s.p = s.cohens_d = kNaN;
  return s;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::ofstream open(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<ConditionSummary> summarize_nni(const fs::path& run_dir) {
  std::vector<ConditionSummary> out;
  std::map<std::string, std::vector<double>> baselines;
  for (const auto& cond : sorted_subdirs(run_dir / "baseline")) {
    const fs::path p = run_dir / "baseline" / cond / "nni.csv";
    if (!fs::exists(p)) continue;
    baselines[cond] = finite_only(read_nni_csv(p));
    out.push_back(describe("baseline", cond, baselines[cond]));
  }
  for (const auto& cond : sorted_subdirs(run_dir / "test")) {
    const fs::path p = run_dir / "test" / cond / "nni.csv";
    if (!fs::exists(p)) continue;
    const std::vector<double> xs = finite_only(read_nni_csv(p));
    ConditionSummary s = describe("test", cond, xs);
    auto it = baselines.find(cond);
    if (it == baselines.end()) it = baselines.find("default");
    if (it != baselines.end() && xs.size() >= 2 && it->second.size() >= 2) {
      try {
        const analysis::TTestResult r = analysis::independent_t_test(xs, it->second);
        s.t = r.t;
        s.df = r.df;
        s.p = r.p;
        s.cohens_d = r.cohens_d;
      } catch (const analysis::DegenerateSampleError&) {
      }
    }
    out.push_back(s);
  }
  return out;
}

std::vector<ShuffleSummary> summarize_shuffle(const fs::path& run_dir) {
  std::vector<ShuffleSummary> out;
  for (const auto& cond : sorted_subdirs(run_dir / "test")) {
    const fs::path dir = run_dir / "test" / cond;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      if (name.rfind("episode_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
    }
    if (files.empty()) continue;
    std::sort(files.begin(), files.end());
    std::vector<analysis::EpisodeLog> logs;
    for (const auto& f : files) logs.push_back(analysis::EpisodeLog::load(f));
    if (logs.front().agent_count() < 2 || logs.size() < static_cast<std::size_t>(logs.front().agent_count())) continue;
    std::vector<double> actual;
    for (const auto& log : logs) actual.push_back(analysis::nearest_neighbor_index(log).nni);
    ShuffleSummary s;
    s.condition = cond;
    s.n = logs.size();
    s.actual = analysis::mean(actual);
    s.shuffled = analysis::mean(analysis::cross_episode_shuffled_nni(logs));
    out.push_back(s);
  }
  return out;
}

void write_bar_chart_svg(const fs::path& path, const std::string& title, const BarSeries& bars,
                         double reference_line) {
  const double w = 80.0 + 60.0 * static_cast<double>(std::max<std::size_t>(bars.values.size(), 1));
  const double h = 320.0, top = 40.0, bottom = 260.0, left = 60.0;
  double vmax = std::isfinite(reference_line) ? reference_line : 0.0;
  for (std::size_t i = 0; i < bars.values.size(); ++i) {
    const double e = i < bars.errors.size() && std::isfinite(bars.errors[i]) ? bars.errors[i] : 0.0;
    if (std::isfinite(bars.values[i])) vmax = std::max(vmax, bars.values[i] + e);
  }
  if (!(vmax > 0.0)) vmax = 1.0;
  vmax *= 1.1;
  auto y_of = [&](double v) { return bottom - (bottom - top) * v / vmax; };
  std::ofstream out = open(path);
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << esc(title) << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << w - 10 << "\" y2=\"" << bottom
      << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < bars.values.size(); ++i) {
    const double x = left + 10.0 + 60.0 * static_cast<double>(i);
    const double v = std::isfinite(bars.values[i]) ? bars.values[i] : 0.0;
    out << "<rect x=\"" << x << "\" y=\"" << y_of(v) << "\" width=\"40\" height=\"" << bottom - y_of(v)
        << "\" fill=\"steelblue\"/>\n";
    if (i < bars.errors.size() && std::isfinite(bars.errors[i])) {
      out << "<line x1=\"" << x + 20 << "\" y1=\"" << y_of(v + bars.errors[i]) << "\" x2=\"" << x + 20 << "\" y2=\""
          << y_of(std::max(0.0, v - bars.errors[i])) << "\" stroke=\"black\"/>\n";
    }
    out << "<text x=\"" << x << "\" y=\"" << bottom + 14 << "\" font-size=\"9\" transform=\"rotate(30 " << x << ' '
        << bottom + 14 << ")\">" << esc(bars.labels.at(i)) << "</text>\n";
  }
  if (std::isfinite(reference_line)) {
    out << "<line x1=\"" << left << "\" y1=\"" << y_of(reference_line) << "\" x2=\"" << w - 10 << "\" y2=\""
        << y_of(reference_line) << "\" stroke=\"red\" stroke-dasharray=\"4 3\"/>\n";
  }
  out << "</svg>\n";
}

void write_line_chart_svg(const fs::path& path, const std::string& title, const std::vector<double>& ys) {
  const double w = 480.0, h = 300.0, top = 40.0, bottom = 260.0, left = 50.0, right = 470.0;
  double vmax = 0.0;
  for (double y : ys) {
    if (std::isfinite(y)) vmax = std::max(vmax, y);
  }
  if (!(vmax > 0.0)) vmax = 1.0;
  vmax *= 1.1;
  std::ofstream out = open(path);
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << esc(title) << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom
      << "\" stroke=\"black\"/>\n";
  if (!ys.empty()) {
    out << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
    const double dx = ys.size() > 1 ? (right - left) / static_cast<double>(ys.size() - 1) : 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      out << left + dx * static_cast<double>(i) << ',' << bottom - (bottom - top) * ys[i] / vmax << ' ';
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

void emit_report(const fs::path& run_dir) {
  const fs::path dir = run_dir / "report";
  fs::create_directories(dir);

  const std::vector<ConditionSummary> rows = summarize_nni(run_dir);
  {
    std::ofstream out = open(dir / "nni_summary.csv");
    out << "source,condition,n,mean,sd,t_vs_random,df,p,cohens_d\n";
    for (const auto& r : rows) {
      out << r.source << ',' << r.condition << ',' << r.n << ',' << num(r.mean) << ',' << num(r.sd) << ','
          << num(r.t) << ',' << num(r.df) << ',' << num(r.p) << ',' << num(r.cohens_d) << '\n';
    }
  }
  BarSeries bars;
  for (const auto& r : rows) {
    bars.labels.push_back(r.source + ":" + r.condition);
    bars.values.push_back(r.mean);
    bars.errors.push_back(r.n >= 2 ? r.sd / std::sqrt(static_cast<double>(r.n)) : kNaN);
  }
  write_bar_chart_svg(dir / "nni.svg", "Nearest neighbour index (mean +- SE)", bars, 1.0);

  {
    std::ofstream out = open(dir / "shuffle_control.csv");
    out << "condition,episodes,mean_nni,mean_shuffled_nni\n";
    for (const auto& r : summarize_shuffle(run_dir)) {
      out << r.condition << ',' << r.n << ',' << num(r.actual) << ',' << num(r.shuffled) << '\n';
    }
  }

  {
    std::ofstream out = open(dir / "preference_summary.csv");
    out << "kind,novel,n,mean,sd,t,df,p\n";
    const fs::path pref = run_dir / "test" / "imprint" / "preference.csv";
    if (fs::exists(pref)) {
      std::ifstream in(pref);
      std::string line;
      std::getline(in, line);
      std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
      std::vector<std::pair<std::string, std::string>> order;
      while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string kind, novel, trial, score;
        std::getline(row, kind, ',');
        std::getline(row, novel, ',');
        std::getline(row, trial, ',');
        std::getline(row, score, ',');
        if (kind.empty()) continue;
        const auto key = std::make_pair(kind, novel);
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(std::stod(score));
      }
      BarSeries pb;
      for (const auto& key : order) {
        const auto& xs = groups[key];
        double t = kNaN, df = kNaN, p = kNaN;
        if (xs.size() >= 2) {
          try {
            const auto r = analysis::one_sample_t_test(xs, 0.5);
            t = r.t;
            df = r.df;
            p = r.p;
          } catch (const analysis::DegenerateSampleError&) {
          }
        }
        const double m = analysis::mean(xs);
        const double sd = xs.size() >= 2 ? analysis::sample_sd(xs) : kNaN;
        out << key.first << ',' << key.second << ',' << xs.size() << ',' << num(m) << ',' << num(sd) << ','
            << num(t) << ',' << num(df) << ',' << num(p) << '\n';
        pb.labels.push_back(key.first + ":" + key.second);
        pb.values.push_back(m);
        pb.errors.push_back(xs.size() >= 2 ? sd / std::sqrt(static_cast<double>(xs.size())) : kNaN);
      }
      write_bar_chart_svg(dir / "preference.svg", "Preference for the imprinted object", pb, 0.5);
    }
  }

  {
    std::ofstream out = open(dir / "training_curve.csv");
    out << "episode,nni,mean_R_c\n";
    const fs::path train = run_dir / "train_episodes.csv";
    if (fs::exists(train)) {
      std::ifstream in(train);
      std::string line;
      std::getline(in, line);
      std::map<int, std::pair<double, std::vector<double>>> per_episode;
      while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string world, ep, agent, rm, rc, nni;
        std::getline(row, world, ',');
        std::getline(row, ep, ',');
        std::getline(row, agent, ',');
        std::getline(row, rm, ',');
        std::getline(row, rc, ',');
        std::getline(row, nni, ',');
        if (ep.empty()) continue;
        auto& slot = per_episode[std::stoi(ep)];
        slot.first = nni == "nan" || nni == "-nan" ? kNaN : std::stod(nni);
        slot.second.push_back(std::stod(rc));
      }
      std::vector<double> curve;
      for (const auto& [ep, v] : per_episode) {
        out << ep << ',' << num(v.first) << ',' << num(analysis::mean(v.second)) << '\n';
        curve.push_back(v.first);
      }
      write_line_chart_svg(dir / "training_nni.svg", "Training NNI per episode", curve);
    }
  }
}

}  // namespace curioflock::harness
