#include "curioflock/analysis/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <string>

namespace curioflock::analysis {

namespace {

void require_size(std::span<const double> xs, const char* what) {
  if (xs.size() < 2) throw std::invalid_argument(std::string(what) + " needs at least 2 observations");
}

double sum_sq_dev(std::span<const double> xs, double m) {
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s;
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of an empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
  require_size(xs, "standard deviation");
  return std::sqrt(sum_sq_dev(xs, mean(xs)) / static_cast<double>(xs.size() - 1));
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
  return boost::math::cdf(boost::math::students_t_distribution<double>(df), t);
}

double two_sided_p(double t, double df) {
  if (t == 0.0) return 1.0;
  const boost::math::students_t_distribution<double> dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return std::min(1.0, p);
}

TTestResult independent_t_test(std::span<const double> a, std::span<const double> b) {
  require_size(a, "independent t-test sample a");
  require_size(b, "independent t-test sample b");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a);
  const double mb = mean(b);
  TTestResult r;
  r.df = na + nb - 2.0;
  const double pooled_var = (sum_sq_dev(a, ma) + sum_sq_dev(b, mb)) / r.df;
  if (pooled_var == 0.0) {
    if (ma != mb) throw DegenerateSampleError("zero pooled variance with unequal means");
    return r;
  }
  const double pooled_sd = std::sqrt(pooled_var);
  r.t = (ma - mb) / (pooled_sd * std::sqrt(1.0 / na + 1.0 / nb));
  r.p = two_sided_p(r.t, r.df);
  r.cohens_d = (ma - mb) / pooled_sd;
  return r;
}

TTestResult one_sample_t_test(std::span<const double> sample, double mu0) {
  require_size(sample, "one-sample t-test");
  const double n = static_cast<double>(sample.size());
  const double m = mean(sample);
  TTestResult r;
  r.df = n - 1.0;
  const double sd = std::sqrt(sum_sq_dev(sample, m) / r.df);
  if (sd == 0.0) {
    if (m != mu0) throw DegenerateSampleError("zero variance sample with mean different from mu0");
    return r;
  }
  r.t = (m - mu0) / (sd / std::sqrt(n));
  r.p = two_sided_p(r.t, r.df);
  r.cohens_d = (m - mu0) / sd;
  return r;
}

}  // namespace curioflock::analysis
