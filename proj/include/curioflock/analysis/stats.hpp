#pragma once

#include <span>
#include <stdexcept>

namespace curioflock::analysis {

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;          // two-sided
  double cohens_d = 0.0;   // independent test only
};

class DegenerateSampleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

double mean(std::span<const double> xs);
// Unbiased (n - 1) standard deviation.
double sample_sd(std::span<const double> xs);

// Student t cumulative distribution.
double student_t_cdf(double t, double df);
double two_sided_p(double t, double df);

// Pooled-variance two-sample test with pooled-SD Cohen's d.
TTestResult independent_t_test(std::span<const double> a, std::span<const double> b);
TTestResult one_sample_t_test(std::span<const double> sample, double mu0);

}  // namespace curioflock::analysis
