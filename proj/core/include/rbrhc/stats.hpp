#pragma once

#include <span>

namespace rbrhc::stats {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for k successes out of n at normal quantile z.
Interval wilson_interval(long k, long n, double z = 1.959963984540054);

/// sqrt(p (1 - p) / n) with p = k / n.
double binomial_se(long k, long n);

double mean(std::span<const double> xs);
/// Standard error of the mean (sample standard deviation / sqrt(n)); 0 for n < 2.
double standard_error(std::span<const double> xs);

struct PairedT {
  double mean_diff = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  long n = 0;
};

/// Two-sided Student-t confidence interval of mean(a - b) over paired samples.
PairedT paired_t_interval(std::span<const double> a, std::span<const double> b,
                          double confidence = 0.95);

}  // namespace rbrhc::stats
