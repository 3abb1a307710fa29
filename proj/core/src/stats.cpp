#include "rbrhc/stats.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace rbrhc::stats {

Interval wilson_interval(long k, long n, double z) {
  if (n <= 0 || k < 0 || k > n) throw std::invalid_argument("wilson interval needs 0 <= k <= n, n > 0");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The closed-form endpoints at k = 0 and k = n are exactly 0 and 1; rounding leaves residue.
  const double lo = k == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = k == n ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

double binomial_se(long k, long n) {
  if (n <= 0) return 0.0;
  const double p = static_cast<double>(k) / static_cast<double>(n);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double standard_error(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double n = static_cast<double>(xs.size());
  return std::sqrt(ss / (n - 1.0) / n);
}

PairedT paired_t_interval(std::span<const double> a, std::span<const double> b, double confidence) {
  if (a.size() != b.size()) throw std::invalid_argument("paired samples differ in length");
  if (a.size() < 2) throw std::invalid_argument("paired t interval needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  PairedT out;
  out.n = static_cast<long>(d.size());
  out.mean_diff = mean(d);
  out.se = standard_error(d);
  boost::math::students_t dist(static_cast<double>(d.size() - 1));
  const double q = boost::math::quantile(dist, 0.5 + 0.5 * confidence);
  out.lo = out.mean_diff - q * out.se;
  out.hi = out.mean_diff + q * out.se;
  return out;
}

}  // namespace rbrhc::stats
