#include "gridcast/stats.hpp"

#include <algorithm>
#include <cmath>

#include "gridcast/error.hpp"

namespace gridcast {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error("mean of empty range");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw Error("variance needs at least 2 values");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730951); }

double normal_pvalue(double z) { return std::erfc(std::abs(z) / 1.4142135623730951); }

double chi2_sf_1df(double x) {
  if (x <= 0.0) return 1.0;
  return std::erfc(std::sqrt(x / 2.0));
}

namespace {

// Asymptotic Kolmogorov distribution tail with the Stephens small-sample
// correction for the effective sample size.
double kolmogorov_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

} // namespace

KsResult ks_test_exp1(std::vector<double> xs) {
  if (xs.empty()) throw Error("KS test on empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = 1.0 - std::exp(-xs[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(f - lo, hi - f));
  }
  return KsResult{d, kolmogorov_pvalue(d, xs.size())};
}

const char* significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

} // namespace gridcast
