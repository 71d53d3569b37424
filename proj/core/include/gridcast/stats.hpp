#pragma once

#include <span>
#include <vector>

namespace gridcast {

double mean(std::span<const double> xs);
double variance(std::span<const double> xs); // sample variance (n-1)
double stddev(std::span<const double> xs);

double normal_cdf(double z);
/// Two-sided normal p-value for a z statistic.
double normal_pvalue(double z);
/// Upper tail of the chi-square distribution with 1 degree of freedom.
double chi2_sf_1df(double x);

struct KsResult {
  double statistic; // sup |F_n - F|
  double p_value;   // asymptotic Kolmogorov p-value
};

/// One-sample Kolmogorov-Smirnov test of `xs` against the unit-rate
/// exponential distribution.
KsResult ks_test_exp1(std::vector<double> xs);

/// Significance stars in the journal convention: * p<0.05, ** p<0.01,
/// *** p<0.001.
const char* significance_stars(double p_value);

} // namespace gridcast
