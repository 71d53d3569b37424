#pragma once

#include <span>
#include <vector>

#include "gridcast/simulate.hpp"

namespace gridcast {

/// Nonconformity scores r[i*n_sub + s] >= 0 for calibration steps i.
struct ResidualStore {
  int n_steps = 0;
  int n_sub = 0;
  std::vector<double> r;

  double at(int step, int sub) const { return r[static_cast<std::size_t>(step) * n_sub + sub]; }
  /// Residuals of one substation across calibration steps.
  std::vector<double> substation(int sub) const;
};

/// r_{i,s} = min over replications k of |yhat_{i,s}^{(k)} - y_{i,s}|.
ResidualStore nonconformity_scores(const IndexMatrix& ensemble, const MetricMatrix& actual);

/// Split-conformal empirical quantile: the ceil((1-alpha)(n+1))-th smallest
/// residual; the maximum residual when that index exceeds n.
double conformal_quantile(std::span<const double> residuals, double alpha);

struct PredictionInterval {
  int step = 0; // future step index (0-based within the forecast horizon)
  int sub = 0;
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0; // 1 - alpha
};

/// Per (future step, substation): [min_k yhat - Qhat_s, max_k yhat + Qhat_s],
/// lower clipped at zero for nonnegative metrics. The point prediction is
/// the designated replication `point_rep`.
std::vector<PredictionInterval> prediction_intervals(const IndexMatrix& future_ensemble,
                                                     std::span<const double> q_hat,
                                                     double alpha, bool clip_at_zero = true,
                                                     int point_rep = 0);

/// Per-substation quantiles from a calibration residual store.
std::vector<double> conformal_quantiles(const ResidualStore& residuals, double alpha);

/// Share of actuals falling inside their interval. Intervals and actuals
/// are matched on (step, sub); every interval must have an actual.
double empirical_coverage(std::span<const PredictionInterval> intervals,
                          const MetricMatrix& actuals);

} // namespace gridcast
