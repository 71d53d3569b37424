#pragma once

#include <vector>

#include <Eigen/Dense>

namespace gridcast {

/// VAR(p) fitted by per-equation least squares. Full cross-series
/// coefficient matrices for small systems (<= 10 series), diagonal
/// per-series AR otherwise, where a full VAR would be ill-posed.
struct VarFit {
  int p = 1;
  bool diagonal = false;
  Eigen::VectorXd intercept;
  std::vector<Eigen::MatrixXd> lag_coef; // one m x m matrix per lag
  Eigen::MatrixXd residual_cov;
  int n_obs = 0; // usable observations after lagging
};

VarFit fit_var(const Eigen::MatrixXd& series /* T x m */, int p);

/// One-step forecast from the last p rows of `recent` (time ascending).
Eigen::VectorXd var_one_step(const VarFit& fit, const Eigen::MatrixXd& recent);

/// One-step-ahead forecasts over a test range using observed lags:
/// prediction for row t uses series rows t-p..t-1. Returns rows
/// first_forecast..T-1.
Eigen::MatrixXd var_forecast_one_step(const VarFit& fit, const Eigen::MatrixXd& series,
                                      int first_forecast);

/// Iterated multi-step path of `steps` rows, feeding forecasts back in.
Eigen::MatrixXd var_forecast_path(const VarFit& fit, const Eigen::MatrixXd& history,
                                  int steps);

struct MseReport {
  Eigen::VectorXd per_series;  // time-averaged squared error per series
  double grand_mean = 0.0;     // mean over every (time, series) cell
  double dispersion = 0.0;     // std over time of the series-averaged squared error
};

MseReport evaluate_mse(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& actuals);

} // namespace gridcast
