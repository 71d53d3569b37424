#include "gridcast/baselines.hpp"

#include <cmath>

#include "gridcast/error.hpp"

namespace gridcast {

namespace {

constexpr int kMaxFullVarSeries = 10;

} // namespace

VarFit fit_var(const Eigen::MatrixXd& series, int p) {
  const int T = static_cast<int>(series.rows());
  const int m = static_cast<int>(series.cols());
  if (p < 1) throw ValidationError("VAR lag order must be >= 1");
  if (T <= p + 1) throw ValidationError("series too short for VAR(" + std::to_string(p) + ")");

  VarFit fit;
  fit.p = p;
  fit.diagonal = m > kMaxFullVarSeries;
  fit.intercept = Eigen::VectorXd::Zero(m);
  fit.lag_coef.assign(p, Eigen::MatrixXd::Zero(m, m));
  fit.n_obs = T - p;

  Eigen::MatrixXd resid(fit.n_obs, m);

  if (!fit.diagonal) {
    // Shared design: [1, y_{t-1}, ..., y_{t-p}].
    const int k = 1 + m * p;
    Eigen::MatrixXd X(fit.n_obs, k);
    for (int t = p; t < T; ++t) {
      X(t - p, 0) = 1.0;
      for (int lag = 1; lag <= p; ++lag) {
        X.block(t - p, 1 + (lag - 1) * m, 1, m) = series.row(t - lag);
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k) throw FitError("rank-deficient VAR design");
    for (int eq = 0; eq < m; ++eq) {
      const Eigen::VectorXd y = series.col(eq).segment(p, fit.n_obs);
      const Eigen::VectorXd coef = qr.solve(y);
      fit.intercept(eq) = coef(0);
      for (int lag = 1; lag <= p; ++lag) {
        fit.lag_coef[lag - 1].row(eq) = coef.segment(1 + (lag - 1) * m, m).transpose();
      }
      resid.col(eq) = y - X * coef;
    }
  } else {
    // Per-series AR(p): each equation regresses on its own lags only.
    const int k = 1 + p;
    for (int eq = 0; eq < m; ++eq) {
      Eigen::MatrixXd X(fit.n_obs, k);
      Eigen::VectorXd y(fit.n_obs);
      for (int t = p; t < T; ++t) {
        X(t - p, 0) = 1.0;
        for (int lag = 1; lag <= p; ++lag) X(t - p, lag) = series(t - lag, eq);
        y(t - p) = series(t, eq);
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
      if (qr.rank() < k) throw FitError("rank-deficient AR design for series " +
                                        std::to_string(eq));
      const Eigen::VectorXd coef = qr.solve(y);
      fit.intercept(eq) = coef(0);
      for (int lag = 1; lag <= p; ++lag) fit.lag_coef[lag - 1](eq, eq) = coef(lag);
      resid.col(eq) = y - X * coef;
    }
  }

  const int dof = std::max(1, fit.n_obs - (fit.diagonal ? 1 + p : 1 + m * p));
  fit.residual_cov = resid.transpose() * resid / static_cast<double>(dof);
  return fit;
}

Eigen::VectorXd var_one_step(const VarFit& fit, const Eigen::MatrixXd& recent) {
  if (static_cast<int>(recent.rows()) < fit.p) {
    throw ValidationError("need at least p recent observations");
  }
  Eigen::VectorXd out = fit.intercept;
  const int last = static_cast<int>(recent.rows()) - 1;
  for (int lag = 1; lag <= fit.p; ++lag) {
    out += fit.lag_coef[lag - 1] * recent.row(last - lag + 1).transpose();
  }
  return out;
}

Eigen::MatrixXd var_forecast_one_step(const VarFit& fit, const Eigen::MatrixXd& series,
                                      int first_forecast) {
  const int T = static_cast<int>(series.rows());
  if (first_forecast < fit.p || first_forecast >= T) {
    throw ValidationError("forecast start must lie in [p, T)");
  }
  Eigen::MatrixXd out(T - first_forecast, series.cols());
  for (int t = first_forecast; t < T; ++t) {
    out.row(t - first_forecast) =
        var_one_step(fit, series.middleRows(t - fit.p, fit.p)).transpose();
  }
  return out;
}

Eigen::MatrixXd var_forecast_path(const VarFit& fit, const Eigen::MatrixXd& history,
                                  int steps) {
  if (static_cast<int>(history.rows()) < fit.p) {
    throw ValidationError("history shorter than lag order");
  }
  const int m = static_cast<int>(history.cols());
  Eigen::MatrixXd buf(fit.p + steps, m);
  buf.topRows(fit.p) = history.bottomRows(fit.p);
  for (int s = 0; s < steps; ++s) {
    buf.row(fit.p + s) = var_one_step(fit, buf.middleRows(s, fit.p)).transpose();
  }
  return buf.bottomRows(steps);
}

MseReport evaluate_mse(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& actuals) {
  if (predictions.rows() != actuals.rows() || predictions.cols() != actuals.cols()) {
    throw ValidationError("prediction and actual matrices have mismatched shapes");
  }
  const int T = static_cast<int>(predictions.rows());
  const int m = static_cast<int>(predictions.cols());
  if (T == 0 || m == 0) throw ValidationError("empty evaluation matrices");

  const Eigen::ArrayXXd sq = (predictions - actuals).array().square();
  MseReport rep;
  rep.per_series = sq.colwise().mean().matrix().transpose();
  rep.grand_mean = sq.mean();
  // Dispersion: variability over time of the cross-series average squared
  // error, matching the +/- column of the comparison table.
  const Eigen::ArrayXd per_time = sq.rowwise().mean();
  if (T > 1) {
    const double mu = per_time.mean();
    rep.dispersion = std::sqrt((per_time - mu).square().sum() / (T - 1));
  }
  return rep;
}

} // namespace gridcast
