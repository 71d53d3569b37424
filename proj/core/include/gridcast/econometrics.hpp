#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridcast/error.hpp"
#include "gridcast/reliability.hpp"

namespace gridcast {

/// Estimation-ready panel: outcome Y, treatment S (rolling SAIDI),
/// frequency F (rolling SAIFI, uninstrumented), instrument G (rolling gust
/// exposure), controls X, a cluster id (substation: fixed effect and
/// clustering unit) and a time id (quarter fixed effect) per row.
struct EstimationPanel {
  std::vector<std::string> cluster_ids;
  std::vector<int> time_ids;
  Eigen::VectorXd y;
  Eigen::VectorXd S;
  Eigen::VectorXd F;
  Eigen::VectorXd G;
  Eigen::MatrixXd X; // n x d controls
  std::vector<std::string> control_names;

  int n() const { return static_cast<int>(y.size()); }
  void validate() const; // shapes, finiteness, >= 2 clusters
};

struct PanelSpecArgs {
  int horizon = 3; // months, one of {3, 6, 9, 12}
  std::string outcome = "Y";
  std::string treatment;  // default "s<h>"
  std::string frequency;  // default "f<h>"
  std::string instrument; // default "g<h>"
  std::vector<std::string> controls; // empty: every other numeric column
};

/// Extracts an EstimationPanel from a reliability panel, dropping rows with
/// unavailable rolling windows (the shrinking leading months).
EstimationPanel panel_from_reliability(const ReliabilityPanel& panel,
                                       const PanelSpecArgs& args);

/// Built regression design: intercept, named regressors and one-dropped
/// fixed-effect dummies.
struct DesignInfo {
  std::vector<std::string> names;
  int idx_intercept = -1;
  int idx_S = -1;
  int idx_F = -1;
  int idx_G = -1;
  int idx_eps = -1;
  std::vector<int> control_cols;
  std::string dropped_time_level;
  std::string dropped_cluster_level;
};

struct Design {
  Eigen::MatrixXd X;
  DesignInfo info;
};

enum class DesignKind { first_stage, structural };

/// structural designs carry [const, S, F, controls, eps, time FE, cluster FE];
/// first_stage carries [const, G, controls, time FE, cluster FE].
Design build_design(const EstimationPanel& panel, DesignKind kind,
                    const Eigen::VectorXd* eps_hat = nullptr);

/// First-stage least squares of S on the instrument, controls and fixed
/// effects, with CR1 cluster-robust (by substation) covariance. The
/// instrument F statistic is the squared cluster-robust t statistic.
struct IvFit {
  std::vector<std::string> names;
  Eigen::VectorXd coef;
  Eigen::MatrixXd vcov;
  Eigen::VectorXd residuals;
  double f_stat = 0.0;
  double r_squared = 0.0;
  int instrument_index = -1;
  int n_clusters = 0;
};

IvFit fit_first_stage(const EstimationPanel& panel);

/// Weak-instrument-robust Anderson-Rubin test of the hypothesized structural
/// effect beta0: cluster-robust Wald chi-square(1) on the instrument in the
/// regression of (y - beta0 * S) on instrument, controls and fixed effects.
struct ArTest {
  double statistic = 0.0;
  double p_value = 1.0;
};

ArTest anderson_rubin(const EstimationPanel& panel, double beta0 = 0.0);

class SeparationError : public FitError {
 public:
  using FitError::FitError;
};

/// Bare logistic maximum-likelihood fit by IRLS on an arbitrary design.
/// Convergence when the update's max-norm falls below `tol`. Throws
/// SeparationError when a standardized coefficient diverges and FitError on
/// non-convergence. Column names are used only for diagnostics.
Eigen::VectorXd logit_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y01,
                           const std::vector<std::string>& names = {}, int max_iter = 100,
                           double tol = 1e-8, int* iterations = nullptr);

/// Bare log-link Gaussian fit: minimizes sum (y - exp(X gamma))^2 by damped
/// Gauss-Newton.
Eigen::VectorXd glm_log_gauss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              int max_iter = 200, double tol = 1e-8,
                              int* iterations = nullptr);

/// A fitted generalized linear part. Coefficients are aligned with the full
/// structural design; columns dropped for having no variation in the
/// estimation subsample carry zero coefficients and are listed in
/// `dropped_columns`.
struct GlmFit {
  std::vector<std::string> names;
  Eigen::VectorXd coef;
  Eigen::MatrixXd vcov;
  int iterations = 0;
  int n_obs = 0;
  int n_clusters = 0;
  double log_lik = 0.0; // logistic part only; 0 for the GLM part
  std::vector<std::string> dropped_columns;
};

/// Logistic regression of D = 1{Y > 0} by IRLS with the control-function
/// residual included. Perfect separation (|coef| > 30 on a standardized
/// column) raises SeparationError.
GlmFit fit_logit(const EstimationPanel& panel, const Eigen::VectorXd& eps_hat);

/// Log-link Gaussian GLM fitted on the Y > 0 rows by damped Gauss-Newton on
/// the squared-error objective sum (Y - exp(eta))^2.
GlmFit fit_glm_log(const EstimationPanel& panel, const Eigen::VectorXd& eps_hat);

struct TwoPartFit {
  IvFit first_stage;
  GlmFit logit;
  GlmFit glm;
  Design design; // structural design over all panel rows, eps column filled
  Eigen::VectorXd eps_hat;
  int horizon = 3;
};

TwoPartFit fit_two_part(const EstimationPanel& panel, int horizon = 3);

/// E[Y | x] = logistic(x.beta) * exp(x.gamma) for one design row.
double two_part_expectation(const TwoPartFit& fit, const Eigen::VectorXd& design_row);

enum class TreatmentVar { duration, frequency };

/// Sample-mean analytic derivative of the combined expectation with respect
/// to the chosen treatment column.
double ame_point(const TwoPartFit& fit, TreatmentVar var);

struct BootstrapConfig {
  int replications = 200;
  std::uint64_t seed = 1;
  int threads = 1;
  double max_failure_rate = 0.05;
};

/// Cluster bootstrap over the full pipeline (first stage, logit, GLM):
/// substations are resampled with replacement, each draw keeping its own
/// fixed effect. Returns one statistic vector per successful replicate;
/// throws when more than max_failure_rate of replicates fail.
std::vector<std::vector<double>> cluster_bootstrap(
    const EstimationPanel& panel, const BootstrapConfig& config, int horizon,
    const std::function<std::vector<double>(const TwoPartFit&)>& statistic);

struct AmeEstimate {
  std::string variable;
  double value = 0.0;
  double std_error = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

AmeEstimate average_marginal_effect(const EstimationPanel& panel, const TwoPartFit& fit,
                                    TreatmentVar var, const BootstrapConfig& config);

struct MarginPoint {
  double value = 0.0;        // grid value of the treatment
  double mean_outcome = 0.0; // average combined expectation at that value
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

/// Predictive margins: set the treatment column to each grid value in every
/// row, average the combined expectation, bootstrap the confidence band.
std::vector<MarginPoint> predictive_margins(const EstimationPanel& panel,
                                            const TwoPartFit& fit, TreatmentVar var,
                                            std::span<const double> grid,
                                            const BootstrapConfig& config);

/// Mean combined expectation with the treatment column forced to `value`.
double margin_at(const TwoPartFit& fit, TreatmentVar var, double value);

/// Variance inflation factors: VIF_j = 1 / (1 - R^2_j) from regressing
/// column j on the others plus an intercept. Exactly collinear columns
/// report +infinity.
std::vector<double> vif(const Eigen::MatrixXd& columns);

} // namespace gridcast
