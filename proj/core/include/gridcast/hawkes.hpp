#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridcast/error.hpp"
#include "gridcast/ingest.hpp"
#include "gridcast/reliability.hpp"

namespace gridcast {

/// One bin of the mark discretization. Duration bins are half-open
/// [lo, hi) on minutes; customer bins are integer ranges. `rep` is the
/// value carried into index aggregation.
struct MarkBin {
  double lo = 0.0;
  double hi = 0.0; // +inf for the open bin
  double rep = 0.0;
};

/// Product discretization of (duration, customers affected). Class index is
/// duration_bin * n_customer_bins + customer_bin. Representatives are
/// geometric midpoints (zero lower edges replaced by 1, the smallest value
/// at the data's resolution); open bins use 1.5x their lower edge.
class MarkSpace {
 public:
  static MarkSpace defaults(); // durations {0-5,5-15,15-60,60-240,240+}, customers {1-10,11-100,101-1000,1000+}
  /// Builds bins from finite upper edges; an open bin is appended to each axis.
  static MarkSpace from_edges(std::vector<double> duration_uppers,
                              std::vector<double> customer_uppers);

  int n_duration_bins() const { return static_cast<int>(duration_bins_.size()); }
  int n_customer_bins() const { return static_cast<int>(customer_bins_.size()); }
  int n_classes() const { return n_duration_bins() * n_customer_bins(); }

  int duration_bin(double minutes) const;
  int customer_bin(double customers) const;
  int classify(double duration_minutes, double customers) const;
  EventWeight representative(int cls) const;

  const std::vector<MarkBin>& duration_bins() const { return duration_bins_; }
  const std::vector<MarkBin>& customer_bins() const { return customer_bins_; }

 private:
  std::vector<MarkBin> duration_bins_;
  std::vector<MarkBin> customer_bins_;
};

/// Marked event in model time: days since panel start.
struct HawkesEvent {
  double t = 0.0;
  int sub = 0;
  int mark = 0;
};

/// Monthly covariate matrices driving the base rate and mark logits.
/// boundaries_days has one more entry than values; empty means no
/// covariates (d = 0).
struct MonthlyCovariates {
  std::vector<double> boundaries_days;
  std::vector<Eigen::MatrixXd> values; // per month: n_sub x d

  int d() const { return values.empty() ? 0 : static_cast<int>(values.front().cols()); }
  int n_months() const { return static_cast<int>(values.size()); }
  /// Month index containing time t; throws when covariates exist but t is
  /// outside their coverage.
  int month_at(double t) const;
};

/// k-nearest-neighbour structure over substations (great-circle distance,
/// self included). neighbors[s] lists the sources whose events excite s;
/// reverse_count[s'] counts the targets excited by an event at s'.
struct NeighborGraph {
  std::vector<std::vector<int>> neighbors;
  std::vector<int> reverse_count;
  int k = 1;
};

NeighborGraph build_neighbor_graph(const SubstationRegistry& registry, int k);
double great_circle_km(double lon1, double lat1, double lon2, double lat2);

struct HawkesParams {
  std::vector<double> mu;  // base rate per substation, events/day
  double c = 0.0;          // linear trend slope, 1/day
  Eigen::VectorXd phi;     // covariate weights, length d
  double alpha = 0.2;      // branching ratio, in (0,1)
  double beta = 1.0;       // kernel decay, 1/day
  Eigen::MatrixXd theta;   // mark logit weights, n_classes x (2 + n_sub + d)
  int k_nn = 5;
  MarkSpace marks = MarkSpace::defaults();
  double time_scale_days = 1.0; // scales the t feature of the mark logits

  int n_sub() const { return static_cast<int>(mu.size()); }
  int feature_dim() const { return 2 + n_sub() + static_cast<int>(phi.size()); }
};

/// Immutable fitting/evaluation dataset.
struct HawkesData {
  std::vector<HawkesEvent> events; // nondecreasing t, all within [0, horizon)
  double horizon_days = 0.0;
  int n_sub = 0;
  MonthlyCovariates covariates;
  NeighborGraph graph;
};

HawkesData make_hawkes_data(std::vector<HawkesEvent> events, double horizon_days, int n_sub,
                            MonthlyCovariates covariates, NeighborGraph graph);

struct CovariateStandardization {
  Eigen::VectorXd means;
  Eigen::VectorXd sds; // zero-variance columns keep sd 1
};

CovariateStandardization compute_standardization(const CovariatePanel& panel,
                                                 MonthRange window,
                                                 std::span<const std::string> columns);

/// Extracts monthly covariate matrices (registry row order) over `window`,
/// with day offsets relative to `time_origin`. Missing cells are a hard
/// error. When a standardization is given, columns are centered and scaled
/// with it.
MonthlyCovariates monthly_covariates_from_panel(
    const CovariatePanel& panel, const SubstationRegistry& registry, MonthRange window,
    YearMonth time_origin, std::span<const std::string> columns,
    const CovariateStandardization* standardization = nullptr);

/// Converts outage events to model time (days since the first instant of
/// panel_start), classifying marks. Events at unknown substations throw.
std::vector<HawkesEvent> events_to_hawkes(std::span<const OutageEvent> events,
                                          const SubstationRegistry& registry,
                                          YearMonth panel_start, const MarkSpace& marks);

void validate_params(const HawkesParams& params, int n_sub, int d);

/// Conditional ground intensity at (t, sub) given the history, in
/// events/day: mu_s(1+ct) + phi.x + sum over exciting events of
/// alpha*beta*exp(-beta(t-t')). Throws when the computed value is negative
/// (inconsistent parameters are never clamped).
double ground_intensity(double t, int sub, std::span<const HawkesEvent> history,
                        const HawkesParams& params, const MonthlyCovariates& X,
                        const NeighborGraph& graph);

/// Mark class distribution at (t, sub): softmax of the affine logit map over
/// features [1, t/T, onehot(sub), x].
Eigen::VectorXd mark_distribution(double t, int sub, const HawkesParams& params,
                                  const MonthlyCovariates& X);

/// Natural-parameter order used by gradients: [mu(0..S-1), c, phi(0..d-1),
/// alpha, beta, theta(row-major)].
struct ParamLayout {
  int n_sub = 0, d = 0, n_classes = 0, feat = 0;
  int i_mu(int s) const { return s; }
  int i_c() const { return n_sub; }
  int i_phi(int k) const { return n_sub + 1 + k; }
  int i_alpha() const { return n_sub + 1 + d; }
  int i_beta() const { return n_sub + 2 + d; }
  int i_theta(int m, int j) const { return n_sub + 3 + d + m * feat + j; }
  int size() const { return n_sub + 3 + d + n_classes * feat; }
};

struct LogLikResult {
  double value = 0.0;
  Eigen::VectorXd gradient; // natural-parameter order; empty unless requested
};

/// Exact log-likelihood: event sums of log ground intensity and log mark
/// probability minus the closed-form compensator (linear base rate and
/// piecewise-constant covariates integrate analytically; the exponential
/// kernel integrates to alpha*(1 - exp(-beta(T - t_j))) per event, scaled by
/// its reverse-neighbour count). Throws on invalid parameters or
/// non-positive intensity at an event.
LogLikResult log_likelihood(const HawkesParams& params, const HawkesData& data,
                            bool want_gradient = false);

/// Closed-form integral of the ground intensity over [0, T) summed across
/// substations. Exposed so tests can check it against direct quadrature of
/// ground_intensity.
double compensator(const HawkesParams& params, const HawkesData& data);

struct HawkesFitConfig {
  int max_iterations = 2000;
  double tolerance = 1e-8;   // relative log-likelihood change
  double armijo = 1e-4;
  int max_backtracks = 60;
  std::uint64_t seed = 0;    // recorded in metadata; the fit itself is deterministic
};

struct HawkesFitResult {
  HawkesParams params;
  double log_lik = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trajectory; // log-likelihood per accepted step
};

class HawkesFitError : public FitError {
 public:
  HawkesFitError(const std::string& what, std::vector<double> trajectory)
      : FitError(what), trajectory(std::move(trajectory)) {}
  std::vector<double> trajectory;
};

/// Maximum-likelihood fit by full-batch gradient ascent with backtracking
/// line search. Constraints are enforced by smooth reparameterization
/// (alpha through a sigmoid, beta and mu through exponentials), so the
/// fitted branching ratio is always subcritical. Throws HawkesFitError with
/// the log-likelihood trajectory on non-convergence.
HawkesFitResult fit_mle(const HawkesData& data, const HawkesFitConfig& config,
                        const HawkesParams* initial = nullptr);

/// Versioned on-disk model document.
struct HawkesModelFile {
  HawkesParams params;
  std::vector<std::string> substation_ids;
  std::vector<std::string> covariate_columns; // empty when d = 0
  Eigen::VectorXd covariate_means;            // standardization applied at fit time
  Eigen::VectorXd covariate_sds;
  YearMonth panel_start{1970, 1};
  double horizon_days = 0.0;
  double fit_log_lik = 0.0;
  int fit_iterations = 0;
  bool fit_converged = false;
  std::uint64_t seed = 0;
};

void save_hawkes_model(const std::string& path, const HawkesModelFile& model);
HawkesModelFile load_hawkes_model(const std::string& path);

} // namespace gridcast
