#include "gridcast/econometrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include "gridcast/error.hpp"
#include "gridcast/rng.hpp"
#include "gridcast/stats.hpp"

namespace gridcast {

namespace {

constexpr double kSeparationThreshold = 30.0;

std::vector<std::string> sorted_unique(const std::vector<std::string>& xs) {
  std::vector<std::string> out = xs;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> sorted_unique(const std::vector<int>& xs) {
  std::vector<int> out = xs;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct ClusterIndex {
  std::vector<std::string> levels;
  std::vector<int> row_level; // per row

  explicit ClusterIndex(const std::vector<std::string>& ids) {
    levels = sorted_unique(ids);
    std::map<std::string, int> pos;
    for (std::size_t i = 0; i < levels.size(); ++i) pos[levels[i]] = static_cast<int>(i);
    row_level.reserve(ids.size());
    for (const auto& id : ids) row_level.push_back(pos[id]);
  }
  int n_clusters() const { return static_cast<int>(levels.size()); }
};

double cr1_factor(int n_clusters, int n, int k) {
  const double g = n_clusters;
  return g / (g - 1.0) * (static_cast<double>(n) - 1.0) / (static_cast<double>(n) - k);
}

/// vcov = bread_inv * [sum_g (X_g' w_g)(X_g' w_g)'] * bread_inv * CR1,
/// with per-row score x_i * w_i.
Eigen::MatrixXd cluster_sandwich(const Eigen::MatrixXd& bread_inv, const Eigen::MatrixXd& X,
                                 const Eigen::VectorXd& w, const ClusterIndex& clusters) {
  const int p = static_cast<int>(X.cols());
  const int g = clusters.n_clusters();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(g, p);
  for (int i = 0; i < X.rows(); ++i) {
    sums.row(clusters.row_level[i]) += w(i) * X.row(i);
  }
  Eigen::MatrixXd meat = sums.transpose() * sums;
  Eigen::MatrixXd vcov = bread_inv * meat * bread_inv;
  vcov *= cr1_factor(g, static_cast<int>(X.rows()), p);
  return vcov;
}

struct OlsResult {
  Eigen::VectorXd coef;
  Eigen::VectorXd resid;
  Eigen::MatrixXd xtx_inv;
};

OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) {
    throw FitError("rank-deficient design (rank " + std::to_string(qr.rank()) + " of " +
                   std::to_string(X.cols()) + " columns)");
  }
  OlsResult r;
  r.coef = qr.solve(y);
  r.resid = y - X * r.coef;
  const Eigen::MatrixXd xtx = X.transpose() * X;
  r.xtx_inv = xtx.ldlt().solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
  return r;
}

double logistic(double eta) {
  if (eta >= 0.0) {
    return 1.0 / (1.0 + std::exp(-eta));
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

} // namespace

// ------------------------------------------------------------------ panel

void EstimationPanel::validate() const {
  const int N = n();
  if (N < 1) throw ValidationError("empty estimation panel");
  if (static_cast<int>(cluster_ids.size()) != N || static_cast<int>(time_ids.size()) != N ||
      S.size() != N || F.size() != N || G.size() != N || X.rows() != N) {
    throw ValidationError("estimation panel columns have mismatched lengths");
  }
  if (static_cast<int>(control_names.size()) != X.cols()) {
    throw ValidationError("control names do not match control columns");
  }
  auto check_finite = [](const Eigen::VectorXd& v, const char* name) {
    if (!v.allFinite()) throw ValidationError(std::string("non-finite values in ") + name);
  };
  check_finite(y, "Y");
  check_finite(S, "S");
  check_finite(F, "F");
  check_finite(G, "G");
  if (!X.allFinite()) throw ValidationError("non-finite values in controls");
  if (sorted_unique(cluster_ids).size() < 2) {
    throw ValidationError("need at least 2 clusters");
  }
}

EstimationPanel panel_from_reliability(const ReliabilityPanel& panel,
                                       const PanelSpecArgs& args) {
  static const std::set<int> allowed{3, 6, 9, 12};
  if (!allowed.count(args.horizon)) {
    throw ValidationError("horizon must be one of 3, 6, 9, 12 months");
  }
  const std::string h = std::to_string(args.horizon);
  const std::string treat = args.treatment.empty() ? "s" + h : args.treatment;
  const std::string freq = args.frequency.empty() ? "f" + h : args.frequency;
  const std::string instr = args.instrument.empty() ? "g" + h : args.instrument;

  const int c_y = panel.require_column(args.outcome);
  const int c_s = panel.require_column(treat);
  const int c_f = panel.require_column(freq);
  const int c_g = panel.require_column(instr);

  std::vector<std::string> controls = args.controls;
  if (controls.empty()) {
    // Everything that is not an outcome, index, rolling window or raw
    // event aggregate is a control.
    std::set<std::string> excluded{args.outcome, treat, freq, instr,
                                   "saidi", "saifi", "caidi", "installs_3m",
                                   "Y", "gust", kColEventCount, kColCustomerMinutes,
                                   kColCustomersInterrupted, kColInstalls};
    for (int hh : {3, 6, 9, 12}) {
      for (const char* pre : {"s", "f", "g"}) {
        excluded.insert(pre + std::to_string(hh));
      }
    }
    for (const auto& c : panel.columns) {
      if (!excluded.count(c)) controls.push_back(c);
    }
  }
  std::vector<int> c_ctrl;
  for (const auto& c : controls) c_ctrl.push_back(panel.require_column(c));

  std::vector<int> keep;
  for (std::size_t i = 0; i < panel.rows.size(); ++i) {
    const auto& vals = panel.rows[i].values;
    bool ok = std::isfinite(vals[c_y]) && std::isfinite(vals[c_s]) &&
              std::isfinite(vals[c_f]) && std::isfinite(vals[c_g]);
    for (int c : c_ctrl) ok = ok && std::isfinite(vals[c]);
    if (ok) keep.push_back(static_cast<int>(i));
  }
  if (keep.empty()) throw ValidationError("no usable rows after dropping missing cells");

  EstimationPanel out;
  const int N = static_cast<int>(keep.size());
  out.y.resize(N);
  out.S.resize(N);
  out.F.resize(N);
  out.G.resize(N);
  out.X.resize(N, static_cast<int>(c_ctrl.size()));
  out.control_names = controls;
  for (int i = 0; i < N; ++i) {
    const auto& row = panel.rows[keep[i]];
    out.cluster_ids.push_back(row.substation_id);
    out.time_ids.push_back(row.month.quarter_id());
    out.y(i) = row.values[c_y];
    out.S(i) = row.values[c_s];
    out.F(i) = row.values[c_f];
    out.G(i) = row.values[c_g];
    for (std::size_t c = 0; c < c_ctrl.size(); ++c) out.X(i, c) = row.values[c_ctrl[c]];
  }
  out.validate();
  return out;
}

// ----------------------------------------------------------------- design

Design build_design(const EstimationPanel& panel, DesignKind kind,
                    const Eigen::VectorXd* eps_hat) {
  panel.validate();
  const int N = panel.n();
  const int d = static_cast<int>(panel.X.cols());
  const auto times = sorted_unique(panel.time_ids);
  const auto clusters = sorted_unique(panel.cluster_ids);
  const bool structural = kind == DesignKind::structural;
  if (structural && (!eps_hat || eps_hat->size() != N)) {
    throw ValidationError("structural design requires a residual vector of panel length");
  }

  const int n_named = structural ? 3 : 2; // const + (S, F) or (G)
  const int p = n_named + d + (structural ? 1 : 0) +
                static_cast<int>(times.size()) - 1 + static_cast<int>(clusters.size()) - 1;
  Design dz;
  dz.X = Eigen::MatrixXd::Zero(N, p);
  auto& info = dz.info;
  int col = 0;

  info.idx_intercept = col;
  info.names.push_back("const");
  dz.X.col(col).setOnes();
  ++col;

  if (structural) {
    info.idx_S = col;
    info.names.push_back("S");
    dz.X.col(col) = panel.S;
    ++col;
    info.idx_F = col;
    info.names.push_back("F");
    dz.X.col(col) = panel.F;
    ++col;
  } else {
    info.idx_G = col;
    info.names.push_back("G");
    dz.X.col(col) = panel.G;
    ++col;
  }

  for (int k = 0; k < d; ++k) {
    info.control_cols.push_back(col);
    info.names.push_back(panel.control_names[k]);
    dz.X.col(col) = panel.X.col(k);
    ++col;
  }

  if (structural) {
    info.idx_eps = col;
    info.names.push_back("eps_hat");
    dz.X.col(col) = *eps_hat;
    ++col;
  }

  // One dummy per fixed-effect level, first level dropped against the
  // intercept; the dropped levels are recorded for reproducibility.
  std::map<int, int> time_pos;
  for (std::size_t i = 1; i < times.size(); ++i) {
    time_pos[times[i]] = col;
    info.names.push_back("q_" + std::to_string(times[i]));
    ++col;
  }
  info.dropped_time_level = "q_" + std::to_string(times.front());

  std::map<std::string, int> cl_pos;
  for (std::size_t i = 1; i < clusters.size(); ++i) {
    cl_pos[clusters[i]] = col;
    info.names.push_back("fe_" + clusters[i]);
    ++col;
  }
  info.dropped_cluster_level = "fe_" + clusters.front();

  for (int i = 0; i < N; ++i) {
    auto t_it = time_pos.find(panel.time_ids[i]);
    if (t_it != time_pos.end()) dz.X(i, t_it->second) = 1.0;
    auto c_it = cl_pos.find(panel.cluster_ids[i]);
    if (c_it != cl_pos.end()) dz.X(i, c_it->second) = 1.0;
  }
  return dz;
}

// ------------------------------------------------------------ first stage

IvFit fit_first_stage(const EstimationPanel& panel) {
  const Design dz = build_design(panel, DesignKind::first_stage);
  const ClusterIndex clusters(panel.cluster_ids);
  if (clusters.n_clusters() < 2) throw ValidationError("single cluster");

  const OlsResult r = ols(dz.X, panel.S);
  IvFit fit;
  fit.names = dz.info.names;
  fit.coef = r.coef;
  fit.residuals = r.resid;
  fit.instrument_index = dz.info.idx_G;
  fit.n_clusters = clusters.n_clusters();
  fit.vcov = cluster_sandwich(r.xtx_inv, dz.X, r.resid, clusters);

  const double se = std::sqrt(fit.vcov(fit.instrument_index, fit.instrument_index));
  const double t = fit.coef(fit.instrument_index) / se;
  fit.f_stat = t * t;

  const double ybar = panel.S.mean();
  const double tss = (panel.S.array() - ybar).square().sum();
  const double ssr = r.resid.squaredNorm();
  fit.r_squared = tss > 0.0 ? 1.0 - ssr / tss : 0.0;
  return fit;
}

ArTest anderson_rubin(const EstimationPanel& panel, double beta0) {
  const Design dz = build_design(panel, DesignKind::first_stage);
  const ClusterIndex clusters(panel.cluster_ids);
  const Eigen::VectorXd y_tilde = panel.y - beta0 * panel.S;
  const OlsResult r = ols(dz.X, y_tilde);
  const Eigen::MatrixXd vcov = cluster_sandwich(r.xtx_inv, dz.X, r.resid, clusters);
  const int ig = dz.info.idx_G;
  const double t = r.coef(ig) / std::sqrt(vcov(ig, ig));
  ArTest out;
  out.statistic = t * t;
  out.p_value = chi2_sf_1df(out.statistic);
  return out;
}

// ------------------------------------------------------------------ logit

namespace {

void check_separation(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X,
                      const std::vector<std::string>& names, int intercept_col) {
  for (int j = 0; j < X.cols(); ++j) {
    if (j == intercept_col) continue;
    const double m = X.col(j).mean();
    const double sd = std::sqrt((X.col(j).array() - m).square().sum() / X.rows());
    if (sd > 0.0 && std::abs(beta(j)) * sd > kSeparationThreshold) {
      const std::string name =
          j < static_cast<int>(names.size()) ? names[j] : "column " + std::to_string(j);
      throw SeparationError("perfect separation suspected on '" + name +
                            "' (standardized coefficient " +
                            std::to_string(beta(j) * sd) + ")");
    }
  }
}

/// Drops columns without variation over the estimation subsample (keeps the
/// intercept); returns kept column indices.
std::vector<int> usable_columns(const Eigen::MatrixXd& X, int intercept_col) {
  std::vector<int> keep;
  for (int j = 0; j < X.cols(); ++j) {
    if (j == intercept_col) {
      keep.push_back(j);
      continue;
    }
    const double lo = X.col(j).minCoeff();
    const double hi = X.col(j).maxCoeff();
    if (hi > lo) keep.push_back(j);
  }
  return keep;
}

} // namespace

Eigen::VectorXd logit_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y01,
                           const std::vector<std::string>& names, int max_iter, double tol,
                           int* iterations) {
  const int N = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd pvec(N), w(N);
  int it = 0;
  for (it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd eta = X * beta;
    for (int i = 0; i < N; ++i) {
      pvec(i) = logistic(eta(i));
      w(i) = std::max(pvec(i) * (1.0 - pvec(i)), 1e-10);
    }
    const Eigen::MatrixXd xwx = X.transpose() * w.asDiagonal() * X;
    const Eigen::VectorXd score = X.transpose() * (y01 - pvec);
    const Eigen::VectorXd delta = xwx.ldlt().solve(score);
    if (!delta.allFinite()) throw FitError("logistic IRLS produced non-finite update");
    beta += delta;
    check_separation(beta, X, names, -1);
    if (delta.lpNorm<Eigen::Infinity>() < tol) break;
  }
  if (it > max_iter) {
    throw FitError("logistic IRLS did not converge in " + std::to_string(max_iter) +
                   " iterations");
  }
  if (iterations) *iterations = it;
  return beta;
}

GlmFit fit_logit(const EstimationPanel& panel, const Eigen::VectorXd& eps_hat) {
  const Design dz = build_design(panel, DesignKind::structural, &eps_hat);
  const Eigen::MatrixXd& X = dz.X;
  const int N = panel.n();
  const int p = static_cast<int>(X.cols());
  Eigen::VectorXd D(N);
  for (int i = 0; i < N; ++i) D(i) = panel.y(i) > 0.0 ? 1.0 : 0.0;
  const double dbar = D.mean();
  if (dbar == 0.0 || dbar == 1.0) {
    throw SeparationError("outcome indicator is constant");
  }

  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p) throw FitError("rank-deficient design in logistic part");
  }

  int it = 0;
  Eigen::VectorXd beta = logit_irls(X, D, dz.info.names, 100, 1e-8, &it);
  Eigen::VectorXd pvec(N), w(N);

  const Eigen::VectorXd eta = X * beta;
  for (int i = 0; i < N; ++i) {
    pvec(i) = logistic(eta(i));
    w(i) = std::max(pvec(i) * (1.0 - pvec(i)), 1e-10);
  }
  const Eigen::MatrixXd xwx = X.transpose() * w.asDiagonal() * X;
  const Eigen::MatrixXd bread = xwx.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  const ClusterIndex clusters(panel.cluster_ids);

  GlmFit fit;
  fit.names = dz.info.names;
  fit.coef = beta;
  fit.vcov = cluster_sandwich(bread, X, D - pvec, clusters);
  fit.iterations = it;
  fit.n_obs = N;
  fit.n_clusters = clusters.n_clusters();
  for (int i = 0; i < N; ++i) {
    const double pi = std::clamp(pvec(i), 1e-12, 1.0 - 1e-12);
    fit.log_lik += D(i) > 0.5 ? std::log(pi) : std::log(1.0 - pi);
  }
  return fit;
}

// ------------------------------------------------------------- GLM (log)

Eigen::VectorXd glm_log_gauss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              int max_iter, double tol, int* iterations) {
  const int p = static_cast<int>(X.cols());
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(p);
  // Start from the intercept solution when a constant column exists.
  const double ymean = y.mean();
  if (ymean > 0.0) {
    for (int j = 0; j < p; ++j) {
      const double lo = X.col(j).minCoeff();
      const double hi = X.col(j).maxCoeff();
      if (lo == hi && lo != 0.0) {
        gamma(j) = std::log(ymean) / lo;
        break;
      }
    }
  }

  auto sse = [&](const Eigen::VectorXd& g) {
    const Eigen::ArrayXd eta = (X * g).array().min(50.0).max(-50.0);
    return (y.array() - eta.exp()).square().sum();
  };

  double cur = sse(gamma);
  int it = 0;
  for (it = 1; it <= max_iter; ++it) {
    const Eigen::ArrayXd eta = (X * gamma).array().min(50.0).max(-50.0);
    const Eigen::ArrayXd mu = eta.exp();
    const Eigen::VectorXd r = y.array() - mu;
    // Gauss-Newton step on sum (y - exp(eta))^2 with Jacobian diag(mu) * X.
    const Eigen::MatrixXd jtj = X.transpose() * (mu * mu).matrix().asDiagonal() * X;
    const Eigen::VectorXd jtr = X.transpose() * (mu * r.array()).matrix();
    Eigen::VectorXd delta = jtj.ldlt().solve(jtr);
    if (!delta.allFinite()) throw FitError("GLM Gauss-Newton produced non-finite update");
    double t = 1.0;
    double nxt = sse(gamma + delta);
    int halvings = 0;
    while (nxt > cur && halvings < 50) {
      t *= 0.5;
      nxt = sse(gamma + t * delta);
      ++halvings;
    }
    if (nxt > cur) break; // flat: no descent direction left
    gamma += t * delta;
    cur = nxt;
    if ((t * delta).lpNorm<Eigen::Infinity>() < tol) break;
  }
  if (it > max_iter) {
    throw FitError("GLM Gauss-Newton did not converge in " + std::to_string(max_iter) +
                   " iterations");
  }
  if (iterations) *iterations = it;
  return gamma;
}

GlmFit fit_glm_log(const EstimationPanel& panel, const Eigen::VectorXd& eps_hat) {
  const Design dz = build_design(panel, DesignKind::structural, &eps_hat);
  std::vector<int> rows;
  for (int i = 0; i < panel.n(); ++i) {
    if (panel.y(i) > 0.0) rows.push_back(i);
  }
  if (rows.size() < 2) throw ValidationError("too few positive-outcome rows for part 2");
  const int n = static_cast<int>(rows.size());
  const int p_full = static_cast<int>(dz.X.cols());

  Eigen::MatrixXd Xs(n, p_full);
  Eigen::VectorXd ys(n);
  std::vector<std::string> sub_clusters(n);
  for (int i = 0; i < n; ++i) {
    Xs.row(i) = dz.X.row(rows[i]);
    ys(i) = panel.y(rows[i]);
    sub_clusters[i] = panel.cluster_ids[rows[i]];
  }
  for (int i = 0; i < n; ++i) {
    if (!(ys(i) > 0.0)) throw ValidationError("part 2 requires strictly positive outcomes");
  }

  const std::vector<int> keep = usable_columns(Xs, dz.info.idx_intercept);
  const int p = static_cast<int>(keep.size());
  Eigen::MatrixXd Xr(n, p);
  for (int j = 0; j < p; ++j) Xr.col(j) = Xs.col(keep[j]);
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xr);
    if (qr.rank() < p) throw FitError("rank-deficient design in GLM part");
  }

  int it = 0;
  const Eigen::VectorXd gamma = glm_log_gauss(Xr, ys, 200, 1e-8, &it);

  const Eigen::ArrayXd eta = (Xr * gamma).array().min(50.0).max(-50.0);
  const Eigen::ArrayXd mu = eta.exp();
  const Eigen::MatrixXd jtj = Xr.transpose() * (mu * mu).matrix().asDiagonal() * Xr;
  const Eigen::MatrixXd bread = jtj.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  const ClusterIndex clusters(sub_clusters);
  const Eigen::VectorXd score_w = ((ys.array() - mu) * mu).matrix();
  const Eigen::MatrixXd vcov_r = cluster_sandwich(bread, Xr, score_w, clusters);

  GlmFit fit;
  fit.names = dz.info.names;
  fit.coef = Eigen::VectorXd::Zero(p_full);
  fit.vcov = Eigen::MatrixXd::Zero(p_full, p_full);
  for (int j = 0; j < p; ++j) {
    fit.coef(keep[j]) = gamma(j);
    for (int j2 = 0; j2 < p; ++j2) fit.vcov(keep[j], keep[j2]) = vcov_r(j, j2);
  }
  for (int j = 0; j < p_full; ++j) {
    if (std::find(keep.begin(), keep.end(), j) == keep.end()) {
      fit.dropped_columns.push_back(dz.info.names[j]);
    }
  }
  fit.iterations = it;
  fit.n_obs = n;
  fit.n_clusters = clusters.n_clusters();
  return fit;
}

// --------------------------------------------------------------- two-part

TwoPartFit fit_two_part(const EstimationPanel& panel, int horizon) {
  TwoPartFit fit;
  fit.first_stage = fit_first_stage(panel);
  fit.eps_hat = fit.first_stage.residuals;
  fit.logit = fit_logit(panel, fit.eps_hat);
  fit.glm = fit_glm_log(panel, fit.eps_hat);
  fit.design = build_design(panel, DesignKind::structural, &fit.eps_hat);
  fit.horizon = horizon;
  return fit;
}

double two_part_expectation(const TwoPartFit& fit, const Eigen::VectorXd& design_row) {
  const double eta1 = design_row.dot(fit.logit.coef);
  const double eta2 = design_row.dot(fit.glm.coef);
  return logistic(eta1) * std::exp(eta2);
}

namespace {

int treatment_column(const TwoPartFit& fit, TreatmentVar var) {
  return var == TreatmentVar::duration ? fit.design.info.idx_S : fit.design.info.idx_F;
}

} // namespace

double ame_point(const TwoPartFit& fit, TreatmentVar var) {
  const int v = treatment_column(fit, var);
  const double beta_v = fit.logit.coef(v);
  const double gamma_v = fit.glm.coef(v);
  const Eigen::VectorXd eta1 = fit.design.X * fit.logit.coef;
  const Eigen::VectorXd eta2 = fit.design.X * fit.glm.coef;
  double acc = 0.0;
  for (int i = 0; i < eta1.size(); ++i) {
    const double p = logistic(eta1(i));
    acc += (p * (1.0 - p) * beta_v + p * gamma_v) * std::exp(eta2(i));
  }
  return acc / static_cast<double>(eta1.size());
}

double margin_at(const TwoPartFit& fit, TreatmentVar var, double value) {
  const int v = treatment_column(fit, var);
  const double beta_v = fit.logit.coef(v);
  const double gamma_v = fit.glm.coef(v);
  const Eigen::VectorXd eta1 = fit.design.X * fit.logit.coef;
  const Eigen::VectorXd eta2 = fit.design.X * fit.glm.coef;
  double acc = 0.0;
  for (int i = 0; i < eta1.size(); ++i) {
    const double dv = value - fit.design.X(i, v);
    const double e1 = eta1(i) + beta_v * dv;
    const double e2 = eta2(i) + gamma_v * dv;
    acc += logistic(e1) * std::exp(e2);
  }
  return acc / static_cast<double>(eta1.size());
}

// -------------------------------------------------------------- bootstrap

namespace {

EstimationPanel resample_clusters(const EstimationPanel& panel, Rng& rng) {
  const auto levels = sorted_unique(panel.cluster_ids);
  std::map<std::string, std::vector<int>> rows_of;
  for (int i = 0; i < panel.n(); ++i) rows_of[panel.cluster_ids[i]].push_back(i);

  std::vector<int> picked_rows;
  std::vector<std::string> picked_labels;
  for (std::size_t draw = 0; draw < levels.size(); ++draw) {
    const auto& g = levels[rng.integer(levels.size())];
    // Each draw keeps a distinct label so repeated clusters get their own
    // fixed effect in the refit.
    const std::string label = g + "#" + std::to_string(draw);
    for (int r : rows_of[g]) {
      picked_rows.push_back(r);
      picked_labels.push_back(label);
    }
  }

  EstimationPanel out;
  const int N = static_cast<int>(picked_rows.size());
  out.cluster_ids = std::move(picked_labels);
  out.time_ids.reserve(N);
  out.y.resize(N);
  out.S.resize(N);
  out.F.resize(N);
  out.G.resize(N);
  out.X.resize(N, panel.X.cols());
  out.control_names = panel.control_names;
  for (int i = 0; i < N; ++i) {
    const int r = picked_rows[i];
    out.time_ids.push_back(panel.time_ids[r]);
    out.y(i) = panel.y(r);
    out.S(i) = panel.S(r);
    out.F(i) = panel.F(r);
    out.G(i) = panel.G(r);
    out.X.row(i) = panel.X.row(r);
  }
  return out;
}

} // namespace

std::vector<std::vector<double>> cluster_bootstrap(
    const EstimationPanel& panel, const BootstrapConfig& config, int horizon,
    const std::function<std::vector<double>(const TwoPartFit&)>& statistic) {
  if (config.replications < 2) throw ValidationError("need at least 2 bootstrap replicates");
  std::vector<std::optional<std::vector<double>>> results(config.replications);

  auto run_one = [&](int b) {
    Rng rng(child_seed(config.seed, static_cast<std::uint64_t>(b)));
    try {
      const EstimationPanel pb = resample_clusters(panel, rng);
      const TwoPartFit fb = fit_two_part(pb, horizon);
      results[b] = statistic(fb);
    } catch (const Error&) {
      results[b] = std::nullopt;
    }
  };

  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (int b = 0; b < config.replications; ++b) run_one(b);
  } else {
    std::vector<std::thread> pool;
    for (int tid = 0; tid < threads; ++tid) {
      pool.emplace_back([&, tid] {
        for (int b = tid; b < config.replications; b += threads) run_one(b);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<std::vector<double>> ok;
  for (auto& r : results) {
    if (r) ok.push_back(std::move(*r));
  }
  const int failures = config.replications - static_cast<int>(ok.size());
  if (failures > config.max_failure_rate * config.replications) {
    throw FitError("bootstrap failed in " + std::to_string(failures) + " of " +
                   std::to_string(config.replications) + " replicates");
  }
  return ok;
}

AmeEstimate average_marginal_effect(const EstimationPanel& panel, const TwoPartFit& fit,
                                    TreatmentVar var, const BootstrapConfig& config) {
  const double point = ame_point(fit, var);
  const auto stats = cluster_bootstrap(
      panel, config, fit.horizon,
      [var](const TwoPartFit& fb) { return std::vector<double>{ame_point(fb, var)}; });
  std::vector<double> draws;
  draws.reserve(stats.size());
  for (const auto& s : stats) draws.push_back(s[0]);
  const double se = stddev(draws);
  AmeEstimate est;
  est.variable = var == TreatmentVar::duration ? "S" : "F";
  est.value = point;
  est.std_error = se;
  est.ci_lower = point - 1.96 * se;
  est.ci_upper = point + 1.96 * se;
  return est;
}

std::vector<MarginPoint> predictive_margins(const EstimationPanel& panel,
                                            const TwoPartFit& fit, TreatmentVar var,
                                            std::span<const double> grid,
                                            const BootstrapConfig& config) {
  if (grid.empty()) throw ValidationError("empty margins grid");
  std::vector<double> gv(grid.begin(), grid.end());
  const auto stats = cluster_bootstrap(panel, config, fit.horizon,
                                       [var, &gv](const TwoPartFit& fb) {
                                         std::vector<double> out;
                                         out.reserve(gv.size());
                                         for (double v : gv) out.push_back(margin_at(fb, var, v));
                                         return out;
                                       });
  std::vector<MarginPoint> out;
  out.reserve(gv.size());
  for (std::size_t j = 0; j < gv.size(); ++j) {
    std::vector<double> draws;
    draws.reserve(stats.size());
    for (const auto& s : stats) draws.push_back(s[j]);
    MarginPoint mp;
    mp.value = gv[j];
    mp.mean_outcome = margin_at(fit, var, gv[j]);
    const double se = stddev(draws);
    mp.ci_lower = mp.mean_outcome - 1.96 * se;
    mp.ci_upper = mp.mean_outcome + 1.96 * se;
    out.push_back(mp);
  }
  return out;
}

// -------------------------------------------------------------------- VIF

std::vector<double> vif(const Eigen::MatrixXd& columns) {
  const int n = static_cast<int>(columns.rows());
  const int p = static_cast<int>(columns.cols());
  if (p < 2) throw ValidationError("VIF needs at least 2 columns");
  if (n <= p) throw ValidationError("VIF needs more rows than columns");
  std::vector<double> out(p);
  for (int j = 0; j < p; ++j) {
    Eigen::MatrixXd Xo(n, p); // intercept + the other columns
    Xo.col(0).setOnes();
    int c = 1;
    for (int k = 0; k < p; ++k) {
      if (k == j) continue;
      Xo.col(c++) = columns.col(k);
    }
    const Eigen::VectorXd yj = columns.col(j);
    // Least-squares solve tolerant of collinearity among the regressors.
    const Eigen::VectorXd coef = Xo.colPivHouseholderQr().solve(yj);
    const Eigen::VectorXd resid = yj - Xo * coef;
    const double ybar = yj.mean();
    const double tss = (yj.array() - ybar).square().sum();
    if (tss <= 0.0) {
      out[j] = std::numeric_limits<double>::infinity();
      continue;
    }
    const double r2 = 1.0 - resid.squaredNorm() / tss;
    out[j] = r2 >= 1.0 - 1e-12 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - r2);
  }
  return out;
}

} // namespace gridcast
