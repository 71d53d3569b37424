#include "gridcast/hawkes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "gridcast/version.hpp"

namespace gridcast {

// ------------------------------------------------------------- mark space

MarkSpace MarkSpace::defaults() {
  return from_edges({5.0, 15.0, 60.0, 240.0}, {10.0, 100.0, 1000.0});
}

MarkSpace MarkSpace::from_edges(std::vector<double> duration_uppers,
                                std::vector<double> customer_uppers) {
  if (duration_uppers.empty() || customer_uppers.empty()) {
    throw ValidationError("mark space needs at least one edge per axis");
  }
  if (!std::is_sorted(duration_uppers.begin(), duration_uppers.end()) ||
      !std::is_sorted(customer_uppers.begin(), customer_uppers.end())) {
    throw ValidationError("mark edges must be increasing");
  }
  const double inf = std::numeric_limits<double>::infinity();
  MarkSpace ms;
  double lo = 0.0;
  for (double hi : duration_uppers) {
    if (hi <= lo) throw ValidationError("degenerate duration bin");
    ms.duration_bins_.push_back({lo, hi, std::sqrt(std::max(lo, 1.0) * hi)});
    lo = hi;
  }
  ms.duration_bins_.push_back({lo, inf, 1.5 * lo});
  lo = 1.0; // customer counts start at 1
  for (double hi : customer_uppers) {
    if (hi < lo) throw ValidationError("degenerate customer bin");
    ms.customer_bins_.push_back({lo, hi, std::sqrt(lo * hi)});
    lo = hi + 1.0;
  }
  ms.customer_bins_.push_back({lo - 1.0, inf, 1.5 * (lo - 1.0)});
  return ms;
}

int MarkSpace::duration_bin(double minutes) const {
  for (std::size_t i = 0; i + 1 < duration_bins_.size(); ++i) {
    if (minutes < duration_bins_[i].hi) return static_cast<int>(i);
  }
  return static_cast<int>(duration_bins_.size()) - 1;
}

int MarkSpace::customer_bin(double customers) const {
  for (std::size_t i = 0; i + 1 < customer_bins_.size(); ++i) {
    if (customers <= customer_bins_[i].hi) return static_cast<int>(i);
  }
  return static_cast<int>(customer_bins_.size()) - 1;
}

int MarkSpace::classify(double duration_minutes, double customers) const {
  return duration_bin(duration_minutes) * n_customer_bins() + customer_bin(customers);
}

EventWeight MarkSpace::representative(int cls) const {
  if (cls < 0 || cls >= n_classes()) throw ValidationError("mark class out of range");
  const int db = cls / n_customer_bins();
  const int cb = cls % n_customer_bins();
  return EventWeight{duration_bins_[db].rep, customer_bins_[cb].rep};
}

// ------------------------------------------------------------- covariates

int MonthlyCovariates::month_at(double t) const {
  if (values.empty()) return -1;
  if (t < boundaries_days.front() || t >= boundaries_days.back()) {
    throw ValidationError("time " + std::to_string(t) + " outside covariate coverage [" +
                          std::to_string(boundaries_days.front()) + ", " +
                          std::to_string(boundaries_days.back()) + ")");
  }
  const auto it = std::upper_bound(boundaries_days.begin(), boundaries_days.end(), t);
  return static_cast<int>(it - boundaries_days.begin()) - 1;
}

// -------------------------------------------------------------- neighbors

double great_circle_km(double lon1, double lat1, double lon2, double lat2) {
  constexpr double kDeg = 0.017453292519943295;
  constexpr double kEarthRadiusKm = 6371.0;
  const double p1 = lat1 * kDeg, p2 = lat2 * kDeg;
  const double dp = (lat2 - lat1) * kDeg, dl = (lon2 - lon1) * kDeg;
  const double a = std::sin(dp / 2) * std::sin(dp / 2) +
                   std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

NeighborGraph build_neighbor_graph(const SubstationRegistry& registry, int k) {
  if (k < 1) throw ValidationError("neighbor count k must be >= 1");
  const auto& recs = registry.records();
  const int n = static_cast<int>(recs.size());
  NeighborGraph g;
  g.k = k;
  g.neighbors.resize(n);
  g.reverse_count.assign(n, 0);
  for (int s = 0; s < n; ++s) {
    std::vector<std::pair<double, int>> dist;
    dist.reserve(n);
    for (int s2 = 0; s2 < n; ++s2) {
      dist.emplace_back(
          great_circle_km(recs[s].lon, recs[s].lat, recs[s2].lon, recs[s2].lat), s2);
    }
    // Self sorts first at distance zero; ties broken by index for determinism.
    std::sort(dist.begin(), dist.end());
    const int take = std::min(k, n);
    for (int i = 0; i < take; ++i) g.neighbors[s].push_back(dist[i].second);
    std::sort(g.neighbors[s].begin(), g.neighbors[s].end());
  }
  for (int s = 0; s < n; ++s) {
    for (int src : g.neighbors[s]) g.reverse_count[src] += 1;
  }
  return g;
}

// ------------------------------------------------------------------ data

HawkesData make_hawkes_data(std::vector<HawkesEvent> events, double horizon_days, int n_sub,
                            MonthlyCovariates covariates, NeighborGraph graph) {
  if (horizon_days <= 0.0) throw ValidationError("horizon must be positive");
  if (n_sub < 1) throw ValidationError("need at least one substation");
  if (static_cast<int>(graph.neighbors.size()) != n_sub) {
    throw ValidationError("neighbor graph size does not match substation count");
  }
  std::sort(events.begin(), events.end(),
            [](const HawkesEvent& a, const HawkesEvent& b) { return a.t < b.t; });
  for (const auto& e : events) {
    if (e.t < 0.0 || e.t >= horizon_days) {
      throw ValidationError("event time " + std::to_string(e.t) + " outside [0, horizon)");
    }
    if (e.sub < 0 || e.sub >= n_sub) throw ValidationError("event substation out of range");
  }
  if (!covariates.values.empty()) {
    if (static_cast<int>(covariates.boundaries_days.size()) != covariates.n_months() + 1) {
      throw ValidationError("covariate boundaries must have n_months + 1 entries");
    }
    for (const auto& m : covariates.values) {
      if (m.rows() != n_sub) throw ValidationError("covariate matrix has wrong row count");
    }
  }
  return HawkesData{std::move(events), horizon_days, n_sub, std::move(covariates),
                    std::move(graph)};
}

CovariateStandardization compute_standardization(const CovariatePanel& panel,
                                                 MonthRange window,
                                                 std::span<const std::string> columns) {
  const int d = static_cast<int>(columns.size());
  std::vector<int> idx;
  for (const auto& c : columns) idx.push_back(panel.require_column(c));
  CovariateStandardization st;
  st.means = Eigen::VectorXd::Zero(d);
  st.sds = Eigen::VectorXd::Ones(d);
  std::vector<std::vector<double>> cells(d);
  for (const auto& row : panel.rows()) {
    if (!window.contains(row.month)) continue;
    for (int k = 0; k < d; ++k) cells[k].push_back(row.values[idx[k]]);
  }
  if (cells.empty() || cells[0].empty()) {
    throw ValidationError("no covariate rows inside the window");
  }
  for (int k = 0; k < d; ++k) {
    double m = 0.0;
    for (double v : cells[k]) m += v;
    m /= cells[k].size();
    double s2 = 0.0;
    for (double v : cells[k]) s2 += (v - m) * (v - m);
    st.means(k) = m;
    const double sd = std::sqrt(s2 / cells[k].size());
    st.sds(k) = sd > 0.0 ? sd : 1.0;
  }
  return st;
}

MonthlyCovariates monthly_covariates_from_panel(
    const CovariatePanel& panel, const SubstationRegistry& registry, MonthRange window,
    YearMonth time_origin, std::span<const std::string> columns,
    const CovariateStandardization* standardization) {
  if (window.empty()) throw ValidationError("empty covariate window");
  const int d = static_cast<int>(columns.size());
  std::vector<int> idx;
  for (const auto& c : columns) idx.push_back(panel.require_column(c));
  const int n_sub = static_cast<int>(registry.size());
  const std::int64_t origin_day = month_start_day(time_origin);

  MonthlyCovariates out;
  out.boundaries_days.resize(window.count() + 1);
  for (int i = 0; i <= window.count(); ++i) {
    out.boundaries_days[i] = static_cast<double>(
        month_start_day(YearMonth::from_index(window.first.index() + i)) - origin_day);
  }
  for (int i = 0; i < window.count(); ++i) {
    const YearMonth m = YearMonth::from_index(window.first.index() + i);
    Eigen::MatrixXd v(n_sub, d);
    for (int s = 0; s < n_sub; ++s) {
      const auto& sub_id = registry.records()[s].substation_id;
      const auto* row = panel.find(sub_id, m);
      if (!row) {
        throw ValidationError("missing covariate row (" + sub_id + ", " + m.str() + ")");
      }
      for (int k = 0; k < d; ++k) {
        double x = row->values[idx[k]];
        if (standardization) {
          x = (x - standardization->means(k)) / standardization->sds(k);
        }
        v(s, k) = x;
      }
    }
    out.values.push_back(std::move(v));
  }
  return out;
}

std::vector<HawkesEvent> events_to_hawkes(std::span<const OutageEvent> events,
                                          const SubstationRegistry& registry,
                                          YearMonth panel_start, const MarkSpace& marks) {
  const std::int64_t t0 = month_start_minutes(panel_start);
  std::vector<HawkesEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    const int sub = registry.index_of(e.substation_id);
    if (sub < 0) {
      throw ValidationError("event '" + e.event_id + "' references unknown substation '" +
                            e.substation_id + "'");
    }
    HawkesEvent h;
    h.t = static_cast<double>(e.start_minute - t0) / 1440.0;
    h.sub = sub;
    h.mark = marks.classify(e.duration_minutes(), static_cast<double>(e.customers_affected));
    out.push_back(h);
  }
  std::sort(out.begin(), out.end(),
            [](const HawkesEvent& a, const HawkesEvent& b) { return a.t < b.t; });
  return out;
}

void validate_params(const HawkesParams& params, int n_sub, int d) {
  if (params.n_sub() != n_sub) throw ValidationError("mu size does not match substation count");
  if (static_cast<int>(params.phi.size()) != d) {
    throw ValidationError("phi size does not match covariate dimension");
  }
  // alpha = 0 (no excitation) is a valid evaluation/simulation case; the
  // fitted value is kept strictly inside (0, 1) by the sigmoid map.
  if (!(params.alpha >= 0.0 && params.alpha < 1.0)) {
    throw ValidationError("alpha must lie in [0, 1)");
  }
  if (!(params.beta > 0.0)) throw ValidationError("beta must be positive");
  // Simulation tolerates mu_s = 0 (zero intensity); fitting requires
  // strictly positive values, enforced where the log map is applied.
  for (double m : params.mu) {
    if (!(m >= 0.0)) throw ValidationError("every mu_s must be nonnegative");
  }
  if (params.theta.rows() != params.marks.n_classes() ||
      params.theta.cols() != params.feature_dim()) {
    throw ValidationError("theta has wrong shape");
  }
  if (!(params.time_scale_days > 0.0)) throw ValidationError("time scale must be positive");
  if (params.k_nn < 1) throw ValidationError("k_nn must be >= 1");
}

// -------------------------------------------------------------- intensity

namespace {

double base_rate(double t, int sub, const HawkesParams& params, const MonthlyCovariates& X) {
  double v = params.mu[sub] * (1.0 + params.c * t);
  if (X.d() > 0) {
    const int m = X.month_at(t);
    v += X.values[m].row(sub).dot(params.phi);
  }
  return v;
}

Eigen::VectorXd mark_features(double t, int sub, const HawkesParams& params,
                              const MonthlyCovariates& X) {
  Eigen::VectorXd z(params.feature_dim());
  z(0) = 1.0;
  z(1) = t / params.time_scale_days;
  z.segment(2, params.n_sub()).setZero();
  z(2 + sub) = 1.0;
  const int d = static_cast<int>(params.phi.size());
  if (d > 0) {
    const int m = X.month_at(t);
    z.tail(d) = X.values[m].row(sub).transpose();
  }
  return z;
}

} // namespace

double ground_intensity(double t, int sub, std::span<const HawkesEvent> history,
                        const HawkesParams& params, const MonthlyCovariates& X,
                        const NeighborGraph& graph) {
  if (!history.empty() && t < history.back().t) {
    throw ValidationError("evaluation time precedes history");
  }
  const auto& nb = graph.neighbors.at(sub);
  double excitation = 0.0;
  for (const auto& e : history) {
    if (e.t >= t) continue;
    if (!std::binary_search(nb.begin(), nb.end(), e.sub)) continue;
    excitation += std::exp(-params.beta * (t - e.t));
  }
  const double v = base_rate(t, sub, params, X) + params.alpha * params.beta * excitation;
  if (v < 0.0) {
    throw ValidationError("negative ground intensity at t=" + std::to_string(t) +
                          " sub=" + std::to_string(sub));
  }
  return v;
}

Eigen::VectorXd mark_distribution(double t, int sub, const HawkesParams& params,
                                  const MonthlyCovariates& X) {
  const Eigen::VectorXd logits = params.theta * mark_features(t, sub, params, X);
  const double m = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - m).exp();
  p /= p.sum();
  return p;
}

// ------------------------------------------------------------- likelihood

double compensator(const HawkesParams& params, const HawkesData& data) {
  const double T = data.horizon_days;
  double out = 0.0;
  double mu_sum = 0.0;
  for (double m : params.mu) mu_sum += m;
  out += mu_sum * (T + params.c * T * T / 2.0);
  const int d = data.covariates.d();
  if (d > 0) {
    for (int m = 0; m < data.covariates.n_months(); ++m) {
      const double lo = std::clamp(data.covariates.boundaries_days[m], 0.0, T);
      const double hi = std::clamp(data.covariates.boundaries_days[m + 1], 0.0, T);
      if (hi <= lo) continue;
      double phi_sum = 0.0;
      for (int s = 0; s < data.n_sub; ++s) {
        phi_sum += data.covariates.values[m].row(s).dot(params.phi);
      }
      out += phi_sum * (hi - lo);
    }
  }
  for (const auto& e : data.events) {
    out += data.graph.reverse_count[e.sub] * params.alpha *
           (1.0 - std::exp(-params.beta * (T - e.t)));
  }
  return out;
}

namespace {

struct EvalScratch {
  std::vector<double> A, B, last_t; // per-source decayed sums and timestamps
};

// Core evaluation. Returns -inf (without throwing) when an event intensity
// is non-positive, so line searches can reject infeasible steps.
double eval_loglik(const HawkesParams& params, const HawkesData& data, bool want_grad,
                   Eigen::VectorXd* grad_out) {
  const int S = data.n_sub;
  const int d = data.covariates.d();
  const int M = params.marks.n_classes();
  const int feat = params.feature_dim();
  const ParamLayout lay{S, d, M, feat};
  const double T = data.horizon_days;
  const double alpha = params.alpha, beta = params.beta;

  Eigen::VectorXd grad;
  if (want_grad) grad = Eigen::VectorXd::Zero(lay.size());

  EvalScratch sc;
  sc.A.assign(S, 0.0);
  sc.B.assign(S, 0.0);
  sc.last_t.assign(S, 0.0);

  auto advance = [&](int src, double t) {
    const double dt = t - sc.last_t[src];
    if (dt > 0.0) {
      const double decay = std::exp(-beta * dt);
      sc.B[src] = decay * (sc.B[src] + dt * sc.A[src]);
      sc.A[src] *= decay;
      sc.last_t[src] = t;
    }
  };

  double ll = 0.0;
  const auto& events = data.events;
  std::size_t i = 0;
  while (i < events.size()) {
    // Events sharing a timestamp see the same history (strict past only).
    std::size_t j = i;
    while (j < events.size() && events[j].t == events[i].t) ++j;
    const double t = events[i].t;

    for (std::size_t e = i; e < j; ++e) {
      const auto& ev = events[e];
      double K = 0.0, D = 0.0;
      for (int src : data.graph.neighbors[ev.sub]) {
        advance(src, t);
        K += sc.A[src];
        D += sc.B[src];
      }
      const double base = base_rate(t, ev.sub, params, data.covariates);
      const double lambda = base + alpha * beta * K;
      if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        return -std::numeric_limits<double>::infinity();
      }
      ll += std::log(lambda);

      if (want_grad) {
        const double inv = 1.0 / lambda;
        grad(lay.i_mu(ev.sub)) += (1.0 + params.c * t) * inv;
        grad(lay.i_c()) += params.mu[ev.sub] * t * inv;
        if (d > 0) {
          const int m = data.covariates.month_at(t);
          for (int k = 0; k < d; ++k) {
            grad(lay.i_phi(k)) += data.covariates.values[m](ev.sub, k) * inv;
          }
        }
        grad(lay.i_alpha()) += beta * K * inv;
        grad(lay.i_beta()) += (alpha * K - alpha * beta * D) * inv;
      }

      // Mark term.
      const Eigen::VectorXd z = mark_features(t, ev.sub, params, data.covariates);
      Eigen::VectorXd logits = params.theta * z;
      const double mx = logits.maxCoeff();
      const double lse = mx + std::log((logits.array() - mx).exp().sum());
      ll += logits(ev.mark) - lse;
      if (want_grad) {
        const Eigen::VectorXd p = (logits.array() - lse).exp();
        for (int m = 0; m < M; ++m) {
          const double w = (m == ev.mark ? 1.0 : 0.0) - p(m);
          for (int f = 0; f < feat; ++f) grad(lay.i_theta(m, f)) += w * z(f);
        }
      }
    }

    for (std::size_t e = i; e < j; ++e) {
      advance(events[e].sub, t);
      sc.A[events[e].sub] += 1.0;
    }
    i = j;
  }

  // Compensator and its gradient.
  ll -= compensator(params, data);
  if (want_grad) {
    double mu_sum = 0.0;
    for (double m : params.mu) mu_sum += m;
    for (int s = 0; s < S; ++s) grad(lay.i_mu(s)) -= T + params.c * T * T / 2.0;
    grad(lay.i_c()) -= mu_sum * T * T / 2.0;
    if (d > 0) {
      for (int m = 0; m < data.covariates.n_months(); ++m) {
        const double lo = std::clamp(data.covariates.boundaries_days[m], 0.0, T);
        const double hi = std::clamp(data.covariates.boundaries_days[m + 1], 0.0, T);
        if (hi <= lo) continue;
        for (int k = 0; k < d; ++k) {
          grad(lay.i_phi(k)) -= data.covariates.values[m].col(k).sum() * (hi - lo);
        }
      }
    }
    for (const auto& e : events) {
      const double rev = data.graph.reverse_count[e.sub];
      const double tail = std::exp(-beta * (T - e.t));
      grad(lay.i_alpha()) -= rev * (1.0 - tail);
      grad(lay.i_beta()) -= rev * alpha * (T - e.t) * tail;
    }
  }

  if (want_grad) *grad_out = std::move(grad);
  return ll;
}

} // namespace

LogLikResult log_likelihood(const HawkesParams& params, const HawkesData& data,
                            bool want_gradient) {
  validate_params(params, data.n_sub, data.covariates.d());
  LogLikResult res;
  res.value = eval_loglik(params, data, want_gradient, &res.gradient);
  if (!std::isfinite(res.value)) {
    throw FitError("log-likelihood undefined: non-positive intensity at an event");
  }
  return res;
}

// -------------------------------------------------------------------- fit

namespace {

struct Packer {
  ParamLayout lay;
  MarkSpace marks;
  int k_nn;
  double time_scale;

  Eigen::VectorXd pack(const HawkesParams& p) const {
    Eigen::VectorXd psi(lay.size());
    for (int s = 0; s < lay.n_sub; ++s) psi(lay.i_mu(s)) = std::log(p.mu[s]);
    psi(lay.i_c()) = p.c;
    for (int k = 0; k < lay.d; ++k) psi(lay.i_phi(k)) = p.phi(k);
    psi(lay.i_alpha()) = std::log(p.alpha / (1.0 - p.alpha));
    psi(lay.i_beta()) = std::log(p.beta);
    for (int m = 0; m < lay.n_classes; ++m) {
      for (int f = 0; f < lay.feat; ++f) psi(lay.i_theta(m, f)) = p.theta(m, f);
    }
    return psi;
  }

  HawkesParams unpack(const Eigen::VectorXd& psi) const {
    HawkesParams p;
    p.mu.resize(lay.n_sub);
    for (int s = 0; s < lay.n_sub; ++s) p.mu[s] = std::exp(psi(lay.i_mu(s)));
    p.c = psi(lay.i_c());
    p.phi.resize(lay.d);
    for (int k = 0; k < lay.d; ++k) p.phi(k) = psi(lay.i_phi(k));
    p.alpha = 1.0 / (1.0 + std::exp(-psi(lay.i_alpha())));
    p.beta = std::exp(psi(lay.i_beta()));
    p.theta.resize(lay.n_classes, lay.feat);
    for (int m = 0; m < lay.n_classes; ++m) {
      for (int f = 0; f < lay.feat; ++f) p.theta(m, f) = psi(lay.i_theta(m, f));
    }
    p.marks = marks;
    p.k_nn = k_nn;
    p.time_scale_days = time_scale;
    return p;
  }

  // Chain rule from natural-parameter gradient to unconstrained space.
  Eigen::VectorXd chain(const Eigen::VectorXd& g, const HawkesParams& p) const {
    Eigen::VectorXd out = g;
    for (int s = 0; s < lay.n_sub; ++s) out(lay.i_mu(s)) *= p.mu[s];
    out(lay.i_alpha()) *= p.alpha * (1.0 - p.alpha);
    out(lay.i_beta()) *= p.beta;
    return out;
  }
};

HawkesParams default_initial(const HawkesData& data, int k_nn, const MarkSpace& marks) {
  HawkesParams p;
  const int S = data.n_sub;
  std::vector<double> counts(S, 0.0);
  for (const auto& e : data.events) counts[e.sub] += 1.0;
  p.mu.resize(S);
  for (int s = 0; s < S; ++s) {
    p.mu[s] = 0.7 * std::max(counts[s], 0.5) / data.horizon_days;
  }
  p.c = 0.0;
  p.phi = Eigen::VectorXd::Zero(data.covariates.d());
  p.alpha = 0.3;
  p.beta = 1.0;
  p.k_nn = k_nn;
  p.marks = marks;
  p.time_scale_days = data.horizon_days;
  p.theta = Eigen::MatrixXd::Zero(marks.n_classes(), 2 + S + data.covariates.d());
  return p;
}

} // namespace

HawkesFitResult fit_mle(const HawkesData& data, const HawkesFitConfig& config,
                        const HawkesParams* initial) {
  if (data.events.empty()) throw ValidationError("cannot fit with zero events");

  HawkesParams init = initial
                          ? *initial
                          : default_initial(data, data.graph.k, MarkSpace::defaults());
  if (initial) validate_params(init, data.n_sub, data.covariates.d());
  for (double m : init.mu) {
    if (!(m > 0.0)) throw ValidationError("initial mu_s must be strictly positive for fitting");
  }
  if (init.time_scale_days <= 0.0) init.time_scale_days = data.horizon_days;

  const ParamLayout lay{data.n_sub, data.covariates.d(), init.marks.n_classes(),
                        init.feature_dim()};
  const Packer packer{lay, init.marks, data.graph.k, init.time_scale_days};

  Eigen::VectorXd psi = packer.pack(init);
  HawkesParams cur = packer.unpack(psi);
  Eigen::VectorXd grad_nat;
  double ll = eval_loglik(cur, data, true, &grad_nat);
  if (!std::isfinite(ll)) {
    throw HawkesFitError("initial parameters are infeasible", {});
  }
  Eigen::VectorXd g = packer.chain(grad_nat, cur);

  std::vector<double> trajectory{ll};
  double step = 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());
  Eigen::VectorXd psi_prev = psi, g_prev = g;
  bool converged = false;
  int iter = 0;

  for (iter = 1; iter <= config.max_iterations; ++iter) {
    // Barzilai-Borwein initial step after the first iteration, safeguarded.
    if (iter > 1) {
      const Eigen::VectorXd s = psi - psi_prev;
      const Eigen::VectorXd y = g_prev - g;
      const double sy = s.dot(y);
      if (sy > 1e-16) {
        step = std::clamp(s.dot(s) / sy, 1e-9, 1e6);
      } else {
        step = std::min(step * 2.0, 1e6);
      }
    }

    const double g2 = g.squaredNorm();
    double t = step;
    double ll_new = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd psi_new;
    HawkesParams par_new;
    int bt = 0;
    for (; bt <= config.max_backtracks; ++bt) {
      psi_new = psi + t * g;
      par_new = packer.unpack(psi_new);
      ll_new = eval_loglik(par_new, data, false, nullptr);
      if (std::isfinite(ll_new) && ll_new >= ll + config.armijo * t * g2) break;
      t *= 0.5;
    }
    if (bt > config.max_backtracks) {
      // No ascent step found: gradient is numerically flat.
      converged = true;
      break;
    }

    psi_prev = psi;
    g_prev = g;
    psi = psi_new;
    const double ll_old = ll;
    ll = ll_new;
    cur = par_new;
    eval_loglik(cur, data, true, &grad_nat);
    g = packer.chain(grad_nat, cur);
    trajectory.push_back(ll);
    step = t;

    if (std::abs(ll - ll_old) < config.tolerance * (std::abs(ll) + 1.0)) {
      converged = true;
      break;
    }
  }

  if (!converged) {
    throw HawkesFitError("fit did not converge within " +
                             std::to_string(config.max_iterations) + " iterations",
                         std::move(trajectory));
  }

  // Base rate must stay nonnegative over the fitted horizon; a negative
  // trend that undershoots is a model defect, reported rather than clamped.
  const double T = data.horizon_days;
  for (int s = 0; s < data.n_sub; ++s) {
    for (double tt : {0.0, T}) {
      double b = cur.mu[s] * (1.0 + cur.c * tt);
      if (data.covariates.d() > 0) {
        const double te = std::min(tt, T - 1e-9);
        if (te >= data.covariates.boundaries_days.front() &&
            te < data.covariates.boundaries_days.back()) {
          b += data.covariates.values[data.covariates.month_at(te)].row(s).dot(cur.phi);
        }
      }
      if (b < 0.0) {
        throw HawkesFitError("fitted base rate is negative at t=" + std::to_string(tt) +
                                 " for substation index " + std::to_string(s),
                             std::move(trajectory));
      }
    }
  }

  HawkesFitResult res;
  res.params = std::move(cur);
  res.log_lik = ll;
  res.iterations = iter;
  res.converged = true;
  res.trajectory = std::move(trajectory);
  return res;
}

// ---------------------------------------------------------- serialization

namespace {

nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.size();
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const auto cols = j.at(0).size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

} // namespace

void save_hawkes_model(const std::string& path, const HawkesModelFile& model) {
  nlohmann::ordered_json j;
  j["format"] = "gridcast-hawkes-model";
  j["format_version"] = 1;
  j["generator"] = std::string("gridcast ") + kVersion;
  j["substations"] = model.substation_ids;
  j["mu"] = model.params.mu;
  j["c"] = model.params.c;
  j["phi"] = std::vector<double>(model.params.phi.begin(), model.params.phi.end());
  j["alpha"] = model.params.alpha;
  j["beta"] = model.params.beta;
  j["k_nn"] = model.params.k_nn;
  j["theta"] = matrix_to_json(model.params.theta);
  j["time_scale_days"] = model.params.time_scale_days;
  std::vector<double> dur_uppers, cust_uppers;
  const auto& db = model.params.marks.duration_bins();
  for (std::size_t i = 0; i + 1 < db.size(); ++i) dur_uppers.push_back(db[i].hi);
  const auto& cb = model.params.marks.customer_bins();
  for (std::size_t i = 0; i + 1 < cb.size(); ++i) cust_uppers.push_back(cb[i].hi);
  j["mark_space"] = {{"duration_uppers", dur_uppers}, {"customer_uppers", cust_uppers}};
  j["covariate_columns"] = model.covariate_columns;
  j["covariate_means"] =
      std::vector<double>(model.covariate_means.begin(), model.covariate_means.end());
  j["covariate_sds"] =
      std::vector<double>(model.covariate_sds.begin(), model.covariate_sds.end());
  j["panel_start"] = model.panel_start.str();
  j["horizon_days"] = model.horizon_days;
  j["fit"] = {{"log_likelihood", model.fit_log_lik},
              {"iterations", model.fit_iterations},
              {"converged", model.fit_converged},
              {"seed", model.seed}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error("write failure on '" + path + "'");
}

HawkesModelFile load_hawkes_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (j.value("format", "") != "gridcast-hawkes-model") {
    throw ParseError(path + ": not a gridcast hawkes model file");
  }
  if (j.value("format_version", 0) != 1) {
    throw ParseError(path + ": unsupported model format version");
  }
  HawkesModelFile m;
  m.substation_ids = j.at("substations").get<std::vector<std::string>>();
  m.params.mu = j.at("mu").get<std::vector<double>>();
  m.params.c = j.at("c").get<double>();
  const auto phi = j.at("phi").get<std::vector<double>>();
  m.params.phi = Eigen::Map<const Eigen::VectorXd>(phi.data(), phi.size());
  m.params.alpha = j.at("alpha").get<double>();
  m.params.beta = j.at("beta").get<double>();
  m.params.k_nn = j.at("k_nn").get<int>();
  m.params.theta = matrix_from_json(j.at("theta"));
  m.params.time_scale_days = j.at("time_scale_days").get<double>();
  m.params.marks = MarkSpace::from_edges(
      j.at("mark_space").at("duration_uppers").get<std::vector<double>>(),
      j.at("mark_space").at("customer_uppers").get<std::vector<double>>());
  m.covariate_columns = j.at("covariate_columns").get<std::vector<std::string>>();
  const auto means = j.at("covariate_means").get<std::vector<double>>();
  const auto sds = j.at("covariate_sds").get<std::vector<double>>();
  m.covariate_means = Eigen::Map<const Eigen::VectorXd>(means.data(), means.size());
  m.covariate_sds = Eigen::Map<const Eigen::VectorXd>(sds.data(), sds.size());
  m.panel_start = YearMonth::parse(j.at("panel_start").get<std::string>());
  m.horizon_days = j.at("horizon_days").get<double>();
  m.fit_log_lik = j.at("fit").at("log_likelihood").get<double>();
  m.fit_iterations = j.at("fit").at("iterations").get<int>();
  m.fit_converged = j.at("fit").at("converged").get<bool>();
  m.seed = j.at("fit").at("seed").get<std::uint64_t>();
  return m;
}

} // namespace gridcast
