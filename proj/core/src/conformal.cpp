#include "gridcast/conformal.hpp"

#include <algorithm>
#include <cmath>

#include "gridcast/error.hpp"

namespace gridcast {

std::vector<double> ResidualStore::substation(int sub) const {
  std::vector<double> out(n_steps);
  for (int i = 0; i < n_steps; ++i) out[i] = at(i, sub);
  return out;
}

ResidualStore nonconformity_scores(const IndexMatrix& ensemble, const MetricMatrix& actual) {
  if (ensemble.n_steps != actual.n_steps || ensemble.n_sub != actual.n_sub) {
    throw ValidationError("ensemble and actual matrices have mismatched dimensions");
  }
  if (ensemble.n_rep < 1) throw ValidationError("ensemble has no replications");
  ResidualStore store;
  store.n_steps = ensemble.n_steps;
  store.n_sub = ensemble.n_sub;
  store.r.resize(static_cast<std::size_t>(store.n_steps) * store.n_sub);
  for (int i = 0; i < store.n_steps; ++i) {
    for (int s = 0; s < store.n_sub; ++s) {
      double best = std::abs(ensemble.at(i, s, 0) - actual.at(i, s));
      for (int k = 1; k < ensemble.n_rep; ++k) {
        best = std::min(best, std::abs(ensemble.at(i, s, k) - actual.at(i, s)));
      }
      store.r[static_cast<std::size_t>(i) * store.n_sub + s] = best;
    }
  }
  return store;
}

double conformal_quantile(std::span<const double> residuals, double alpha) {
  if (residuals.empty()) throw ValidationError("empty residual set");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  const std::size_t n = residuals.size();
  std::vector<double> sorted(residuals.begin(), residuals.end());
  std::sort(sorted.begin(), sorted.end());
  const double raw = (1.0 - alpha) * static_cast<double>(n + 1);
  std::size_t k = static_cast<std::size_t>(std::ceil(raw));
  if (k < 1) k = 1;
  if (k > n) k = n; // clipped to the maximum residual
  return sorted[k - 1];
}

std::vector<double> conformal_quantiles(const ResidualStore& residuals, double alpha) {
  std::vector<double> out(residuals.n_sub);
  for (int s = 0; s < residuals.n_sub; ++s) {
    out[s] = conformal_quantile(residuals.substation(s), alpha);
  }
  return out;
}

std::vector<PredictionInterval> prediction_intervals(const IndexMatrix& future_ensemble,
                                                     std::span<const double> q_hat,
                                                     double alpha, bool clip_at_zero,
                                                     int point_rep) {
  if (static_cast<int>(q_hat.size()) != future_ensemble.n_sub) {
    throw ValidationError("quantile vector size does not match substation count");
  }
  if (future_ensemble.n_rep < 1) throw ValidationError("ensemble has no replications");
  if (point_rep < 0 || point_rep >= future_ensemble.n_rep) {
    throw ValidationError("point replication index out of range");
  }
  std::vector<PredictionInterval> out;
  out.reserve(static_cast<std::size_t>(future_ensemble.n_steps) * future_ensemble.n_sub);
  for (int i = 0; i < future_ensemble.n_steps; ++i) {
    for (int s = 0; s < future_ensemble.n_sub; ++s) {
      double lo = future_ensemble.at(i, s, 0);
      double hi = lo;
      for (int k = 1; k < future_ensemble.n_rep; ++k) {
        lo = std::min(lo, future_ensemble.at(i, s, k));
        hi = std::max(hi, future_ensemble.at(i, s, k));
      }
      PredictionInterval pi;
      pi.step = i;
      pi.sub = s;
      pi.point = future_ensemble.at(i, s, point_rep);
      pi.lower = lo - q_hat[s];
      pi.upper = hi + q_hat[s];
      if (clip_at_zero) pi.lower = std::max(0.0, pi.lower);
      pi.level = 1.0 - alpha;
      out.push_back(pi);
    }
  }
  return out;
}

double empirical_coverage(std::span<const PredictionInterval> intervals,
                          const MetricMatrix& actuals) {
  if (intervals.empty()) throw ValidationError("no intervals to evaluate");
  std::size_t inside = 0;
  for (const auto& pi : intervals) {
    if (pi.step < 0 || pi.step >= actuals.n_steps || pi.sub < 0 || pi.sub >= actuals.n_sub) {
      throw ValidationError("interval key (step=" + std::to_string(pi.step) +
                            ", sub=" + std::to_string(pi.sub) + ") has no matching actual");
    }
    const double y = actuals.at(pi.step, pi.sub);
    if (y >= pi.lower && y <= pi.upper) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(intervals.size());
}

} // namespace gridcast
