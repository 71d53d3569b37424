#include "gridcast/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "gridcast/error.hpp"
#include "gridcast/reliability.hpp"

namespace gridcast {

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::saidi: return "saidi";
    case Metric::saifi: return "saifi";
    default: return "caidi";
  }
}

Metric parse_metric(const std::string& name) {
  if (name == "saidi") return Metric::saidi;
  if (name == "saifi") return Metric::saifi;
  if (name == "caidi") return Metric::caidi;
  throw Error("unknown metric '" + name + "' (expected saidi, saifi or caidi)");
}

namespace {

double base_rate_at(const HawkesParams& p, const MonthlyCovariates& X, int sub, double t) {
  double v = p.mu[sub] * (1.0 + p.c * t);
  if (X.d() > 0) v += X.values[X.month_at(t)].row(sub).dot(p.phi);
  return v;
}

// Month boundaries intersected with (lo, hi); returns segment endpoints
// lo = b0 < b1 < ... < hi. Within a segment the base rate is linear in t.
std::vector<double> segment_bounds(const MonthlyCovariates& X, double lo, double hi) {
  std::vector<double> bounds{lo};
  if (X.d() > 0) {
    for (double b : X.boundaries_days) {
      if (b > lo && b < hi) bounds.push_back(b);
    }
  }
  bounds.push_back(hi);
  return bounds;
}

void check_boundaries(std::span<const double> boundaries) {
  if (boundaries.size() < 2) throw ValidationError("need at least one window");
  for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
    if (!(boundaries[i] < boundaries[i + 1])) {
      throw ValidationError("window boundaries must be strictly increasing");
    }
  }
}

} // namespace

SimulatedTrajectory thinning_simulate(const HawkesParams& params,
                                      std::span<const HawkesEvent> history, double t0,
                                      double horizon_days, const MonthlyCovariates& X,
                                      const NeighborGraph& graph, std::uint64_t seed) {
  validate_params(params, static_cast<int>(graph.neighbors.size()), X.d());
  if (horizon_days <= 0.0) throw ValidationError("simulation horizon must be positive");
  const int S = params.n_sub();
  const double alpha = params.alpha, beta = params.beta;
  Rng rng(seed);

  // Decayed per-source excitation sums, seeded from the strict-past history.
  std::vector<double> A(S, 0.0), last(S, t0);
  for (const auto& e : history) {
    if (e.t >= t0) continue;
    A[e.sub] += std::exp(-beta * (t0 - e.t));
  }
  auto advance = [&](int src, double t) {
    if (t > last[src]) {
      A[src] *= std::exp(-beta * (t - last[src]));
      last[src] = t;
    }
  };

  SimulatedTrajectory traj;
  traj.seed = seed;
  traj.t0 = t0;
  traj.horizon = horizon_days;

  const double t_end = t0 + horizon_days;
  const std::vector<double> bounds = segment_bounds(X, t0, t_end);
  std::vector<double> base_sup(S);

  for (std::size_t seg = 0; seg + 1 < bounds.size(); ++seg) {
    const double a = bounds[seg];
    const double b = bounds[seg + 1];
    // Covariates are probed strictly inside the segment to stay in-month.
    const double probe_hi = std::nextafter(b, a);
    double t = a;
    for (int s = 0; s < S; ++s) {
      base_sup[s] = std::max(base_rate_at(params, X, s, a),
                             base_rate_at(params, X, s, probe_hi));
      if (base_sup[s] < 0.0 || !std::isfinite(base_sup[s])) {
        throw ValidationError("negative or non-finite base rate during simulation");
      }
    }
    while (t < b) {
      // Upper bound on |S| * max_s lambda_s over [t, b): the base-rate
      // envelope plus the current excitation, which only decays until the
      // next accepted event. Refreshed every candidate and every accept.
      double peak = 0.0;
      for (int s = 0; s < S; ++s) advance(s, t);
      for (int s = 0; s < S; ++s) {
        double exc = 0.0;
        for (int src : graph.neighbors[s]) exc += A[src];
        peak = std::max(peak, base_sup[s] + alpha * beta * exc);
      }
      const double lambda_bar = static_cast<double>(S) * peak;
      if (!std::isfinite(lambda_bar)) {
        throw FitError("thinning upper bound is non-finite");
      }
      if (lambda_bar <= 0.0) break; // nothing can occur in this segment

      const double t_cand = t + rng.exponential(lambda_bar);
      if (t_cand >= b) break;

      // Uniform substation proposal with the |S| rescaling in the accept
      // test keeps the per-substation rate exactly lambda_s.
      const int s_cand = static_cast<int>(rng.integer(static_cast<std::uint64_t>(S)));
      for (int src : graph.neighbors[s_cand]) advance(src, t_cand);
      double exc = 0.0;
      for (int src : graph.neighbors[s_cand]) exc += A[src];
      const double lambda_s = base_rate_at(params, X, s_cand, t_cand) + alpha * beta * exc;
      if (lambda_s < 0.0) {
        throw ValidationError("negative intensity during simulation");
      }
      const double u = rng.uniform01();
      if (u * lambda_bar <= static_cast<double>(S) * lambda_s) {
        const Eigen::VectorXd pm = mark_distribution(t_cand, s_cand, params, X);
        const int mark = static_cast<int>(rng.categorical(pm));
        traj.events.push_back(HawkesEvent{t_cand, s_cand, mark});
        advance(s_cand, t_cand);
        A[s_cand] += 1.0;
      }
      t = t_cand;
    }
  }
  return traj;
}

std::vector<SimulatedTrajectory> simulate_ensemble_windows(
    const HawkesParams& params, std::span<const HawkesEvent> history,
    std::span<const double> boundaries, int replications, std::uint64_t master_seed,
    int threads, const MonthlyCovariates& X, const NeighborGraph& graph) {
  check_boundaries(boundaries);
  if (replications < 1) throw ValidationError("need at least one replication");
  const double t0 = boundaries.front();
  const int n_windows = static_cast<int>(boundaries.size()) - 1;

  std::vector<HawkesEvent> base_history;
  base_history.reserve(history.size());
  for (const auto& e : history) {
    if (e.t < t0) base_history.push_back(e);
  }

  std::vector<SimulatedTrajectory> out(replications);
  auto run_one = [&](int k) {
    const std::uint64_t seed = child_seed(master_seed, static_cast<std::uint64_t>(k));
    std::vector<HawkesEvent> hist = base_history;
    SimulatedTrajectory traj;
    traj.seed = seed;
    traj.replication = k;
    traj.t0 = t0;
    traj.horizon = boundaries.back() - t0;
    for (int w = 0; w < n_windows; ++w) {
      SimulatedTrajectory piece = thinning_simulate(
          params, hist, boundaries[w], boundaries[w + 1] - boundaries[w], X, graph,
          child_seed(seed, static_cast<std::uint64_t>(w)));
      // Simulated events join the history for the next window.
      hist.insert(hist.end(), piece.events.begin(), piece.events.end());
      traj.events.insert(traj.events.end(), piece.events.begin(), piece.events.end());
    }
    out[k] = std::move(traj);
  };

  const int workers = std::max(1, threads);
  if (workers == 1 || replications == 1) {
    for (int k = 0; k < replications; ++k) run_one(k);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int tid = 0; tid < workers; ++tid) {
      pool.emplace_back([&, tid] {
        for (int k = tid; k < replications; k += workers) run_one(k);
      });
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

std::vector<SimulatedTrajectory> simulate_ensemble(const HawkesParams& params,
                                                   std::span<const HawkesEvent> history,
                                                   double t0, const EnsembleConfig& config,
                                                   const MonthlyCovariates& X,
                                                   const NeighborGraph& graph) {
  if (config.n_windows < 1) throw ValidationError("need at least one window");
  std::vector<double> boundaries(config.n_windows + 1);
  for (int i = 0; i <= config.n_windows; ++i) boundaries[i] = t0 + i * config.window_days;
  return simulate_ensemble_windows(params, history, boundaries, config.replications,
                                   config.master_seed, config.threads, X, graph);
}

MetricMatrix IndexMatrix::replication_slice(int rep) const {
  MetricMatrix m;
  m.n_steps = n_steps;
  m.n_sub = n_sub;
  m.v.resize(static_cast<std::size_t>(n_steps) * n_sub);
  for (int i = 0; i < n_steps; ++i) {
    for (int s = 0; s < n_sub; ++s) m.at(i, s) = at(i, s, rep);
  }
  return m;
}

MetricMatrix IndexMatrix::replication_mean() const {
  MetricMatrix m;
  m.n_steps = n_steps;
  m.n_sub = n_sub;
  m.v.assign(static_cast<std::size_t>(n_steps) * n_sub, 0.0);
  for (int i = 0; i < n_steps; ++i) {
    for (int s = 0; s < n_sub; ++s) {
      double acc = 0.0;
      for (int k = 0; k < n_rep; ++k) acc += at(i, s, k);
      m.at(i, s) = acc / n_rep;
    }
  }
  return m;
}

namespace {

// Window index for time t given boundaries, or -1 when outside.
int window_of(std::span<const double> boundaries, double t) {
  if (t < boundaries.front() || t >= boundaries.back()) return -1;
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), t);
  return static_cast<int>(it - boundaries.begin()) - 1;
}

double metric_value(Metric metric, std::span<const EventWeight> evs, double n_total) {
  const double saidi = compute_saidi(evs, n_total);
  const double saifi = compute_saifi(evs, n_total);
  switch (metric) {
    case Metric::saidi: return saidi;
    case Metric::saifi: return saifi;
    default: return compute_caidi(saidi, saifi);
  }
}

} // namespace

IndexMatrix aggregate_indices_windows(std::span<const SimulatedTrajectory> trajectories,
                                      const SubstationRegistry& registry,
                                      const MarkSpace& marks, Metric metric,
                                      std::span<const double> boundaries) {
  check_boundaries(boundaries);
  const int S = static_cast<int>(registry.size());
  const int n_windows = static_cast<int>(boundaries.size()) - 1;
  IndexMatrix out;
  out.metric = metric;
  out.n_steps = n_windows;
  out.n_sub = S;
  out.n_rep = static_cast<int>(trajectories.size());
  out.t0 = boundaries.front();
  out.window_days = (boundaries.back() - boundaries.front()) / n_windows;
  out.v.assign(static_cast<std::size_t>(n_windows) * S * out.n_rep, 0.0);

  for (int k = 0; k < out.n_rep; ++k) {
    // Group event weights per (window, substation), preserving time order.
    std::vector<std::vector<EventWeight>> cells(static_cast<std::size_t>(n_windows) * S);
    for (const auto& e : trajectories[k].events) {
      const int w = window_of(boundaries, e.t);
      if (w < 0) continue;
      if (e.sub < 0 || e.sub >= S) throw ValidationError("trajectory substation out of range");
      cells[static_cast<std::size_t>(w) * S + e.sub].push_back(marks.representative(e.mark));
    }
    for (int i = 0; i < n_windows; ++i) {
      for (int s = 0; s < S; ++s) {
        const auto& evs = cells[static_cast<std::size_t>(i) * S + s];
        const double n_total = static_cast<double>(registry.records()[s].customers_total);
        out.at(i, s, k) = metric_value(metric, evs, n_total);
      }
    }
  }
  return out;
}

IndexMatrix aggregate_indices(std::span<const SimulatedTrajectory> trajectories,
                              const SubstationRegistry& registry, const MarkSpace& marks,
                              Metric metric, double t0, int n_windows, double window_days) {
  std::vector<double> boundaries(n_windows + 1);
  for (int i = 0; i <= n_windows; ++i) boundaries[i] = t0 + i * window_days;
  return aggregate_indices_windows(trajectories, registry, marks, metric, boundaries);
}

MetricMatrix observed_index_matrix_windows(std::span<const OutageEvent> events,
                                           const SubstationRegistry& registry,
                                           YearMonth panel_start, Metric metric,
                                           std::span<const double> boundaries) {
  check_boundaries(boundaries);
  const int S = static_cast<int>(registry.size());
  const int n_windows = static_cast<int>(boundaries.size()) - 1;
  const std::int64_t start_min = month_start_minutes(panel_start);
  std::vector<std::vector<EventWeight>> cells(static_cast<std::size_t>(n_windows) * S);
  for (const auto& e : events) {
    const int sub = registry.index_of(e.substation_id);
    if (sub < 0) {
      throw ValidationError("event '" + e.event_id + "' references unknown substation");
    }
    const double t = static_cast<double>(e.start_minute - start_min) / 1440.0;
    const int w = window_of(boundaries, t);
    if (w < 0) continue;
    cells[static_cast<std::size_t>(w) * S + sub].push_back(
        EventWeight{e.duration_minutes(), static_cast<double>(e.customers_affected)});
  }
  MetricMatrix m;
  m.n_steps = n_windows;
  m.n_sub = S;
  m.v.assign(static_cast<std::size_t>(n_windows) * S, 0.0);
  for (int i = 0; i < n_windows; ++i) {
    for (int s = 0; s < S; ++s) {
      const auto& evs = cells[static_cast<std::size_t>(i) * S + s];
      const double n_total = static_cast<double>(registry.records()[s].customers_total);
      m.at(i, s) = metric_value(metric, evs, n_total);
    }
  }
  return m;
}

MetricMatrix observed_index_matrix(std::span<const OutageEvent> events,
                                   const SubstationRegistry& registry, YearMonth panel_start,
                                   Metric metric, double t0, int n_windows,
                                   double window_days) {
  std::vector<double> boundaries(n_windows + 1);
  for (int i = 0; i <= n_windows; ++i) boundaries[i] = t0 + i * window_days;
  return observed_index_matrix_windows(events, registry, panel_start, metric, boundaries);
}

std::vector<double> month_window_boundaries(YearMonth origin, YearMonth first, int n_windows) {
  if (n_windows < 1) throw ValidationError("need at least one window");
  const std::int64_t origin_day = month_start_day(origin);
  std::vector<double> boundaries(n_windows + 1);
  for (int i = 0; i <= n_windows; ++i) {
    boundaries[i] = static_cast<double>(
        month_start_day(YearMonth::from_index(first.index() + i)) - origin_day);
  }
  return boundaries;
}

} // namespace gridcast
