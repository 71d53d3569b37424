#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gridcast/hawkes.hpp"
#include "gridcast/ingest.hpp"
#include "gridcast/rng.hpp"

namespace gridcast {

enum class Metric { saidi, saifi, caidi };

const char* metric_name(Metric m);
Metric parse_metric(const std::string& name);

/// One simulated marked trajectory over [t0, t0 + horizon).
struct SimulatedTrajectory {
  std::vector<HawkesEvent> events; // strictly ordered in time
  std::uint64_t seed = 0;
  int replication = 0;
  double t0 = 0.0;
  double horizon = 0.0;
};

/// Draws one trajectory over [t0, t0 + horizon_days) by thinning: proposals
/// come from a refreshed upper bound on |S| times the per-substation
/// intensity, a substation is sampled uniformly, and acceptance uses
/// u * bound <= |S| * lambda_s. The bound is refreshed after every candidate
/// and every accepted event; accepted events feed back into the intensity.
/// History events at t >= t0 are ignored.
SimulatedTrajectory thinning_simulate(const HawkesParams& params,
                                      std::span<const HawkesEvent> history, double t0,
                                      double horizon_days, const MonthlyCovariates& X,
                                      const NeighborGraph& graph, std::uint64_t seed);

struct EnsembleConfig {
  int n_windows = 1;
  double window_days = 30.0;
  int replications = 1;
  std::uint64_t master_seed = 0;
  int threads = 1;
};

/// K independent trajectories over [t0, t0 + n_windows * window_days), each
/// produced by sliding the window forward and concatenating the previously
/// simulated events into the history. Replication k is a pure function of
/// (master_seed, k).
std::vector<SimulatedTrajectory> simulate_ensemble(const HawkesParams& params,
                                                   std::span<const HawkesEvent> history,
                                                   double t0, const EnsembleConfig& config,
                                                   const MonthlyCovariates& X,
                                                   const NeighborGraph& graph);

/// Dense (step, substation) matrix of observed or point-forecast values.
struct MetricMatrix {
  int n_steps = 0;
  int n_sub = 0;
  std::vector<double> v; // v[step * n_sub + sub]

  double& at(int step, int sub) { return v[static_cast<std::size_t>(step) * n_sub + sub]; }
  double at(int step, int sub) const { return v[static_cast<std::size_t>(step) * n_sub + sub]; }
};

/// (step, substation, replication) tensor of simulated index values.
struct IndexMatrix {
  Metric metric = Metric::saidi;
  int n_steps = 0;
  int n_sub = 0;
  int n_rep = 0;
  double t0 = 0.0;
  double window_days = 0.0;
  std::vector<double> v;

  double& at(int step, int sub, int rep) {
    return v[(static_cast<std::size_t>(step) * n_sub + sub) * n_rep + rep];
  }
  double at(int step, int sub, int rep) const {
    return v[(static_cast<std::size_t>(step) * n_sub + sub) * n_rep + rep];
  }
  MetricMatrix replication_slice(int rep) const;
  MetricMatrix replication_mean() const;
};

/// Aggregates simulated trajectories into index matrices with the
/// reliability formulas applied to mark representatives. Windows are
/// [t0 + i*dt, t0 + (i+1)*dt); events outside are dropped.
IndexMatrix aggregate_indices(std::span<const SimulatedTrajectory> trajectories,
                              const SubstationRegistry& registry, const MarkSpace& marks,
                              Metric metric, double t0, int n_windows, double window_days);

/// Observed counterpart built from real outage events (true durations and
/// customer counts; events attributed by start time).
MetricMatrix observed_index_matrix(std::span<const OutageEvent> events,
                                   const SubstationRegistry& registry, YearMonth panel_start,
                                   Metric metric, double t0, int n_windows,
                                   double window_days);

// Calendar-month windows: boundaries are day offsets of consecutive month
// starts relative to `origin`, so window lengths track real month lengths.

/// n_windows + 1 day offsets starting at `first` (relative to `origin`).
std::vector<double> month_window_boundaries(YearMonth origin, YearMonth first, int n_windows);

/// Ensemble over irregular windows given by `boundaries` (size n+1); the
/// window at index i is [boundaries[i], boundaries[i+1]).
std::vector<SimulatedTrajectory> simulate_ensemble_windows(
    const HawkesParams& params, std::span<const HawkesEvent> history,
    std::span<const double> boundaries, int replications, std::uint64_t master_seed,
    int threads, const MonthlyCovariates& X, const NeighborGraph& graph);

IndexMatrix aggregate_indices_windows(std::span<const SimulatedTrajectory> trajectories,
                                      const SubstationRegistry& registry,
                                      const MarkSpace& marks, Metric metric,
                                      std::span<const double> boundaries);

MetricMatrix observed_index_matrix_windows(std::span<const OutageEvent> events,
                                           const SubstationRegistry& registry,
                                           YearMonth panel_start, Metric metric,
                                           std::span<const double> boundaries);

} // namespace gridcast
