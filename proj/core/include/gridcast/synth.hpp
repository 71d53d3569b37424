#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridcast/econometrics.hpp"
#include "gridcast/hawkes.hpp"
#include "gridcast/ingest.hpp"

namespace gridcast {

/// Ground-truth specification for a synthetic outage stream.
struct HawkesDgpSpec {
  int n_sub = 4;
  double mu = 0.3;     // events/day per substation
  double c = 0.0;      // linear trend
  double alpha = 0.4;  // branching ratio
  double beta = 1.2;   // kernel decay, 1/day
  int k_nn = 1;        // neighborhood size (1 = self-excitation only)
  double horizon_days = 365.0;
  YearMonth start_month{2014, 1};
  std::int64_t customers_per_substation = 8600;
};

struct HawkesDataset {
  SubstationRegistry registry;
  std::vector<OutageEvent> events;    // minute-resolution, loadable by ingest
  std::vector<HawkesEvent> raw;       // exact model-time events
  HawkesParams truth;
  HawkesDgpSpec spec;
  std::uint64_t seed = 0;
};

/// Simulates an outage stream from known parameters via thinning and renders
/// it as loadable CSV material. Marks are drawn uniformly (zero logits) and
/// written with their representative duration/customers rounded to the data
/// resolution.
HawkesDataset gen_hawkes_dataset(const HawkesDgpSpec& spec, std::uint64_t seed);

/// Writes events.csv, substations.csv and truth.json under `dir`.
/// A zero-intensity spec yields an empty events file plus a warning on
/// stderr.
void write_hawkes_dataset(const std::string& dir, const HawkesDataset& dataset);

/// Ground truth for the two-part panel generator. Endogeneity enters
/// through the first-stage error: v drives the treatment and, scaled by
/// tau (part 1) and tau2 (part 2), the outcome indices, so naive estimation
/// is biased while the control function is consistent by construction.
struct PanelDgpSpec {
  int clusters = 44;
  int months = 111;
  YearMonth start_month{2014, 1};
  // First stage: S = a0 + a1 G + a2.x + fe_i + te_t + v.
  double a0 = 10.0;
  double a1 = 3.5;
  std::vector<double> a2 = {1.0, -0.5};
  double sigma_v = 20.0;
  double fe_sd = 2.0;
  double te_sd = 1.0;
  double g_mean = 25.0;
  double g_sd = 8.0;
  // Part 1 index (intercept calibrated to hit zero_fraction):
  // eta1 = b0 + beta_S S + beta_F F + beta_x.x + tau v + 0.2 fe_i + 0.1 te_t.
  double beta_S = 0.05;
  double beta_F = -0.4;
  std::vector<double> beta_x = {0.3, 0.2};
  double tau = -0.1;
  double zero_fraction = 0.5;
  // Part 2: ln E[Y|D=1] = gamma0 + gamma_S S + gamma_F F + gamma_x.x + tau2 v.
  double gamma0 = -8.0;
  double gamma_S = -0.003;
  double gamma_F = 0.01;
  std::vector<double> gamma_x = {0.05, -0.03};
  double tau2 = -0.002;
  double noise_rel = 0.2; // multiplicative outcome noise sd
};

struct PanelDataset {
  EstimationPanel panel;
  double part1_intercept = 0.0; // calibrated
  PanelDgpSpec spec;
  std::uint64_t seed = 0;
};

PanelDataset gen_twopart_panel(const PanelDgpSpec& spec, std::uint64_t seed);

/// Writes panel.csv (substation_id, month, Y, s3, f3, g3, x1..xd) and
/// truth.json under `dir`. The file doubles as a merged reliability panel
/// for the regression commands.
void write_twopart_panel(const std::string& dir, const PanelDataset& dataset);

} // namespace gridcast
