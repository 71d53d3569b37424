#include "gridcast/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "gridcast/csv.hpp"
#include "gridcast/error.hpp"
#include "gridcast/rng.hpp"
#include "gridcast/simulate.hpp"
#include "gridcast/version.hpp"

namespace gridcast {

namespace {

std::string zero_padded(const char* prefix, int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, value);
  return buf;
}

} // namespace

HawkesDataset gen_hawkes_dataset(const HawkesDgpSpec& spec, std::uint64_t seed) {
  if (spec.n_sub < 1) throw ValidationError("need at least one substation");
  if (spec.horizon_days <= 0.0) throw ValidationError("horizon must be positive");
  if (spec.mu < 0.0) throw ValidationError("mu must be nonnegative");

  HawkesDataset ds;
  ds.spec = spec;
  ds.seed = seed;

  // Substations on a small lon/lat grid; spacing is arbitrary but fixed so
  // neighbor structure is reproducible.
  const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.n_sub))));
  for (int i = 0; i < spec.n_sub; ++i) {
    SubstationRecord rec;
    rec.substation_id = zero_padded("S", i + 1, 3);
    rec.lon = 0.05 * (i % grid);
    rec.lat = 0.05 * (i / grid);
    rec.customers_total = spec.customers_per_substation;
    ds.registry.add(std::move(rec));
  }

  HawkesParams truth;
  truth.mu.assign(spec.n_sub, spec.mu);
  truth.c = spec.c;
  truth.phi = Eigen::VectorXd::Zero(0);
  truth.alpha = spec.alpha;
  truth.beta = spec.beta;
  truth.k_nn = spec.k_nn;
  truth.marks = MarkSpace::defaults();
  truth.time_scale_days = spec.horizon_days;
  truth.theta = Eigen::MatrixXd::Zero(truth.marks.n_classes(), 2 + spec.n_sub);
  ds.truth = truth;

  const NeighborGraph graph = build_neighbor_graph(ds.registry, spec.k_nn);
  const MonthlyCovariates no_cov;
  const SimulatedTrajectory traj =
      thinning_simulate(truth, {}, 0.0, spec.horizon_days, no_cov, graph, seed);
  ds.raw = traj.events;

  const std::int64_t t0_min = month_start_minutes(spec.start_month);
  int counter = 0;
  for (const auto& e : ds.raw) {
    OutageEvent ev;
    ev.event_id = zero_padded("E", ++counter, 6);
    ev.substation_id = ds.registry.records()[e.sub].substation_id;
    ev.start_minute = t0_min + static_cast<std::int64_t>(std::floor(e.t * 1440.0));
    const EventWeight rep = truth.marks.representative(e.mark);
    const std::int64_t duration = std::max<std::int64_t>(1, std::llround(rep.duration_minutes));
    ev.end_minute = ev.start_minute + duration;
    ev.customers_affected = std::max<std::int64_t>(1, std::llround(rep.customers));
    ds.events.push_back(std::move(ev));
  }
  return ds;
}

void write_hawkes_dataset(const std::string& dir, const HawkesDataset& ds) {
  std::filesystem::create_directories(dir);
  const std::string seed_note = "seed=" + std::to_string(ds.seed);
  const std::string comments[] = {std::string("gridcast ") + kVersion, seed_note};
  write_events(dir + "/events.csv", ds.events, comments);
  write_registry(dir + "/substations.csv", ds.registry, comments);

  if (ds.events.empty()) {
    std::cerr << "warning: zero events generated over a " << ds.spec.horizon_days
              << "-day horizon (zero-intensity spec?)\n";
  }

  nlohmann::ordered_json j;
  j["format"] = "gridcast-truth";
  j["kind"] = "hawkes";
  j["generator"] = std::string("gridcast ") + kVersion;
  j["seed"] = ds.seed;
  j["n_sub"] = ds.spec.n_sub;
  j["mu"] = ds.spec.mu;
  j["c"] = ds.spec.c;
  j["alpha"] = ds.spec.alpha;
  j["beta"] = ds.spec.beta;
  j["k_nn"] = ds.spec.k_nn;
  j["horizon_days"] = ds.spec.horizon_days;
  j["start_month"] = ds.spec.start_month.str();
  j["customers_per_substation"] = ds.spec.customers_per_substation;
  j["n_events"] = ds.events.size();
  std::ofstream out(dir + "/truth.json", std::ios::binary);
  if (!out) throw Error("cannot write truth.json under '" + dir + "'");
  out << j.dump(2) << "\n";
}

PanelDataset gen_twopart_panel(const PanelDgpSpec& spec, std::uint64_t seed) {
  if (spec.clusters < 2) throw ValidationError("need at least 2 clusters");
  if (spec.months < 3) throw ValidationError("need at least 3 months");
  const int d = static_cast<int>(spec.a2.size());
  if (static_cast<int>(spec.beta_x.size()) != d ||
      static_cast<int>(spec.gamma_x.size()) != d) {
    throw ValidationError("control coefficient vectors must share one length");
  }
  if (!(spec.sigma_v > 0.0) || !(spec.g_sd > 0.0)) {
    throw ValidationError("degenerate noise scales");
  }
  if (!(spec.zero_fraction > 0.0 && spec.zero_fraction < 1.0)) {
    throw ValidationError("zero fraction must lie in (0, 1)");
  }

  Rng rng(seed);
  const int N = spec.clusters * spec.months;

  EstimationPanel panel;
  panel.y.resize(N);
  panel.S.resize(N);
  panel.F.resize(N);
  panel.G.resize(N);
  panel.X.resize(N, d);
  panel.control_names.clear();
  for (int k = 0; k < d; ++k) panel.control_names.push_back("x" + std::to_string(k + 1));

  std::vector<double> fe(spec.clusters), te(spec.months);
  for (auto& f : fe) f = rng.normal(0.0, spec.fe_sd);
  for (auto& t : te) t = rng.normal(0.0, spec.te_sd);

  std::vector<double> v(N), eta1_base(N), eta2(N);
  int row = 0;
  for (int i = 0; i < spec.clusters; ++i) {
    const std::string cid = zero_padded("C", i + 1, 3);
    for (int t = 0; t < spec.months; ++t, ++row) {
      panel.cluster_ids.push_back(cid);
      panel.time_ids.push_back(
          YearMonth::from_index(spec.start_month.index() + t).quarter_id());
      for (int k = 0; k < d; ++k) panel.X(row, k) = rng.normal();
      panel.G(row) = std::abs(rng.normal(spec.g_mean, spec.g_sd));
      v[row] = rng.normal(0.0, spec.sigma_v);
      double s = spec.a0 + spec.a1 * panel.G(row) + fe[i] + te[t] + v[row];
      for (int k = 0; k < d; ++k) s += spec.a2[k] * panel.X(row, k);
      panel.S(row) = s;
      panel.F(row) = 0.5 + 0.01 * s + 0.2 * rng.normal();

      double e1 = spec.beta_S * s + spec.beta_F * panel.F(row) + spec.tau * v[row] +
                  0.2 * fe[i] + 0.1 * te[t];
      for (int k = 0; k < d; ++k) e1 += spec.beta_x[k] * panel.X(row, k);
      eta1_base[row] = e1;

      double e2 = spec.gamma0 + spec.gamma_S * s + spec.gamma_F * panel.F(row) +
                  spec.tau2 * v[row];
      for (int k = 0; k < d; ++k) e2 += spec.gamma_x[k] * panel.X(row, k);
      eta2[row] = e2;
    }
  }

  // Calibrate the part-1 intercept so the expected zero share hits target.
  const double target = 1.0 - spec.zero_fraction;
  auto mean_prob = [&](double b0) {
    double acc = 0.0;
    for (int r = 0; r < N; ++r) {
      const double e = b0 + eta1_base[r];
      acc += e >= 0.0 ? 1.0 / (1.0 + std::exp(-e)) : std::exp(e) / (1.0 + std::exp(e));
    }
    return acc / N;
  };
  double lo = -60.0, hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_prob(mid) < target) lo = mid;
    else hi = mid;
  }
  const double b0 = 0.5 * (lo + hi);

  for (int r = 0; r < N; ++r) {
    const double e = b0 + eta1_base[r];
    const double p = e >= 0.0 ? 1.0 / (1.0 + std::exp(-e)) : std::exp(e) / (1.0 + std::exp(e));
    const bool adopt = rng.uniform01() < p;
    if (!adopt) {
      panel.y(r) = 0.0;
      continue;
    }
    double noise = 1.0 + spec.noise_rel * rng.normal();
    while (noise <= 0.0) noise = 1.0 + spec.noise_rel * rng.normal();
    panel.y(r) = std::exp(eta2[r]) * noise;
  }

  panel.validate();
  PanelDataset out;
  out.panel = std::move(panel);
  out.part1_intercept = b0;
  out.spec = spec;
  out.seed = seed;
  return out;
}

void write_twopart_panel(const std::string& dir, const PanelDataset& ds) {
  std::filesystem::create_directories(dir);
  CsvWriter w(dir + "/panel.csv");
  w.comment(std::string("gridcast ") + kVersion);
  w.comment("seed=" + std::to_string(ds.seed));
  std::vector<std::string> cols = {"substation_id", "month", "Y", "s3", "f3", "g3"};
  for (const auto& c : ds.panel.control_names) cols.push_back(c);
  w.header(cols);
  std::vector<std::string> cells;
  for (int r = 0; r < ds.panel.n(); ++r) {
    cells.clear();
    cells.push_back(ds.panel.cluster_ids[r]);
    const int t = r % ds.spec.months;
    cells.push_back(YearMonth::from_index(ds.spec.start_month.index() + t).str());
    cells.push_back(format_number(ds.panel.y(r)));
    cells.push_back(format_number(ds.panel.S(r)));
    cells.push_back(format_number(ds.panel.F(r)));
    cells.push_back(format_number(ds.panel.G(r)));
    for (int k = 0; k < ds.panel.X.cols(); ++k) {
      cells.push_back(format_number(ds.panel.X(r, k)));
    }
    w.row(cells);
  }
  w.close();

  nlohmann::ordered_json j;
  j["format"] = "gridcast-truth";
  j["kind"] = "twopart-panel";
  j["generator"] = std::string("gridcast ") + kVersion;
  j["seed"] = ds.seed;
  j["clusters"] = ds.spec.clusters;
  j["months"] = ds.spec.months;
  j["a0"] = ds.spec.a0;
  j["a1"] = ds.spec.a1;
  j["a2"] = ds.spec.a2;
  j["sigma_v"] = ds.spec.sigma_v;
  j["beta_S"] = ds.spec.beta_S;
  j["beta_F"] = ds.spec.beta_F;
  j["beta_x"] = ds.spec.beta_x;
  j["tau"] = ds.spec.tau;
  j["part1_intercept"] = ds.part1_intercept;
  j["zero_fraction"] = ds.spec.zero_fraction;
  j["gamma0"] = ds.spec.gamma0;
  j["gamma_S"] = ds.spec.gamma_S;
  j["gamma_F"] = ds.spec.gamma_F;
  j["gamma_x"] = ds.spec.gamma_x;
  j["tau2"] = ds.spec.tau2;
  j["noise_rel"] = ds.spec.noise_rel;
  std::ofstream out(dir + "/truth.json", std::ios::binary);
  if (!out) throw Error("cannot write truth.json under '" + dir + "'");
  out << j.dump(2) << "\n";
}

} // namespace gridcast
