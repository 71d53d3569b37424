#include "gridcast/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "gridcast/baselines.hpp"
#include "gridcast/conformal.hpp"
#include "gridcast/csv.hpp"
#include "gridcast/econometrics.hpp"
#include "gridcast/error.hpp"
#include "gridcast/hawkes.hpp"
#include "gridcast/ingest.hpp"
#include "gridcast/reliability.hpp"
#include "gridcast/report.hpp"
#include "gridcast/scenario.hpp"
#include "gridcast/simulate.hpp"
#include "gridcast/stats.hpp"
#include "gridcast/synth.hpp"
#include "gridcast/version.hpp"

namespace gridcast {

namespace {

struct Ctx {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string config_hash = "none";
};

ReportMeta meta_for(const Ctx& ctx, std::vector<std::string> notes = {}) {
  ReportMeta m;
  m.seed = ctx.seed;
  m.config_hash = ctx.config_hash;
  m.notes = std::move(notes);
  return m;
}

std::vector<std::string> header_comments(const Ctx& ctx, std::vector<std::string> extra = {}) {
  std::vector<std::string> out{std::string("gridcast ") + kVersion,
                               "seed=" + std::to_string(ctx.seed),
                               "config_hash=" + ctx.config_hash};
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

/// First month whose start lies at or after `horizon_days` past the origin.
YearMonth month_after_horizon(YearMonth panel_start, double horizon_days) {
  const std::int64_t origin = month_start_day(panel_start);
  int idx = panel_start.index();
  while (static_cast<double>(month_start_day(YearMonth::from_index(idx)) - origin) <
         horizon_days - 1e-9) {
    ++idx;
  }
  return YearMonth::from_index(idx);
}

TreatmentVar parse_variable(const std::string& name) {
  if (name == "duration" || name == "S" || name == "saidi") return TreatmentVar::duration;
  if (name == "frequency" || name == "F" || name == "saifi") return TreatmentVar::frequency;
  throw Error("unknown variable '" + name + "' (expected duration or frequency)");
}

// ----------------------------------------------------------------- synth

struct SynthHawkesOpts {
  std::string out;
  HawkesDgpSpec spec;
  std::string start = "2014-01";
};

void run_synth_hawkes(const Ctx& ctx, const SynthHawkesOpts& o) {
  HawkesDgpSpec spec = o.spec;
  spec.start_month = YearMonth::parse(o.start);
  const HawkesDataset ds = gen_hawkes_dataset(spec, ctx.seed);
  write_hawkes_dataset(o.out, ds);
  std::cout << "wrote " << ds.events.size() << " events for " << spec.n_sub
            << " substations under " << o.out << "\n";
}

struct SynthPanelOpts {
  std::string out;
  PanelDgpSpec spec;
  std::string start = "2014-01";
};

void run_synth_panel(const Ctx& ctx, const SynthPanelOpts& o) {
  PanelDgpSpec spec = o.spec;
  spec.start_month = YearMonth::parse(o.start);
  const PanelDataset ds = gen_twopart_panel(spec, ctx.seed);
  write_twopart_panel(o.out, ds);
  std::cout << "wrote panel with " << ds.panel.n() << " rows under " << o.out << "\n";
}

// ------------------------------------------------------------ reliability

struct ReliabilityOpts {
  std::string events, substations, covariates, installs, out;
  double min_duration = 0.0;
  std::string window_start, window_end;
};

void run_reliability(const Ctx& ctx, const ReliabilityOpts& o) {
  const auto events = load_events(o.events);
  const auto registry = load_registry(o.substations);
  const auto covariates = load_covariates(o.covariates);
  const auto installs = load_installs(o.installs);

  MonthRange window = covariates.month_span();
  if (!o.window_start.empty()) window.first = YearMonth::parse(o.window_start);
  if (!o.window_end.empty()) window.last = YearMonth::parse(o.window_end);

  ReliabilityPanelOptions opts;
  opts.min_duration_minutes = o.min_duration;
  const ReliabilityPanel panel =
      build_reliability_panel(events, registry, covariates, installs, window, opts);
  const auto comments = header_comments(
      ctx, {"window=" + window.first.str() + ".." + window.last.str(),
            "min_duration_minutes=" + format_number(o.min_duration)});
  write_reliability_panel(o.out, panel, comments);
  std::cout << "wrote reliability panel (" << panel.rows.size() << " rows) to " << o.out
            << "\n";
}

// -------------------------------------------------------------- fit-hawkes

struct FitHawkesOpts {
  std::string events, substations, covariates, out;
  std::string covariate_columns; // comma list; default: all columns
  std::string start;             // YYYY-MM; default: month of first event
  double horizon_days = 0.0;     // default: month-aligned end of data
  int knn = 5;
  int max_iters = 2000;
  double tol = 1e-8;
};

void run_fit_hawkes(const Ctx& ctx, const FitHawkesOpts& o) {
  const auto events = load_events(o.events);
  const auto registry = load_registry(o.substations);
  if (events.empty()) throw ValidationError("no events to fit");

  HawkesModelFile model;
  CovariatePanel cov_panel;
  bool have_cov = false;
  if (!o.covariates.empty()) {
    cov_panel = load_covariates(o.covariates);
    have_cov = true;
    model.covariate_columns =
        o.covariate_columns.empty() ? cov_panel.columns() : split_list(o.covariate_columns);
  }

  YearMonth panel_start = o.start.empty() ? events.front().start_month()
                                          : YearMonth::parse(o.start);
  MonthRange window;
  if (have_cov) {
    window = cov_panel.month_span();
    if (o.start.empty()) panel_start = window.first;
    window.first = panel_start;
  } else {
    window.first = panel_start;
    window.last = events.back().start_month();
  }
  double horizon = o.horizon_days;
  if (horizon <= 0.0) {
    horizon = static_cast<double>(month_start_day(window.last.next()) -
                                  month_start_day(panel_start));
  }
  if (horizon <= 0.0) throw ValidationError("empty fitting horizon");

  MonthlyCovariates X;
  if (have_cov && !model.covariate_columns.empty()) {
    const CovariateStandardization st =
        compute_standardization(cov_panel, window, model.covariate_columns);
    X = monthly_covariates_from_panel(cov_panel, registry, window, panel_start,
                                      model.covariate_columns, &st);
    model.covariate_means = st.means;
    model.covariate_sds = st.sds;
  }

  std::vector<HawkesEvent> hevents =
      events_to_hawkes(events, registry, panel_start, MarkSpace::defaults());
  const std::size_t before = hevents.size();
  std::erase_if(hevents, [&](const HawkesEvent& e) { return e.t < 0.0 || e.t >= horizon; });
  if (hevents.size() != before) {
    std::cerr << "note: " << before - hevents.size()
              << " events outside [start, horizon) excluded from fitting\n";
  }
  if (hevents.empty()) throw ValidationError("no events inside the fitting window");

  const NeighborGraph graph = build_neighbor_graph(registry, o.knn);
  const HawkesData data = make_hawkes_data(std::move(hevents), horizon,
                                           static_cast<int>(registry.size()), X, graph);

  HawkesFitConfig cfg;
  cfg.max_iterations = o.max_iters;
  cfg.tolerance = o.tol;
  cfg.seed = ctx.seed;
  const HawkesFitResult fit = fit_mle(data, cfg);

  model.params = fit.params;
  for (const auto& r : registry.records()) model.substation_ids.push_back(r.substation_id);
  model.panel_start = panel_start;
  model.horizon_days = horizon;
  model.fit_log_lik = fit.log_lik;
  model.fit_iterations = fit.iterations;
  model.fit_converged = fit.converged;
  model.seed = ctx.seed;
  save_hawkes_model(o.out, model);
  std::cout << "fit converged in " << fit.iterations
            << " iterations, log-likelihood " << format_number(fit.log_lik) << "; model at "
            << o.out << "\n";
}

// ---------------------------------------------------------------- shared

struct LoadedModel {
  HawkesModelFile file;
  SubstationRegistry registry;
  NeighborGraph graph;
};

LoadedModel load_model_and_registry(const std::string& model_path,
                                    const std::string& registry_path) {
  LoadedModel lm;
  lm.file = load_hawkes_model(model_path);
  lm.registry = load_registry(registry_path);
  if (lm.registry.size() != lm.file.substation_ids.size()) {
    throw ValidationError("registry size does not match the fitted model");
  }
  for (std::size_t i = 0; i < lm.file.substation_ids.size(); ++i) {
    if (lm.registry.records()[i].substation_id != lm.file.substation_ids[i]) {
      throw ValidationError("registry substation order does not match the fitted model");
    }
  }
  lm.graph = build_neighbor_graph(lm.registry, lm.file.params.k_nn);
  return lm;
}

MonthlyCovariates covariates_for_model(const LoadedModel& lm, const std::string& cov_path,
                                       MonthRange window) {
  if (lm.file.covariate_columns.empty()) return MonthlyCovariates{};
  if (cov_path.empty()) {
    throw ValidationError("model was fitted with covariates; --covariates is required");
  }
  const CovariatePanel panel = load_covariates(cov_path);
  CovariateStandardization st;
  st.means = lm.file.covariate_means;
  st.sds = lm.file.covariate_sds;
  return monthly_covariates_from_panel(panel, lm.registry, window, lm.file.panel_start,
                                       lm.file.covariate_columns, &st);
}

// --------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string model, substations, events, covariates, out;
  int windows = 12;
  int reps = 100;
  std::string start_month; // default: first month after the fitted horizon
};

void run_simulate(const Ctx& ctx, const SimulateOpts& o) {
  const LoadedModel lm = load_model_and_registry(o.model, o.substations);

  std::vector<HawkesEvent> history;
  if (!o.events.empty()) {
    const auto events = load_events(o.events);
    history = events_to_hawkes(events, lm.registry, lm.file.panel_start,
                               lm.file.params.marks);
  }

  const YearMonth first = o.start_month.empty()
                              ? month_after_horizon(lm.file.panel_start, lm.file.horizon_days)
                              : YearMonth::parse(o.start_month);
  const std::vector<double> boundaries =
      month_window_boundaries(lm.file.panel_start, first, o.windows);

  MonthRange cov_window{lm.file.panel_start,
                        YearMonth::from_index(first.index() + o.windows - 1)};
  const MonthlyCovariates X = covariates_for_model(lm, o.covariates, cov_window);

  const auto trajectories =
      simulate_ensemble_windows(lm.file.params, history, boundaries, o.reps, ctx.seed,
                                ctx.threads, X, lm.graph);

  Table t;
  t.columns = {"timestep", "substation", "replication", "metric", "value"};
  std::map<Metric, IndexMatrix> mats;
  for (Metric metric : {Metric::saidi, Metric::saifi, Metric::caidi}) {
    mats.emplace(metric, aggregate_indices_windows(trajectories, lm.registry,
                                                   lm.file.params.marks, metric, boundaries));
  }
  for (int i = 0; i < o.windows; ++i) {
    for (std::size_t s = 0; s < lm.registry.size(); ++s) {
      for (int k = 0; k < o.reps; ++k) {
        for (Metric metric : {Metric::saidi, Metric::saifi, Metric::caidi}) {
          t.add_row({static_cast<std::int64_t>(i),
                     lm.registry.records()[s].substation_id, static_cast<std::int64_t>(k),
                     std::string(metric_name(metric)), mats.at(metric).at(i, static_cast<int>(s), k)});
        }
      }
    }
  }
  write_report(t, meta_for(ctx, {"first_window=" + first.str(),
                                 "windows=" + std::to_string(o.windows)}),
               ReportFormat::csv, o.out);
  std::cout << "wrote ensemble (" << o.reps << " replications x " << o.windows
            << " windows) to " << o.out << "\n";
}

// ---------------------------------------------------------------- forecast

struct ForecastOpts {
  std::string model, substations, events, covariates, out, annual_out;
  double alpha = 0.5;
  int reps = 100;
  int future = 12;
  double calibration_fraction = 0.2;
  std::string point_mode = "trajectory"; // or "mean"
  std::string metrics = "saidi,saifi,caidi";
};

void run_forecast(const Ctx& ctx, const ForecastOpts& o) {
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (!(o.calibration_fraction > 0.0 && o.calibration_fraction < 1.0)) {
    throw ValidationError("calibration fraction must lie in (0, 1)");
  }
  const LoadedModel lm = load_model_and_registry(o.model, o.substations);
  const auto events = load_events(o.events);
  const auto history =
      events_to_hawkes(events, lm.registry, lm.file.panel_start, lm.file.params.marks);

  const YearMonth first_future =
      month_after_horizon(lm.file.panel_start, lm.file.horizon_days);
  const int n_obs = first_future.index() - lm.file.panel_start.index();
  if (n_obs < 2) throw ValidationError("observed span too short to calibrate");
  const int n_cal = std::max(1, static_cast<int>(std::ceil(o.calibration_fraction * n_obs)));

  const std::vector<double> obs_bounds =
      month_window_boundaries(lm.file.panel_start, lm.file.panel_start, n_obs);
  const std::vector<double> cal_bounds(obs_bounds.end() - (n_cal + 1), obs_bounds.end());
  const std::vector<double> fut_bounds =
      month_window_boundaries(lm.file.panel_start, first_future, o.future);

  MonthRange cov_window{lm.file.panel_start,
                        YearMonth::from_index(first_future.index() + o.future - 1)};
  const MonthlyCovariates X = covariates_for_model(lm, o.covariates, cov_window);

  // One-window-ahead calibration ensembles conditioned on observed history.
  std::vector<std::vector<SimulatedTrajectory>> cal_sims(n_cal);
  for (int i = 0; i < n_cal; ++i) {
    const std::vector<double> wb{cal_bounds[i], cal_bounds[i + 1]};
    cal_sims[i] = simulate_ensemble_windows(lm.file.params, history, wb, o.reps,
                                            child_seed(ctx.seed, 101 + i), ctx.threads, X,
                                            lm.graph);
  }
  const auto future_sims =
      simulate_ensemble_windows(lm.file.params, history, fut_bounds, o.reps,
                                child_seed(ctx.seed, 7), ctx.threads, X, lm.graph);

  Table t;
  t.columns = {"timestep", "substation", "metric", "point", "lower", "upper", "level"};
  const int S = static_cast<int>(lm.registry.size());
  std::map<std::string, MetricMatrix> points; // metric -> point matrix for annual output

  for (const std::string& mname : split_list(o.metrics)) {
    const Metric metric = parse_metric(mname);

    IndexMatrix cal_ens;
    cal_ens.metric = metric;
    cal_ens.n_steps = n_cal;
    cal_ens.n_sub = S;
    cal_ens.n_rep = o.reps;
    cal_ens.v.assign(static_cast<std::size_t>(n_cal) * S * o.reps, 0.0);
    for (int i = 0; i < n_cal; ++i) {
      const std::vector<double> wb{cal_bounds[i], cal_bounds[i + 1]};
      const IndexMatrix one = aggregate_indices_windows(cal_sims[i], lm.registry,
                                                        lm.file.params.marks, metric, wb);
      for (int s = 0; s < S; ++s) {
        for (int k = 0; k < o.reps; ++k) cal_ens.at(i, s, k) = one.at(0, s, k);
      }
    }
    const MetricMatrix cal_actual = observed_index_matrix_windows(
        events, lm.registry, lm.file.panel_start, metric, cal_bounds);
    const ResidualStore residuals = nonconformity_scores(cal_ens, cal_actual);
    const std::vector<double> q_hat = conformal_quantiles(residuals, o.alpha);

    const IndexMatrix fut_ens = aggregate_indices_windows(
        future_sims, lm.registry, lm.file.params.marks, metric, fut_bounds);
    auto intervals = prediction_intervals(fut_ens, q_hat, o.alpha, true, 0);
    MetricMatrix point_mat;
    if (o.point_mode == "mean") {
      point_mat = fut_ens.replication_mean();
      for (auto& pi : intervals) pi.point = point_mat.at(pi.step, pi.sub);
    } else if (o.point_mode == "trajectory") {
      point_mat = fut_ens.replication_slice(0);
    } else {
      throw Error("unknown point mode '" + o.point_mode + "' (trajectory or mean)");
    }
    points[mname] = point_mat;

    for (const auto& pi : intervals) {
      t.add_row({static_cast<std::int64_t>(pi.step),
                 lm.registry.records()[pi.sub].substation_id, mname, pi.point, pi.lower,
                 pi.upper, pi.level});
    }
  }

  write_report(t,
               meta_for(ctx, {"alpha=" + format_number(o.alpha),
                              "replications=" + std::to_string(o.reps),
                              "calibration_windows=" + std::to_string(n_cal),
                              "first_window=" + first_future.str(),
                              "point=" + o.point_mode}),
               ReportFormat::csv, o.out);
  std::cout << "wrote forecast (" << o.future << " windows, level "
            << format_number(1.0 - o.alpha) << ") to " << o.out << "\n";

  if (!o.annual_out.empty()) {
    // City-level annual totals of the point prediction: per substation, sum
    // the monthly values within each calendar year, then average across
    // substations. Partial years use the months available.
    Table at;
    at.columns = {"year", "saidi_minutes", "saifi"};
    std::map<int, std::vector<int>> months_by_year;
    for (int i = 0; i < o.future; ++i) {
      months_by_year[YearMonth::from_index(first_future.index() + i).year].push_back(i);
    }
    const bool have_saidi = points.count("saidi") > 0;
    const bool have_saifi = points.count("saifi") > 0;
    if (!have_saidi) throw ValidationError("annual output requires the saidi metric");
    for (const auto& [year, steps] : months_by_year) {
      double saidi_city = 0.0, saifi_city = 0.0;
      for (int s = 0; s < S; ++s) {
        double acc_d = 0.0, acc_f = 0.0;
        for (int i : steps) {
          acc_d += points["saidi"].at(i, s);
          if (have_saifi) acc_f += points["saifi"].at(i, s);
        }
        saidi_city += acc_d;
        saifi_city += acc_f;
      }
      at.add_row({static_cast<std::int64_t>(year), saidi_city / S, saifi_city / S});
    }
    write_report(at, meta_for(ctx, {"point=" + o.point_mode}), ReportFormat::csv,
                 o.annual_out);
  }
}

// ----------------------------------------------------------------- panels

EstimationPanel load_estimation_panel(const std::string& path, const PanelSpecArgs& args) {
  const ReliabilityPanel panel = load_reliability_panel(path);
  return panel_from_reliability(panel, args);
}

// ----------------------------------------------------------------- twopart

struct TwopartOpts {
  std::string panel, out_prefix = "twopart";
  int horizon = 3;
  std::string outcome = "Y";
  std::string controls;
  std::string treatment, frequency, instrument;
  int bootstrap = 200;
};

PanelSpecArgs spec_args(const TwopartOpts& o) {
  PanelSpecArgs a;
  a.horizon = o.horizon;
  a.outcome = o.outcome;
  a.treatment = o.treatment;
  a.frequency = o.frequency;
  a.instrument = o.instrument;
  if (!o.controls.empty()) a.controls = split_list(o.controls);
  return a;
}

void append_coef_rows(Table& t, const std::string& part, const GlmFit& fit) {
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    const std::string& name = fit.names[j];
    if (name.rfind("q_", 0) == 0 || name.rfind("fe_", 0) == 0) continue;
    const double se = std::sqrt(fit.vcov(j, j));
    const double z = se > 0.0 ? fit.coef(j) / se : 0.0;
    const double p = normal_pvalue(z);
    t.add_row({part, name, fit.coef(j), se, z, p, std::string(significance_stars(p))});
  }
}

void write_text_table(const std::string& path, const Ctx& ctx, const TwoPartFit& fit,
                      int horizon, int n_logit, int n_glm, double pseudo_r2) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  for (const auto& c : header_comments(ctx)) out << "# " << c << "\n";
  const std::string h = std::to_string(horizon);
  auto line = [&](const std::string& label, const std::string& value) {
    out << "  " << label << std::string(label.size() < 34 ? 34 - label.size() : 1, ' ')
        << value << "\n";
  };
  auto coef_line = [&](const GlmFit& f, const std::string& term, const std::string& label) {
    for (std::size_t j = 0; j < f.names.size(); ++j) {
      if (f.names[j] != term) continue;
      const double se = std::sqrt(f.vcov(j, j));
      const double z = se > 0.0 ? f.coef(j) / se : 0.0;
      const double p = normal_pvalue(z);
      line(label, format_number(f.coef(j)) + std::string(significance_stars(p)) + " (" +
                      format_number(se) + ")");
    }
  };
  out << "Quarterly new-installation rate, two-part model (horizon " << h << " months)\n";
  out << std::string(72, '=') << "\n";
  out << "Part 1: logistic regression (any adoption)\n";
  coef_line(fit.logit, "S", h + "-month SAIDI");
  coef_line(fit.logit, "F", h + "-month SAIFI");
  coef_line(fit.logit, "eps_hat", "First-stage residual");
  coef_line(fit.logit, "const", "Constant");
  line("Controls", "YES");
  line("Quarter & substation FE", "YES");
  line("Observations", std::to_string(n_logit));
  line("Pseudo R2", format_number(pseudo_r2));
  out << "Part 2: GLM, log link (installation rate | adoption)\n";
  coef_line(fit.glm, "S", h + "-month SAIDI");
  coef_line(fit.glm, "F", h + "-month SAIFI");
  coef_line(fit.glm, "eps_hat", "First-stage residual");
  coef_line(fit.glm, "const", "Constant");
  line("Controls", "YES");
  line("Quarter & substation FE", "YES");
  line("Observations", std::to_string(n_glm));
  out << std::string(72, '=') << "\n";
  out << "Cluster-robust standard errors (by substation) in parentheses.\n";
  out << "Stars: * p<0.05, ** p<0.01, *** p<0.001.\n";
  const double fs = fit.first_stage.f_stat;
  out << "First-stage instrument F-statistic: " << format_number(fs) << "\n";
  if (!out) throw Error("write failure on '" + path + "'");
}

void run_twopart(const Ctx& ctx, const TwopartOpts& o) {
  const EstimationPanel panel = load_estimation_panel(o.panel, spec_args(o));
  const TwoPartFit fit = fit_two_part(panel, o.horizon);

  Table t;
  t.columns = {"part", "term", "coefficient", "std_error", "z_value", "p_value", "stars"};
  {
    const auto& fs = fit.first_stage;
    const int ig = fs.instrument_index;
    const double se = std::sqrt(fs.vcov(ig, ig));
    const double z = fs.coef(ig) / se;
    const double p = normal_pvalue(z);
    t.add_row({std::string("first_stage"), std::string("G"), fs.coef(ig), se, z, p,
               std::string(significance_stars(p))});
  }
  append_coef_rows(t, "logit", fit.logit);
  append_coef_rows(t, "glm", fit.glm);
  const ArTest ar = anderson_rubin(panel);
  t.add_row({std::string("diagnostics"), std::string("anderson_rubin_chi2"), ar.statistic,
             0.0, 0.0, ar.p_value, std::string(significance_stars(ar.p_value))});
  t.add_row({std::string("diagnostics"), std::string("first_stage_F"), fit.first_stage.f_stat,
             0.0, 0.0, 0.0, std::string("")});

  const auto meta = meta_for(
      ctx, {"horizon=" + std::to_string(o.horizon),
            "n_logit=" + std::to_string(fit.logit.n_obs),
            "n_glm=" + std::to_string(fit.glm.n_obs),
            "clusters=" + std::to_string(fit.logit.n_clusters)});
  write_report(t, meta, ReportFormat::csv, o.out_prefix + "_table.csv");

  // McFadden pseudo R2 against the intercept-only model.
  double dbar = 0.0;
  for (int i = 0; i < panel.n(); ++i) dbar += panel.y(i) > 0.0 ? 1.0 : 0.0;
  dbar /= panel.n();
  const double ll0 =
      panel.n() * (dbar * std::log(dbar) + (1.0 - dbar) * std::log(1.0 - dbar));
  const double pseudo = 1.0 - fit.logit.log_lik / ll0;
  write_text_table(o.out_prefix + "_table.txt", ctx, fit, o.horizon, fit.logit.n_obs,
                   fit.glm.n_obs, pseudo);

  if (o.bootstrap > 0) {
    BootstrapConfig bc;
    bc.replications = o.bootstrap;
    bc.seed = ctx.seed;
    bc.threads = ctx.threads;
    Table ta;
    ta.columns = {"variable", "ame", "std_error", "ci_lower", "ci_upper", "stars"};
    for (TreatmentVar var : {TreatmentVar::duration, TreatmentVar::frequency}) {
      const AmeEstimate est = average_marginal_effect(panel, fit, var, bc);
      const double z = est.std_error > 0.0 ? est.value / est.std_error : 0.0;
      const double p = normal_pvalue(z);
      const std::string label = var == TreatmentVar::duration
                                    ? std::to_string(o.horizon) + "-month SAIDI"
                                    : std::to_string(o.horizon) + "-month SAIFI";
      ta.add_row({label, est.value, est.std_error, est.ci_lower, est.ci_upper,
                  std::string(significance_stars(p))});
    }
    write_report(ta, meta, ReportFormat::csv, o.out_prefix + "_ame.csv");
  }
  std::cout << "two-part fit written with prefix '" << o.out_prefix << "' (logit n="
            << fit.logit.n_obs << ", glm n=" << fit.glm.n_obs << ", F="
            << format_number(fit.first_stage.f_stat) << ")\n";
}

// --------------------------------------------------------------------- ame

struct AmeOpts {
  std::string panel, out = "ame.csv";
  int horizon = 3;
  std::string outcome = "Y", controls, treatment, frequency, instrument;
  std::string variables = "duration,frequency";
  int bootstrap = 200;
  std::string format = "csv";
};

void run_ame(const Ctx& ctx, const AmeOpts& o) {
  TwopartOpts to;
  to.horizon = o.horizon;
  to.outcome = o.outcome;
  to.controls = o.controls;
  to.treatment = o.treatment;
  to.frequency = o.frequency;
  to.instrument = o.instrument;
  const EstimationPanel panel = load_estimation_panel(o.panel, spec_args(to));
  const TwoPartFit fit = fit_two_part(panel, o.horizon);
  BootstrapConfig bc;
  bc.replications = o.bootstrap;
  bc.seed = ctx.seed;
  bc.threads = ctx.threads;

  Table t;
  t.columns = {"variable", "ame", "std_error", "ci_lower", "ci_upper", "stars"};
  for (const auto& vname : split_list(o.variables)) {
    const TreatmentVar var = parse_variable(vname);
    const AmeEstimate est = average_marginal_effect(panel, fit, var, bc);
    const double z = est.std_error > 0.0 ? est.value / est.std_error : 0.0;
    const double p = normal_pvalue(z);
    const std::string label = (var == TreatmentVar::duration ? "SAIDI" : "SAIFI");
    t.add_row({std::to_string(o.horizon) + "-month " + label, est.value, est.std_error,
               est.ci_lower, est.ci_upper, std::string(significance_stars(p))});
  }
  write_report(t, meta_for(ctx, {"bootstrap=" + std::to_string(o.bootstrap)}),
               parse_report_format(o.format), o.out);
  std::cout << "wrote AME table to " << o.out << "\n";
}

// ----------------------------------------------------------------- margins

struct MarginsOpts {
  std::string panel, out = "margins.csv";
  int horizon = 3;
  std::string outcome = "Y", controls, treatment, frequency, instrument;
  std::string variable = "duration";
  double grid_min = 0.0, grid_max = 250.0;
  int grid_steps = 26;
  int bootstrap = 200;
  std::string format = "csv";
};

void run_margins(const Ctx& ctx, const MarginsOpts& o) {
  if (o.grid_steps < 1) throw ValidationError("grid needs at least one point");
  TwopartOpts to;
  to.horizon = o.horizon;
  to.outcome = o.outcome;
  to.controls = o.controls;
  to.treatment = o.treatment;
  to.frequency = o.frequency;
  to.instrument = o.instrument;
  const EstimationPanel panel = load_estimation_panel(o.panel, spec_args(to));
  const TwoPartFit fit = fit_two_part(panel, o.horizon);

  std::vector<double> grid(o.grid_steps);
  for (int i = 0; i < o.grid_steps; ++i) {
    grid[i] = o.grid_steps == 1
                  ? o.grid_min
                  : o.grid_min + (o.grid_max - o.grid_min) * i / (o.grid_steps - 1);
  }
  BootstrapConfig bc;
  bc.replications = o.bootstrap;
  bc.seed = ctx.seed;
  bc.threads = ctx.threads;
  const TreatmentVar var = parse_variable(o.variable);
  const auto curve = predictive_margins(panel, fit, var, grid, bc);

  Table t;
  t.columns = {"variable", "value", "mean_outcome", "ci_lower", "ci_upper"};
  for (const auto& mp : curve) {
    t.add_row({o.variable, mp.value, mp.mean_outcome, mp.ci_lower, mp.ci_upper});
  }
  write_report(t, meta_for(ctx, {"bootstrap=" + std::to_string(o.bootstrap)}),
               parse_report_format(o.format), o.out);
  std::cout << "wrote predictive margins to " << o.out << "\n";
}

// ------------------------------------------------------------ baseline-var

struct BaselineVarOpts {
  std::string panel, out = "baseline_var.csv";
  int train = 12;
  std::string lags = "1,2";
  std::string metrics = "saidi,saifi,caidi";
  double normalize = 1.0;
  std::string sims;             // optional simulate output covering the test months
  std::string sims_point = "mean"; // or "first"
  std::string format = "csv";
};

void run_baseline_var(const Ctx& ctx, const BaselineVarOpts& o) {
  const ReliabilityPanel panel = load_reliability_panel(o.panel);
  if (!(o.normalize > 0.0)) throw ValidationError("normalization constant must be positive");

  // Pivot monthly columns into T x S matrices (sorted substations, months).
  std::set<std::string> sub_set;
  std::set<int> month_set;
  for (const auto& r : panel.rows) {
    sub_set.insert(r.substation_id);
    month_set.insert(r.month.index());
  }
  const std::vector<std::string> subs(sub_set.begin(), sub_set.end());
  const std::vector<int> months(month_set.begin(), month_set.end());
  std::map<std::string, int> sub_pos;
  for (std::size_t i = 0; i < subs.size(); ++i) sub_pos[subs[i]] = static_cast<int>(i);
  std::map<int, int> month_pos;
  for (std::size_t i = 0; i < months.size(); ++i) month_pos[months[i]] = static_cast<int>(i);
  const int T = static_cast<int>(months.size());
  const int S = static_cast<int>(subs.size());
  if (o.train < 3 || o.train >= T) throw ValidationError("train window must lie in [3, T)");

  const auto metric_list = split_list(o.metrics);
  std::map<std::string, Eigen::MatrixXd> series;
  for (const auto& mname : metric_list) {
    const int col = panel.require_column(mname);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(T, S);
    for (const auto& r : panel.rows) {
      m(month_pos[r.month.index()], sub_pos[r.substation_id]) = r.values[col] / o.normalize;
    }
    series[mname] = std::move(m);
  }

  // Optional point forecasts from the event-based pipeline over the test span.
  std::map<std::string, Eigen::MatrixXd> pipeline;
  if (!o.sims.empty()) {
    const CsvTable t = read_csv(o.sims);
    const int c_step = t.require_column("timestep");
    const int c_sub = t.require_column("substation");
    const int c_rep = t.require_column("replication");
    const int c_metric = t.require_column("metric");
    const int c_value = t.require_column("value");
    const int n_test = T - o.train;
    std::map<std::string, Eigen::MatrixXd> sums;
    std::map<std::string, Eigen::MatrixXd> counts;
    for (const auto& mname : metric_list) {
      sums[mname] = Eigen::MatrixXd::Zero(n_test, S);
      counts[mname] = Eigen::MatrixXd::Zero(n_test, S);
    }
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const std::string& mname = t.rows[i][c_metric];
      if (!sums.count(mname)) continue;
      const int step = std::stoi(t.rows[i][c_step]);
      const int rep = std::stoi(t.rows[i][c_rep]);
      auto it = sub_pos.find(t.rows[i][c_sub]);
      if (it == sub_pos.end()) {
        throw ValidationError("sims file references unknown substation '" + t.rows[i][c_sub] +
                              "'");
      }
      if (step < 0 || step >= n_test) {
        throw ValidationError("sims timestep " + std::to_string(step) +
                              " outside the test span");
      }
      if (o.sims_point == "first" && rep != 0) continue;
      const double v = std::strtod(t.rows[i][c_value].c_str(), nullptr) / o.normalize;
      sums[mname](step, it->second) += v;
      counts[mname](step, it->second) += 1.0;
    }
    for (const auto& mname : metric_list) {
      if ((counts[mname].array() == 0.0).any()) {
        throw ValidationError("sims file does not cover every (timestep, substation) cell");
      }
      pipeline[mname] = sums[mname].array() / counts[mname].array();
    }
  }

  Table out;
  out.columns = {"method"};
  for (const auto& mname : metric_list) {
    out.columns.push_back(mname + "_mse");
    out.columns.push_back(mname + "_sd");
  }
  std::vector<int> lag_list;
  for (const auto& l : split_list(o.lags)) lag_list.push_back(std::stoi(l));

  for (int p : lag_list) {
    std::vector<Table::Cell> row{std::string("var_lag") + std::to_string(p)};
    for (const auto& mname : metric_list) {
      const Eigen::MatrixXd& m = series[mname];
      const VarFit fit = fit_var(m.topRows(o.train), p);
      const Eigen::MatrixXd pred = var_forecast_one_step(fit, m, o.train);
      const MseReport rep = evaluate_mse(pred, m.bottomRows(T - o.train));
      row.push_back(rep.grand_mean);
      row.push_back(rep.dispersion);
    }
    out.add_row(std::move(row));
  }
  if (!pipeline.empty()) {
    std::vector<Table::Cell> row{std::string("hawkes_pipeline")};
    for (const auto& mname : metric_list) {
      const MseReport rep =
          evaluate_mse(pipeline[mname], series[mname].bottomRows(T - o.train));
      row.push_back(rep.grand_mean);
      row.push_back(rep.dispersion);
    }
    out.add_row(std::move(row));
  }

  write_report(out,
               meta_for(ctx, {"train_months=" + std::to_string(o.train),
                              "normalization=" + format_number(o.normalize),
                              "dispersion=std_over_time_of_series_mean_sq_error"}),
               parse_report_format(o.format), o.out);
  std::cout << "wrote baseline comparison to " << o.out << "\n";
}

// ---------------------------------------------------------------- scenario

struct ScenarioOpts {
  std::string trajectory, out = "scenario.csv";
  double baseline_rate = 0.00039;
  std::int64_t households = 377726;
  double ame_per_hour = -0.00012;
  double baseline_saidi = 202.0;
  std::string format = "csv";
};

void run_scenario(const Ctx& ctx, const ScenarioOpts& o) {
  const CsvTable t = read_csv(o.trajectory);
  const int c_year = t.require_column("year");
  const int c_saidi = t.require_column("saidi_minutes");
  if (t.rows.empty()) throw ValidationError("trajectory file has no rows");

  ScenarioInput in;
  in.baseline_rate = o.baseline_rate;
  in.households = o.households;
  in.ame_per_hour = o.ame_per_hour;
  in.baseline_saidi = o.baseline_saidi;
  std::vector<std::int64_t> years;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    years.push_back(std::stoll(t.rows[i][c_year]));
    in.saidi_trajectory.push_back(std::strtod(t.rows[i][c_saidi].c_str(), nullptr));
  }
  in.years = static_cast<int>(in.saidi_trajectory.size());
  const ScenarioResult res = outage_adjusted_installs(in);

  Table out;
  out.columns = {"year", "saidi_minutes", "excess_hours", "adjusted_rate", "installs"};
  for (int y = 0; y < in.years; ++y) {
    out.add_row({years[y], in.saidi_trajectory[y],
                 (in.saidi_trajectory[y] - in.baseline_saidi) / 60.0, res.adjusted_rates[y],
                 res.yearly_installs[y]});
  }
  write_report(out,
               meta_for(ctx, {"total_installs=" + format_number(res.total),
                              "counterfactual_installs=" + format_number(res.counterfactual),
                              "reduction=" + format_number(res.reduction),
                              "baseline_rate=" + format_number(in.baseline_rate),
                              "baseline_saidi=" + format_number(in.baseline_saidi),
                              "ame_per_hour=" + format_number(in.ame_per_hour),
                              "households=" + std::to_string(in.households)}),
               parse_report_format(o.format), o.out);
  std::cout << "adjusted cumulative installs " << format_number(res.total) << " vs "
            << format_number(res.counterfactual) << " counterfactual ("
            << format_number(100.0 * res.reduction) << "% reduction); table at " << o.out
            << "\n";
}

// --------------------------------------------------------------------- vif

struct VifOpts {
  std::string panel, out = "vif.csv";
  std::string columns;
  std::string format = "csv";
};

void run_vif(const Ctx& ctx, const VifOpts& o) {
  const auto names = split_list(o.columns);
  if (names.size() < 2) throw ValidationError("VIF needs at least 2 columns");
  const CsvTable t = read_csv(o.panel);
  std::vector<int> idx;
  for (const auto& n : names) idx.push_back(t.require_column(n));
  Eigen::MatrixXd m(t.rows.size(), names.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const std::string& cell = t.rows[i][idx[j]];
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        throw ParseError(o.panel, t.line_numbers[i],
                         "non-numeric cell '" + cell + "' in column '" + names[j] + "'");
      }
      m(i, j) = v;
    }
  }
  const auto values = vif(m);
  Table out;
  out.columns = {"variable", "vif", "tolerance"};
  for (std::size_t j = 0; j < names.size(); ++j) {
    const bool inf = std::isinf(values[j]);
    out.add_row({names[j], inf ? std::string("inf") : Table::Cell(values[j]),
                 inf ? Table::Cell(0.0) : Table::Cell(1.0 / values[j])});
  }
  write_report(out, meta_for(ctx), parse_report_format(o.format), o.out);
  std::cout << "wrote VIF table to " << o.out << "\n";
}

// ------------------------------------------------------------------ wiring

std::string hash_invocation(const std::vector<std::string>& args) {
  std::string blob;
  for (const auto& a : args) {
    blob += a;
    blob += '\n';
    if (a.rfind("--config", 0) == 0) continue;
  }
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") {
      std::ifstream in(args[i + 1], std::ios::binary);
      if (in) {
        std::ostringstream ss;
        ss << in.rdbuf();
        blob += ss.str();
      }
    }
  }
  return fnv1a64_hex(blob);
}

} // namespace

int dispatch(const std::vector<std::string>& args) {
  Ctx ctx;
  ctx.config_hash = hash_invocation(args);

  CLI::App app{"event-level grid reliability indices, outage forecasting and "
               "adoption analysis"};
  app.name("gridcast");
  app.require_subcommand(1);
  app.fallthrough(true);
  app.set_version_flag("--version", std::string("gridcast ") + kVersion);
  app.set_config("--config", "", "key=value configuration file; flags take precedence");
  app.add_option("--seed", ctx.seed, "master random seed")->capture_default_str();
  app.add_option("--threads", ctx.threads, "worker threads for replications and bootstrap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic datasets with known truth");
  synth->require_subcommand(1);
  {
    auto o = std::make_shared<SynthHawkesOpts>();
    auto* c = synth->add_subcommand("hawkes", "synthetic outage event stream");
    c->add_option("--out", o->out, "output directory")->required();
    c->add_option("--substations", o->spec.n_sub)->capture_default_str();
    c->add_option("--mu", o->spec.mu, "base rate per substation, events/day")
        ->capture_default_str();
    c->add_option("--alpha", o->spec.alpha, "branching ratio")->capture_default_str();
    c->add_option("--beta", o->spec.beta, "kernel decay, 1/day")->capture_default_str();
    c->add_option("--trend", o->spec.c, "linear trend slope, 1/day")->capture_default_str();
    c->add_option("--knn", o->spec.k_nn, "neighborhood size")->capture_default_str();
    c->add_option("--horizon-days", o->spec.horizon_days)->capture_default_str();
    c->add_option("--start", o->start, "first month, YYYY-MM")->capture_default_str();
    c->add_option("--customers", o->spec.customers_per_substation)->capture_default_str();
    c->callback([&ctx, o] { run_synth_hawkes(ctx, *o); });
  }
  {
    auto o = std::make_shared<SynthPanelOpts>();
    auto* c = synth->add_subcommand("panel", "synthetic two-part estimation panel");
    c->add_option("--out", o->out, "output directory")->required();
    c->add_option("--clusters", o->spec.clusters)->capture_default_str();
    c->add_option("--months", o->spec.months)->capture_default_str();
    c->add_option("--zero-fraction", o->spec.zero_fraction)->capture_default_str();
    c->add_option("--tau", o->spec.tau, "part-1 endogeneity loading")->capture_default_str();
    c->add_option("--tau2", o->spec.tau2, "part-2 endogeneity loading")
        ->capture_default_str();
    c->add_option("--instrument-strength", o->spec.a1)->capture_default_str();
    c->add_option("--start", o->start, "first month, YYYY-MM")->capture_default_str();
    c->callback([&ctx, o] { run_synth_panel(ctx, *o); });
  }

  {
    auto o = std::make_shared<ReliabilityOpts>();
    auto* c = app.add_subcommand("reliability",
                                 "build the substation-month reliability panel");
    c->add_option("--events", o->events)->required();
    c->add_option("--substations", o->substations)->required();
    c->add_option("--covariates", o->covariates)->required();
    c->add_option("--installs", o->installs)->required();
    c->add_option("--out", o->out)->required();
    c->add_option("--min-duration", o->min_duration, "drop events shorter than this, minutes")
        ->capture_default_str();
    c->add_option("--window-start", o->window_start, "YYYY-MM (default: covariate span)");
    c->add_option("--window-end", o->window_end, "YYYY-MM (default: covariate span)");
    c->callback([&ctx, o] { run_reliability(ctx, *o); });
  }

  {
    auto o = std::make_shared<FitHawkesOpts>();
    auto* c = app.add_subcommand("fit-hawkes",
                                 "fit the marked spatio-temporal outage model");
    c->add_option("--events", o->events)->required();
    c->add_option("--substations", o->substations)->required();
    c->add_option("--out", o->out, "output model JSON")->required();
    c->add_option("--covariates", o->covariates);
    c->add_option("--covariate-columns", o->covariate_columns,
                  "comma list (default: all covariate columns)");
    c->add_option("--start", o->start, "panel start month, YYYY-MM");
    c->add_option("--horizon-days", o->horizon_days,
                  "fitting horizon (default: month-aligned end of data)");
    c->add_option("--knn", o->knn, "neighborhood size")->capture_default_str();
    c->add_option("--max-iters", o->max_iters)->capture_default_str();
    c->add_option("--tol", o->tol, "relative log-likelihood tolerance")
        ->capture_default_str();
    c->callback([&ctx, o] { run_fit_hawkes(ctx, *o); });
  }

  {
    auto o = std::make_shared<SimulateOpts>();
    auto* c = app.add_subcommand("simulate", "draw outage trajectories from a fitted model");
    c->add_option("--model", o->model)->required();
    c->add_option("--substations", o->substations)->required();
    c->add_option("--events", o->events, "observed history events");
    c->add_option("--covariates", o->covariates);
    c->add_option("--out", o->out)->required();
    c->add_option("--windows", o->windows, "number of month windows")->capture_default_str();
    c->add_option("--reps", o->reps, "replications")->capture_default_str();
    c->add_option("--start-month", o->start_month,
                  "first simulated month (default: month after the fitted horizon)");
    c->callback([&ctx, o] { run_simulate(ctx, *o); });
  }

  {
    auto o = std::make_shared<ForecastOpts>();
    auto* c = app.add_subcommand(
        "forecast", "conformal prediction intervals for future reliability indices");
    c->add_option("--model", o->model)->required();
    c->add_option("--events", o->events)->required();
    c->add_option("--substations", o->substations)->required();
    c->add_option("--covariates", o->covariates);
    c->add_option("--out", o->out)->required();
    c->add_option("--annual-out", o->annual_out, "city-level annual point totals CSV");
    c->add_option("--alpha", o->alpha, "miscoverage level")->capture_default_str();
    c->add_option("--reps", o->reps, "replications K")->capture_default_str();
    c->add_option("--future", o->future, "future month windows")->capture_default_str();
    c->add_option("--calibration-fraction", o->calibration_fraction)
        ->capture_default_str();
    c->add_option("--point", o->point_mode, "point prediction: trajectory or mean")
        ->capture_default_str();
    c->add_option("--metrics", o->metrics)->capture_default_str();
    c->callback([&ctx, o] { run_forecast(ctx, *o); });
  }

  {
    auto o = std::make_shared<TwopartOpts>();
    auto* c = app.add_subcommand("twopart",
                                 "two-part control-function model with clustered inference");
    c->add_option("--panel", o->panel, "reliability panel CSV")->required();
    c->add_option("--out-prefix", o->out_prefix)->capture_default_str();
    c->add_option("--horizon", o->horizon, "treatment horizon in months")
        ->capture_default_str();
    c->add_option("--outcome", o->outcome)->capture_default_str();
    c->add_option("--controls", o->controls, "comma list (default: all other columns)");
    c->add_option("--treatment", o->treatment, "override treatment column");
    c->add_option("--frequency", o->frequency, "override frequency column");
    c->add_option("--instrument", o->instrument, "override instrument column");
    c->add_option("--bootstrap", o->bootstrap, "AME bootstrap replicates (0 = skip)")
        ->capture_default_str();
    c->callback([&ctx, o] { run_twopart(ctx, *o); });
  }

  {
    auto o = std::make_shared<AmeOpts>();
    auto* c = app.add_subcommand("ame", "average marginal effects of the two-part model");
    c->add_option("--panel", o->panel)->required();
    c->add_option("--out", o->out)->capture_default_str();
    c->add_option("--horizon", o->horizon)->capture_default_str();
    c->add_option("--outcome", o->outcome)->capture_default_str();
    c->add_option("--controls", o->controls);
    c->add_option("--treatment", o->treatment);
    c->add_option("--frequency", o->frequency);
    c->add_option("--instrument", o->instrument);
    c->add_option("--variables", o->variables)->capture_default_str();
    c->add_option("--bootstrap", o->bootstrap)->capture_default_str();
    c->add_option("--format", o->format)->capture_default_str();
    c->callback([&ctx, o] { run_ame(ctx, *o); });
  }

  {
    auto o = std::make_shared<MarginsOpts>();
    auto* c = app.add_subcommand("margins", "predictive margins over a treatment grid");
    c->add_option("--panel", o->panel)->required();
    c->add_option("--out", o->out)->capture_default_str();
    c->add_option("--horizon", o->horizon)->capture_default_str();
    c->add_option("--outcome", o->outcome)->capture_default_str();
    c->add_option("--controls", o->controls);
    c->add_option("--treatment", o->treatment);
    c->add_option("--frequency", o->frequency);
    c->add_option("--instrument", o->instrument);
    c->add_option("--variable", o->variable)->capture_default_str();
    c->add_option("--grid-min", o->grid_min)->capture_default_str();
    c->add_option("--grid-max", o->grid_max)->capture_default_str();
    c->add_option("--grid-steps", o->grid_steps)->capture_default_str();
    c->add_option("--bootstrap", o->bootstrap)->capture_default_str();
    c->add_option("--format", o->format)->capture_default_str();
    c->callback([&ctx, o] { run_margins(ctx, *o); });
  }

  {
    auto o = std::make_shared<BaselineVarOpts>();
    auto* c = app.add_subcommand("baseline-var",
                                 "vector-autoregression baseline comparison");
    c->add_option("--panel", o->panel)->required();
    c->add_option("--out", o->out)->capture_default_str();
    c->add_option("--train", o->train, "training months")->capture_default_str();
    c->add_option("--lags", o->lags)->capture_default_str();
    c->add_option("--metrics", o->metrics)->capture_default_str();
    c->add_option("--normalize", o->normalize, "divide values by this constant")
        ->capture_default_str();
    c->add_option("--sims", o->sims, "pipeline ensemble CSV over the test months");
    c->add_option("--sims-point", o->sims_point, "mean or first")->capture_default_str();
    c->add_option("--format", o->format)->capture_default_str();
    c->callback([&ctx, o] { run_baseline_var(ctx, *o); });
  }

  {
    auto o = std::make_shared<ScenarioOpts>();
    auto* c = app.add_subcommand("scenario",
                                 "counterfactual adoption under a reliability trajectory");
    c->add_option("--trajectory", o->trajectory, "CSV with year, saidi_minutes")->required();
    c->add_option("--out", o->out)->capture_default_str();
    c->add_option("--baseline-rate", o->baseline_rate)->capture_default_str();
    c->add_option("--households", o->households)->capture_default_str();
    c->add_option("--ame-per-hour", o->ame_per_hour)->capture_default_str();
    c->add_option("--baseline-saidi", o->baseline_saidi)->capture_default_str();
    c->add_option("--format", o->format)->capture_default_str();
    c->callback([&ctx, o] { run_scenario(ctx, *o); });
  }

  {
    auto o = std::make_shared<VifOpts>();
    auto* c = app.add_subcommand("vif", "variance inflation factors");
    c->add_option("--panel", o->panel)->required();
    c->add_option("--columns", o->columns, "comma list of columns")->required();
    c->add_option("--out", o->out)->capture_default_str();
    c->add_option("--format", o->format)->capture_default_str();
    c->callback([&ctx, o] { run_vif(ctx, *o); });
  }

  std::vector<std::string> argv_copy = args;
  try {
    std::reverse(argv_copy.begin(), argv_copy.end());
    app.parse(argv_copy);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    std::cout << app.version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args);
}

} // namespace gridcast
