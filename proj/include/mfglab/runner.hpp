#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfglab/config.hpp"
#include "mfglab/csv.hpp"
#include "mfglab/panels.hpp"

namespace mfglab {

struct PanelOutcome {
  std::string name;
  int probes = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

namespace detail {

inline void write_flow_csv(const std::string& path, const MeasureFlow& flow) {
  CsvWriter csv(path);
  int dim = flow.snapshots.front().points.front().n;
  std::vector<std::string> cols{"time", "x0"};
  if (dim == 2) cols.push_back("x1");
  cols.push_back("weight");
  csv.header(cols);
  for (std::size_t i = 0; i < flow.grid_size(); ++i) {
    const ParticleMeasure& m = flow.snapshots[i];
    for (std::size_t j = 0; j < m.size(); ++j) {
      std::vector<double> row{flow.times[i], m.points[j][0]};
      if (dim == 2) row.push_back(m.points[j][1]);
      row.push_back(m.weights[j]);
      csv.row(row);
    }
  }
}

inline void write_rows_csv(const std::string& path,
                           const std::vector<std::string>& cols,
                           const std::vector<std::vector<double>>& rows) {
  CsvWriter csv(path);
  csv.header(cols);
  for (const auto& r : rows) csv.row(r);
}

}  // namespace detail

// Full pipeline: equilibrium -> mild solution -> selected verification
// panels -> report.json + CSV artifacts. Exit 0 iff converged and every
// gated panel passes; 2 when the fixed point did not converge; 1 on error.
inline int run_pipeline(const RunConfig& cfg, std::ostream& log = std::cerr) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  auto out = [&](const std::string& f) { return (fs::path(cfg.output_dir) / f).string(); };

  EquilibriumResult res = solve_equilibrium(cfg.scenario, cfg.m0, cfg.fp);
  log << "fixed point: iterations=" << res.iterations
      << " eps=" << (res.trace.empty() ? 0.0 : res.trace.back())
      << (res.converged ? "" : " (not converged)") << "\n";

  {
    CsvWriter trace(out("trace.csv"));
    trace.header({"k", "eps"});
    for (std::size_t k = 0; k < res.trace.size(); ++k)
      trace.row({static_cast<double>(k + 1), res.trace[k]});
  }
  detail::write_flow_csv(out("flow.csv"), res.flow);

  auto [sampler, flow] = mild_solution(cfg.scenario, res);
  // Structural probes target the optimal-path ensemble (the final best
  // response); the fictitious-play mixture keeps low-weight early paths.
  MeasureFlow support_flow =
      res.best_response.size() ? flow_of(res.best_response) : flow;
  SupportThresholds thr = SupportThresholds::from_flow(support_flow);

  nlohmann::json report;
  report["scenario"] = cfg.name;
  report["seed"] = cfg.seed;
  report["converged"] = res.converged;
  report["iterations"] = res.iterations;
  report["final_eps"] = res.trace.empty() ? 0.0 : res.trace.back();
  report["thresholds"] = {{"delta_b", thr.delta_b}, {"delta_m", thr.delta_m}};
  report["thread_budget"] = thread_budget();

  std::vector<PanelOutcome> outcomes;
  const Domain& dom = cfg.scenario.dom;
  double t_lo = 0.05 * cfg.scenario.T, t_hi = 0.85 * cfg.scenario.T;

  if (!res.converged) {
    // Emit the report with the trace and stop: panels need a mild solution.
    report["panels"] = nlohmann::json::array();
    std::ofstream(out("report.json")) << report.dump(2) << "\n";
    return 2;
  }

  for (const std::string& panel : cfg.panels) {
    PanelOutcome pc;
    pc.name = panel;
    if (panel == "hjb") {
      auto probes = collect_support_probes(support_flow, dom, thr, t_lo, t_hi, 120);
      HjbPanel hp = hjb_panel(*sampler, support_flow, thr, probes);
      pc.probes = hp.interior_probes + hp.boundary_probes;
      pc.max_residual = std::max({hp.max_interior, hp.max_tangential, hp.max_full});
      pc.tolerance = 2e-2;
      pc.pass = hp.max_interior <= 1e-2 && hp.max_tangential <= 2e-2 &&
                hp.max_full <= 2e-2;
      pc.note = "interior " + fmt_g(hp.max_interior) + ", tangential " +
                fmt_g(hp.max_tangential) + ", full " + fmt_g(hp.max_full);
      std::vector<std::string> cols{"t", "x0"};
      if (dom.dim() == 2) cols.push_back("x1");
      cols.insert(cols.end(), {"boundary", "residual"});
      detail::write_rows_csv(out("hjb.csv"), cols, hp.rows);
    } else if (panel == "lambda-plus") {
      auto probes = collect_support_probes(support_flow, dom, thr, t_lo, t_hi, 120);
      LambdaPanel lp = lambda_panel(*sampler, support_flow, thr, probes);
      pc.probes = lp.boundary_probes;
      pc.max_residual = lp.max_tangency;
      pc.tolerance = 1e-8;
      pc.pass = lp.boundary_probes == 0 || (lp.max_tangency <= 1e-8 && lp.monotone);
      pc.note = lp.boundary_probes == 0
                    ? "no boundary support"
                    : (lp.monotone ? "gradient limits monotone" : "non-monotone limits");
      std::vector<std::string> cols{"t", "x0"};
      if (dom.dim() == 2) cols.push_back("x1");
      cols.insert(cols.end(), {"lambda_plus", "tangency", "err_r1", "err_r2", "err_r3"});
      detail::write_rows_csv(out("lambda_plus.csv"), cols, lp.rows);
    } else if (panel == "continuity") {
      const PathMeasure& paths = res.best_response.size() ? res.best_response : res.eta;
      ContinuityPanel cp = continuity_panel(*sampler, flow, support_flow, paths, thr, cfg.seed);
      pc.probes = cp.test_functions;
      pc.max_residual = std::max(cp.max_weak_residual, cp.velocity_consistency);
      pc.tolerance = 5e-2;
      pc.pass = cp.max_weak_residual <= 1e-2 && cp.velocity_consistency <= 5e-2;
      pc.note = "weak " + fmt_g(cp.max_weak_residual) + ", velocity " +
                fmt_g(cp.velocity_consistency) + ", sup|V| " + fmt_g(cp.v_sup);
      detail::write_rows_csv(out("continuity.csv"), {"bump", "residual"}, cp.rows);
    } else if (panel == "sensitivity") {
      auto probes = collect_support_probes(support_flow, dom, thr, t_lo, 0.75 * cfg.scenario.T, 20);
      SensitivityPanel sp = sensitivity_panel(*sampler, probes);
      pc.probes = sp.probes;
      pc.max_residual = sp.max_ratio;
      pc.tolerance = 1.2 * std::max(sp.fitted_c, 1e-12);
      pc.pass = sp.max_ratio <= pc.tolerance;
      pc.note = "fitted c " + fmt_g(sp.fitted_c);
      detail::write_rows_csv(out("sensitivity.csv"), {"probe", "r", "defect", "ratio"},
                             sp.rows);
    } else if (panel == "semiconcavity") {
      // Interior sweep at the domain's reference point, mid-horizon.
      Vec xi = dom.interior_point();
      Vec h = Vec::zero(dom.dim());
      h[0] = 0.25;
      SemiconcavityPanel si =
          semiconcavity_panel(*sampler, 0.45 * cfg.scenario.T, xi, h, 0.25);
      pc.probes = static_cast<int>(si.rows.size());
      pc.max_residual = si.alpha;
      pc.tolerance = 1.9;
      pc.pass = si.alpha >= 1.9;
      pc.note = "interior alpha " + fmt_g(si.alpha);
      detail::write_rows_csv(out("semiconcavity.csv"), {"r", "defect"}, si.rows);
    } else {
      pc.note = "unknown panel";
      pc.pass = false;
    }
    outcomes.push_back(pc);
    log << "panel " << pc.name << ": " << (pc.pass ? "pass" : "FAIL") << " ("
        << pc.note << ")\n";
  }

  nlohmann::json panels = nlohmann::json::array();
  bool all_pass = true;
  for (const PanelOutcome& pc : outcomes) {
    panels.push_back({{"name", pc.name},
                      {"probes", pc.probes},
                      {"max_residual", pc.max_residual},
                      {"tolerance", pc.tolerance},
                      {"pass", pc.pass},
                      {"note", pc.note}});
    all_pass = all_pass && pc.pass;
  }
  report["panels"] = panels;
  std::ofstream(out("report.json")) << report.dump(2) << "\n";
  return all_pass ? 0 : 1;
}

// Single-panel probe against a freshly computed mild solution.
inline int run_probe(const RunConfig& cfg, const std::string& panel,
                     std::optional<double> t_opt, std::optional<Vec> x_opt,
                     double rmin, double rmax, std::ostream& log = std::cerr) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  auto out = [&](const std::string& f) { return (fs::path(cfg.output_dir) / f).string(); };

  EquilibriumResult res = solve_equilibrium(cfg.scenario, cfg.m0, cfg.fp);
  if (!res.converged) {
    log << "fixed point did not converge\n";
    return 2;
  }
  auto [sampler, flow] = mild_solution(cfg.scenario, res);
  // Structural probes target the optimal-path ensemble (the final best
  // response); the fictitious-play mixture keeps low-weight early paths.
  MeasureFlow support_flow =
      res.best_response.size() ? flow_of(res.best_response) : flow;
  SupportThresholds thr = SupportThresholds::from_flow(support_flow);
  const Domain& dom = cfg.scenario.dom;
  double t = t_opt.value_or(0.45 * cfg.scenario.T);
  Vec x = x_opt.value_or(dom.interior_point());
  int k_min = std::max(1, static_cast<int>(std::round(-std::log2(rmax))));
  int k_max = std::max(k_min, static_cast<int>(std::round(-std::log2(rmin))));

  if (panel == "semiconcavity") {
    Vec h = Vec::zero(dom.dim());
    if (!on_boundary(dom, x, 1e-8)) h[0] = 0.25;
    SemiconcavityPanel sp = semiconcavity_panel(*sampler, t, x, h, 0.25, k_min, k_max);
    detail::write_rows_csv(out("semiconcavity.csv"), {"r", "defect"}, sp.rows);
    log << "alpha " << fmt_g(sp.alpha) << " c " << fmt_g(sp.constant) << "\n";
    return 0;
  }
  if (panel == "sensitivity") {
    SupportClass cls;
    try {
      cls = classify_support(support_flow, dom, support_flow.times[support_flow.locate(t).first], x, thr);
    } catch (const Error&) {
      cls = SupportClass::interior_support;
    }
    SensitivityPanel sp = sensitivity_panel(*sampler, {{t, x, cls}}, k_min, k_min + 3, k_max);
    detail::write_rows_csv(out("sensitivity.csv"), {"probe", "r", "defect", "ratio"},
                           sp.rows);
    log << "fitted c " << fmt_g(sp.fitted_c) << " max ratio " << fmt_g(sp.max_ratio)
        << "\n";
    return 0;
  }
  if (panel == "superdiff") {
    SuperdiffEstimate est = superdifferential(*sampler, t, x);
    std::vector<std::vector<double>> rows;
    for (const auto& [pt, px] : est.slopes) {
      std::vector<double> row{pt, px[0]};
      if (dom.dim() == 2) row.push_back(px[1]);
      rows.push_back(row);
    }
    std::vector<std::string> cols{"p_t", "p_x0"};
    if (dom.dim() == 2) cols.push_back("p_x1");
    detail::write_rows_csv(out("superdiff.csv"), cols, rows);
    log << "defect constant " << fmt_g(est.defect_constant)
        << (est.boundary ? " lambda_max " + fmt_g(est.lambda_max) : "") << "\n";
    return 0;
  }
  if (panel == "hjb") {
    double tg = support_flow.times[support_flow.locate(t).first];
    SupportClass cls = classify_support(support_flow, dom, tg, x, thr);
    if (cls == SupportClass::off_support) throw NotOnSupport("probe point is off support");
    std::vector<std::vector<double>> rows;
    double residual;
    if (cls == SupportClass::interior_support) {
      residual = hjb_residual_interior(*sampler, support_flow, tg, x, thr);
      rows.push_back({tg, x[0], 0.0, residual});
    } else {
      BoundaryHjbReport rep = hjb_residual_boundary(*sampler, support_flow, tg, x, thr);
      residual = rep.tangential_residual;
      rows.push_back({tg, x[0], 1.0, residual});
    }
    detail::write_rows_csv(out("hjb.csv"), {"t", "x0", "boundary", "residual"}, rows);
    log << "residual " << fmt_g(residual) << "\n";
    return 0;
  }
  if (panel == "lambda-plus") {
    auto probes = collect_support_probes(support_flow, dom, thr, 0.05 * cfg.scenario.T,
                                         0.85 * cfg.scenario.T, 120);
    LambdaPanel lp = lambda_panel(*sampler, support_flow, thr, probes);
    std::vector<std::string> cols{"t", "x0"};
    if (dom.dim() == 2) cols.push_back("x1");
    cols.insert(cols.end(), {"lambda_plus", "tangency", "err_r1", "err_r2", "err_r3"});
    detail::write_rows_csv(out("lambda_plus.csv"), cols, lp.rows);
    log << "max tangency " << fmt_g(lp.max_tangency) << "\n";
    return 0;
  }
  if (panel == "continuity") {
    const PathMeasure& paths = res.best_response.size() ? res.best_response : res.eta;
    ContinuityPanel cp = continuity_panel(*sampler, flow, support_flow, paths, thr, cfg.seed);
    detail::write_rows_csv(out("continuity.csv"), {"bump", "residual"}, cp.rows);
    log << "max weak residual " << fmt_g(cp.max_weak_residual) << "\n";
    return 0;
  }
  throw ConfigError("unknown probe panel: " + panel);
}

}  // namespace mfglab
