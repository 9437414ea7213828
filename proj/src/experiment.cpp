#include "speclab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "speclab/control.hpp"
#include "speclab/extension.hpp"
#include "speclab/operator.hpp"
#include "speclab/report.hpp"
#include "speclab/sets.hpp"
#include "speclab/specineq.hpp"

namespace speclab {

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunContext {
  const ExperimentConfig& cfg;
  std::filesystem::path outDir;
  RunRecord record;

  void emit(const std::string& name, const CsvTable& table) {
    table.write((outDir / name).string());
    record.files.push_back(name);
  }
  void emitSvg(const std::string& name, const std::string& title,
               const std::vector<SvgSeries>& series) {
    write_svg_semilogy((outDir / name).string(), title, series);
    record.files.push_back(name);
  }
  void check(const std::string& name, bool pass, const std::string& detail) {
    record.checks.push_back({name, pass, detail});
  }
  void warn(const std::string& w) { record.warnings.push_back(w); }
};

Grid makeGrid(const ExperimentConfig& cfg) {
  try {
    return build_torus(cfg.dim, cfg.extent, cfg.resolution);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: domain invalid: ") + e.what());
  }
}

std::vector<Cell> makeCells(const ExperimentConfig& cfg, const Grid& grid) {
  if (!cfg.cells) {
    throw ConfigError("config: missing field cells (required here)");
  }
  try {
    return cell_cover(grid, cfg.cells->R, cfg.cells->T1, cfg.cells->T2,
                      cfg.cells->pitch);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: cells invalid: ") + e.what());
  }
}

ObservationSet makeOmega(const ExperimentConfig& cfg, const Grid& grid) {
  if (!cfg.omega) {
    throw ConfigError("config: missing field sets.omega (required here)");
  }
  try {
    return generate_set(*cfg.omega, grid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: sets.omega invalid: ") + e.what());
  }
}

void enforceResolution(RunContext& ctx, const Grid& grid, double muMax) {
  if (muMax <= 0.0 || resolution_ok(grid, muMax)) return;
  std::ostringstream msg;
  msg << "under-resolved: fewer than 8 points per wavelength at mu=" << muMax
      << " (resolution " << grid.resolution() << ")";
  if (ctx.cfg.strict) throw ConfigError("config: " + msg.str());
  ctx.warn(msg.str());
}

std::vector<double> muGrid(const nlohmann::json& params, const char* key) {
  if (!params.contains(key) || !params.at(key).is_array() ||
      params.at(key).empty()) {
    throw ConfigError(std::string("config: parameters.") + key +
                      " must be a non-empty array");
  }
  std::vector<double> mus;
  for (const auto& v : params.at(key)) mus.push_back(v.get<double>());
  return mus;
}

Eigen::VectorXd makeVector(const nlohmann::json& spec,
                           const SpectralDecomposition& dec,
                           const std::string& path) {
  const std::string type = spec.value("type", std::string());
  const int n = dec.size();
  if (type == "zero") return Eigen::VectorXd::Zero(n);
  if (type == "mode") {
    int k = spec.value("k", 0);
    if (k < 0 || k >= n) throw ConfigError("config: " + path + ".k out of range");
    return dec.modes.col(k);
  }
  if (type == "random" || type == "random-lowpass") {
    std::mt19937_64 rng(spec.value("seed", 7ULL));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u[i] = normal(rng);
    if (type == "random-lowpass") {
      double mu = spec.value("mu", dec.maxFrequency());
      u = project_below(dec, mu, u);
    }
    double nu = dec.kappaNorm(u);
    if (nu > 0) u /= nu;
    return u;
  }
  throw ConfigError("config: " + path + ".type must be zero|mode|random|random-lowpass");
}

TimeSet parseTimeSet(const nlohmann::json& params, double T, int quadNodes) {
  if (!params.contains("F") || !params.at("F").is_array()) {
    throw ConfigError("config: parameters.F must be an array of [a,b] pairs");
  }
  std::vector<TimeSet::Interval> ivs;
  for (const auto& p : params.at("F")) {
    if (!p.is_array() || p.size() != 2) {
      throw ConfigError("config: parameters.F entries must be [a,b]");
    }
    ivs.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  try {
    TimeSet F = TimeSet::unionOf(ivs, quadNodes);
    for (const auto& iv : F.intervals) {
      if (iv.b > T) throw std::invalid_argument("interval leaves (0,T)");
    }
    return F;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: parameters.F invalid: ") + e.what());
  }
}

// ---------------------------------------------------------------- spectrum

void runSpectrum(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  Grid grid = makeGrid(cfg);
  CoefficientField coeffs = sample_coefficients(cfg.coefficients, grid);
  EllipticOperator op = assemble(grid, coeffs);
  SpectralDecomposition dec =
      eigendecompose(op, cfg.parameters.value("dense_cap", 4096));

  CsvTable table({"k", "lambda_squared", "lambda"});
  for (int k = 0; k < dec.size(); ++k) {
    table.addRow({static_cast<double>(k), dec.eigenvalues[k],
                  dec.frequencies[k]});
  }
  ctx.emit("eigenvalues.csv", table);

  // Orthonormality residual.
  Eigen::MatrixXd gram =
      dec.modes.transpose() * dec.weight.asDiagonal() * dec.modes;
  gram.diagonal().array() -= 1.0;
  double orthoResidual = gram.cwiseAbs().maxCoeff();
  ctx.check("orthonormality", orthoResidual <= 1e-8,
            "max |<e_j,e_k>_kappa - delta| = " +
                CsvTable::formatDouble(orthoResidual));

  // Closed-form comparison for constant isotropic coefficients.
  const auto& cs = cfg.coefficients;
  if (cs.kind == CoefficientSpec::Kind::Constant && cs.g0xy == 0.0 &&
      (grid.dim() == 1 || cs.g0xx == cs.g0yy)) {
    std::vector<double> exact;
    const int N = grid.resolution();
    const double h = grid.spacing();
    auto axisEig = [&](int k) {
      double s = std::sin(std::numbers::pi * k / N);
      return 4.0 / (h * h) * s * s;
    };
    if (grid.dim() == 1) {
      for (int k = 0; k < N; ++k) exact.push_back(cs.g0xx * axisEig(k));
    } else {
      for (int k = 0; k < N; ++k) {
        for (int l = 0; l < N; ++l) {
          exact.push_back(cs.g0xx * (axisEig(k) + axisEig(l)));
        }
      }
    }
    std::sort(exact.begin(), exact.end());
    double scale = exact.back();
    double worst = 0.0;
    for (int k = 0; k < dec.size(); ++k) {
      worst = std::max(worst, std::abs(dec.eigenvalues[k] - exact[k]) / scale);
    }
    CsvTable cmp({"k", "computed", "exact"});
    for (int k = 0; k < dec.size(); ++k) {
      cmp.addRow({static_cast<double>(k), dec.eigenvalues[k], exact[k]});
    }
    ctx.emit("closed_form_comparison.csv", cmp);
    ctx.check("eigenvalues_match_closed_form", worst <= 1e-10,
              "max rel err = " + CsvTable::formatDouble(worst));
  }
}

// -------------------------------------------------------------------- sets

void runSets(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  Grid grid = makeGrid(cfg);
  ObservationSet omega = makeOmega(cfg, grid);

  CsvTable nodes({"node", "x", "y"});
  for (int n : omega.nodes) {
    auto p = grid.point(n);
    nodes.addRow({static_cast<double>(n), p.x(), p.y()});
  }
  ctx.emit("nodes.csv", nodes);

  CsvTable summary({"quantity", "value"});
  summary.addRow(std::vector<std::string>{"count",
                                          std::to_string(omega.count())});
  summary.addRow(std::vector<std::string>{
      "measure", CsvTable::formatDouble(omega.measure(grid))});

  if (cfg.parameters.contains("density_R")) {
    double R = cfg.parameters.at("density_R").get<double>();
    double delta = cfg.parameters.value("density_delta", 0.0);
    DensityReport rep = verify_density(omega, grid, R, delta);
    summary.addRow(std::vector<std::string>{
        "min_window_measure", CsvTable::formatDouble(rep.minMeasure)});
    ctx.check("density", rep.pass,
              "min window measure " + CsvTable::formatDouble(rep.minMeasure) +
                  " vs delta " + CsvTable::formatDouble(delta));
  }
  if (cfg.parameters.contains("content_order")) {
    double n = cfg.parameters.at("content_order").get<double>();
    double maxR = cfg.parameters.value("content_max_radius",
                                       grid.extent() / 4.0);
    CoveringEstimate est = hausdorff_content(omega, grid, n, maxR);
    summary.addRow(std::vector<std::string>{
        "content_upper", CsvTable::formatDouble(est.upperBound)});
    summary.addRow(std::vector<std::string>{
        "content_lower", CsvTable::formatDouble(est.lowerBound)});
    summary.addRow(std::vector<std::string>{
        "content_lower_factor", CsvTable::formatDouble(est.lowerBoundFactor)});
    ctx.check("content_bounds_ordered", est.lowerBound <= est.upperBound,
              "lower " + CsvTable::formatDouble(est.lowerBound) + " <= upper " +
                  CsvTable::formatDouble(est.upperBound));
  }
  ctx.emit("sets_summary.csv", summary);
}

// ---------------------------------------------------------------- specineq

void runSpecineq(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  Grid grid = makeGrid(cfg);
  CoefficientField coeffs = sample_coefficients(cfg.coefficients, grid);
  SpectralDecomposition dec = eigendecompose(assemble(grid, coeffs));
  ObservationSet omega = makeOmega(cfg, grid);

  std::vector<double> mus = muGrid(cfg.parameters, "mu_grid");
  std::sort(mus.begin(), mus.end());
  enforceResolution(ctx, grid, mus.back());

  const bool doLinf = cfg.parameters.value("linf", false);
  std::vector<Cell> cells;
  if (doLinf) cells = makeCells(cfg, grid);

  std::vector<SpectralConstantSample> l2Samples, linfSamples;
  CsvTable table({"mu", "variant", "constant", "r2_running"});
  std::vector<double> plotMu, plotC;

  for (double mu : mus) {
    auto s = spectral_constant_L2(dec, omega, mu);
    l2Samples.push_back(s);
    double r2run = 0.0;
    if (l2Samples.size() >= 3) {
      std::vector<double> xs, ys;
      for (const auto& q : l2Samples) {
        if (!q.infinite) {
          xs.push_back(q.mu);
          ys.push_back(std::log(q.constant));
        }
      }
      if (xs.size() >= 3) r2run = fit_affine(xs, ys).r2;
    }
    table.addRow(std::vector<std::string>{
        CsvTable::formatDouble(mu), "L2",
        s.infinite ? "inf" : CsvTable::formatDouble(s.constant),
        CsvTable::formatDouble(r2run)});
    if (!s.infinite) {
      plotMu.push_back(mu);
      plotC.push_back(s.constant);
    }
    if (doLinf) {
      auto sl = spectral_constant_Linf(dec, grid, omega, mu, cells,
                                       cfg.parameters.value("restarts", 6),
                                       cfg.seed + 101);
      linfSamples.push_back(sl);
      table.addRow(std::vector<std::string>{
          CsvTable::formatDouble(mu), "LinfSum",
          sl.infinite ? "inf" : CsvTable::formatDouble(sl.constant), "0"});
    }
  }
  ctx.emit("constants.csv", table);

  // Monotonicity of the L2 constant in mu (nested ranges), exact up to
  // rounding.
  bool monotone = true;
  for (size_t i = 1; i < l2Samples.size(); ++i) {
    double prev = l2Samples[i - 1].infinite ? std::numeric_limits<double>::infinity()
                                            : l2Samples[i - 1].constant;
    double cur = l2Samples[i].infinite ? std::numeric_limits<double>::infinity()
                                       : l2Samples[i].constant;
    if (cur < prev * (1.0 - 1e-9)) monotone = false;
  }
  ctx.check("l2_constant_monotone_in_mu", monotone, "nested Pi_mu ranges");

  if (plotMu.size() >= 4) {
    ExponentialFit fit = fit_exponential(l2Samples);
    CsvTable fitTable({"logC0", "slope", "r2", "held_out_mu",
                       "held_out_gap_rel", "excluded_infinite"});
    fitTable.addRow({fit.logC0, fit.slope, fit.r2, fit.heldOutMu,
                     fit.heldOutGapRel,
                     static_cast<double>(fit.excludedInfinite)});
    ctx.emit("fit.csv", fitTable);
    double minR2 = cfg.parameters.value("min_r2", 0.95);
    ctx.check("log_affine_fit", fit.r2 >= minR2,
              "R^2 = " + CsvTable::formatDouble(fit.r2));
  }

  SvgSeries ser{"C_L2(mu)", plotMu, plotC, true};
  ctx.emitSvg("constants.svg", "spectral constant vs mu (semilog)", {ser});
}

// ------------------------------------------------------------- propagation

void runPropagation(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  Grid grid = makeGrid(cfg);
  CoefficientField coeffs = sample_coefficients(cfg.coefficients, grid);
  SpectralDecomposition dec = eigendecompose(assemble(grid, coeffs));
  ObservationSet omega = makeOmega(cfg, grid);
  std::vector<Cell> cells = makeCells(cfg, grid);

  std::vector<double> mus = muGrid(cfg.parameters, "mu_values");
  enforceResolution(ctx, grid, *std::max_element(mus.begin(), mus.end()));
  const int trials = cfg.parameters.value("trials_per_mu", 5);
  const int timeSteps = cfg.parameters.value("time_steps", 24);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<PropagationSample> samples;
  CsvTable table({"cell", "mu", "sup_E", "sup_K", "sup_Omega", "l2_ball",
                  "l2_set_ball"});
  for (double mu : mus) {
    for (int t = 0; t < trials; ++t) {
      Eigen::VectorXd u(dec.size());
      for (int i = 0; i < dec.size(); ++i) u[i] = normal(rng);
      ExtensionField f =
          extend(dec, grid, u, mu, cfg.cells->T2, timeSteps);
      for (size_t c = 0; c < cells.size(); ++c) {
        PropagationSample s =
            propagation_sample(f, cells[c], static_cast<int>(c), omega);
        samples.push_back(s);
        table.addRow({static_cast<double>(s.cellIndex), s.mu, s.supE, s.supK,
                      s.supOmega, s.l2Ball, s.l2SetBall});
      }
    }
  }
  ctx.emit("region_sups.csv", table);

  AlphaFit fit = estimate_alpha(samples);
  CsvTable fitTable({"alpha", "logC", "identifiable", "used", "degenerate",
                     "rmse", "violation_fraction", "violation_fraction_slack"});
  fitTable.addRow({fit.alpha, fit.logC, fit.identifiable ? 1.0 : 0.0,
                   static_cast<double>(fit.used),
                   static_cast<double>(fit.degenerate), fit.rmse,
                   fit.violationFraction, fit.violationFractionSlack});
  ctx.emit("alpha_fit.csv", fitTable);

  CsvTable perCell({"cell", "alpha"});
  for (const auto& [cell, alpha] : fit.perCellAlpha) {
    perCell.addRow({static_cast<double>(cell), alpha});
  }
  ctx.emit("per_cell_alpha.csv", perCell);

  ctx.check("alpha_identifiable", fit.identifiable, "");
  ctx.check("alpha_in_unit_interval",
            fit.identifiable && fit.alpha > 0.0 && fit.alpha < 1.0,
            "alpha = " + CsvTable::formatDouble(fit.alpha));
  ctx.check("inequality_violations_within_slack",
            fit.violationFractionSlack <=
                cfg.parameters.value("max_violation_fraction", 0.05),
            CsvTable::formatDouble(fit.violationFractionSlack));

  // Scatter: y = supK/supOmega on the log axis against x = log10(supE/supOmega).
  SvgSeries scatter{"samples", {}, {}, false};
  for (const auto& s : samples) {
    if (s.supE <= 0 || s.supK <= 0 || s.supOmega <= 0) continue;
    scatter.x.push_back(std::log10(s.supE / s.supOmega));
    scatter.y.push_back(s.supK / s.supOmega);
  }
  ctx.emitSvg("alpha_scatter.svg", "three-region sups (fitted exponent)",
              {scatter});

  if (cfg.parameters.value("young", false)) {
    SobolevReport sob = sobolev_bound_check(
        dec, grid, cells, mus, std::min(trials, 3), cfg.cells->T2, timeSteps,
        cfg.seed + 17);
    YoungSplitReport young =
        verify_young_split(samples, fit.alpha, {1.0, 2.0 * sob.K + 1.0});
    bool all = true;
    for (bool p : young.pass) all = all && p;
    ctx.check("young_split", all,
              "C' = " + CsvTable::formatDouble(young.cPrime));
  }
}

// ----------------------------------------------------------------- sobolev

void runSobolev(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  Grid grid = makeGrid(cfg);
  CoefficientField coeffs = sample_coefficients(cfg.coefficients, grid);
  SpectralDecomposition dec = eigendecompose(assemble(grid, coeffs));
  std::vector<Cell> cells = makeCells(cfg, grid);

  std::vector<double> mus = muGrid(cfg.parameters, "mu_values");
  std::sort(mus.begin(), mus.end());
  enforceResolution(ctx, grid, mus.back());
  const int trials = cfg.parameters.value("trials", 3);
  const int timeSteps = cfg.parameters.value("time_steps", 32);

  SobolevReport rep = sobolev_bound_check(dec, grid, cells, mus, trials,
                                          cfg.cells->T2, timeSteps, cfg.seed);

  CsvTable table({"mu", "lhs_sqrt"});
  for (size_t i = 0; i < rep.muValues.size(); ++i) {
    table.addRow({rep.muValues[i], rep.lhsSqrt[i]});
  }
  ctx.emit("sobolev.csv", table);

  CsvTable fitTable({"K", "logC", "r2", "held_out_mu", "held_out_ratio"});
  fitTable.addRow({rep.K, rep.logC, rep.r2, rep.heldOutMu, rep.heldOutRatio});
  ctx.emit("sobolev_fit.csv", fitTable);

  ctx.check("sobolev_log_affine", rep.r2 >= cfg.parameters.value("min_r2", 0.9),
            "R^2 = " + CsvTable::formatDouble(rep.r2));
  ctx.check("sobolev_held_out", rep.heldOutOk,
            "ratio = " + CsvTable::formatDouble(rep.heldOutRatio));

  // Energy identities at the largest mu, on the scaled horizon
  // tau = 2 sqrt(4R² + T2²) attached to the cell geometry.
  const double R = cfg.cells->R, T2 = cfg.cells->T2;
  double tau = 2.0 * std::sqrt(4.0 * R * R + T2 * T2);
  std::mt19937_64 rng(cfg.seed + 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd u(dec.size());
  for (int i = 0; i < dec.size(); ++i) u[i] = normal(rng);
  u /= dec.kappaNorm(u);
  EnergyReport energy = energy_identity_check(
      dec, grid, u, mus.back(), tau, timeSteps, coeffs.ellipticityLower);
  ctx.check("energy_dt", energy.dtPass,
            CsvTable::formatDouble(energy.dtQuadrature) + " <= " +
                CsvTable::formatDouble(energy.dtMajorant));
  ctx.check("energy_gradient", energy.gradPass,
            CsvTable::formatDouble(energy.gradQuadrature) + " <= (1/a) * " +
                CsvTable::formatDouble(energy.gradDirichlet));

  SvgSeries ser{"lhs_sqrt(mu)", rep.muValues, rep.lhsSqrt, true};
  ctx.emitSvg("sobolev.svg", "square-summed sup bound vs mu (semilog)", {ser});
}

// ----------------------------------------------------------------- control

void runControl(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  Grid grid = makeGrid(cfg);
  CoefficientField coeffs = sample_coefficients(cfg.coefficients, grid);
  SpectralDecomposition dec = eigendecompose(assemble(grid, coeffs));
  ObservationSet omega = makeOmega(cfg, grid);

  const std::string kind = cfg.parameters.value("kind", std::string("hum"));
  const double T = cfg.parameters.value("T", 1.0);
  RetainedPolicy policy;
  policy.frequencyCap = cfg.parameters.value(
      "lambda_cap", std::numeric_limits<double>::infinity());
  enforceResolution(ctx, grid,
                    std::isfinite(policy.frequencyCap) ? policy.frequencyCap
                                                       : 0.0);
  const double tol = cfg.parameters.value("tolerance", 1e-6);

  if (kind == "hum") {
    const int quad = cfg.parameters.value("quadrature_nodes", 32);
    TimeSet F = parseTimeSet(cfg.parameters, T, quad);
    Eigen::VectorXd u0 = makeVector(
        cfg.parameters.value("u0", nlohmann::json{{"type", "random"}}), dec,
        "parameters.u0");
    Eigen::VectorXd v0 = makeVector(
        cfg.parameters.value("v0", nlohmann::json{{"type", "zero"}}), dec,
        "parameters.v0");
    ControlResult res =
        hum_control(dec, omega, F, u0, v0, T, -1.0, policy, tol);

    int m = retained_count(dec, T, policy);
    Gramian Lambda = observability_gramian(dec, omega, F, T, m,
                                           GramianKernel::TerminalAdjoint);
    ObservabilityConstant cobs = observability_constant(dec, Lambda, T);
    double defect2 = std::pow(dec.kappaNorm(v0 - u0), 2);

    CsvTable summary({"cost", "residual_retained", "residual_full", "epsilon",
                      "C_obs", "cost_bound", "gramian_min_eig",
                      "gramian_max_eig"});
    summary.addRow({res.cost, res.terminalResidualRetained,
                    res.terminalResidualFull, res.epsilon, cobs.value,
                    cobs.value * defect2, res.gramianMinEig,
                    res.gramianMaxEig});
    ctx.emit("control_summary.csv", summary);

    CsvTable field({"t", "node", "value"});
    for (size_t q = 0; q < res.times.size(); ++q) {
      for (int node : omega.nodes) {
        field.addRow({res.times[q], static_cast<double>(node),
                      res.control(static_cast<int>(q), node)});
      }
    }
    ctx.emit("control_field.csv", field);

    ctx.check("terminal_residual", res.success,
              CsvTable::formatDouble(res.terminalResidualRetained));
    ctx.check("cost_within_observability_bound",
              cobs.infinite || res.cost <= cobs.value * defect2 * (1.0 + 1e-6),
              CsvTable::formatDouble(res.cost) + " vs " +
                  CsvTable::formatDouble(cobs.value * defect2));
  } else if (kind == "lebeau-robbiano") {
    LrSchedule sched;
    sched.mu0 = cfg.parameters.value("mu0", 4.0);
    sched.slabs = cfg.parameters.value("slabs", 2);
    sched.quadratureNodesPerSlab = cfg.parameters.value("quadrature_nodes", 32);
    Eigen::VectorXd u0 = makeVector(
        cfg.parameters.value("u0", nlohmann::json{{"type", "random"}}), dec,
        "parameters.u0");
    LrResult res =
        lebeau_robbiano_control(dec, omega, u0, T, sched, policy, tol);

    CsvTable slabs({"slab", "mu", "begin", "end", "state_norm_before",
                    "defect_norm", "cost", "block_residual"});
    for (const auto& r : res.slabRecords) {
      slabs.addRow({static_cast<double>(r.slab), r.mu, r.begin, r.end,
                    r.stateNormBefore, r.defectNorm, r.cost, r.blockResidual});
    }
    ctx.emit("lr_slabs.csv", slabs);

    CsvTable field({"t", "node", "value"});
    for (size_t q = 0; q < res.times.size(); ++q) {
      for (int node : omega.nodes) {
        field.addRow({res.times[q], static_cast<double>(node),
                      res.control(static_cast<int>(q), node)});
      }
    }
    ctx.emit("control_field.csv", field);

    CsvTable summary({"final_residual_rel", "total_cost", "slabs",
                      "exhausted_spectrum"});
    summary.addRow({res.finalResidualRel, res.totalCost,
                    static_cast<double>(res.slabRecords.size()),
                    res.exhaustedSpectrum ? 1.0 : 0.0});
    ctx.emit("control_summary.csv", summary);

    SvgSeries costs{"slab cost", {}, {}, true};
    for (const auto& r : res.slabRecords) {
      if (r.cost > 0.0) {
        costs.x.push_back(r.mu);
        costs.y.push_back(r.cost);
      }
    }
    ctx.emitSvg("cost_vs_mu.svg", "per-slab control cost vs mu (semilog)",
                {costs});
    ctx.check("final_residual", res.success,
              CsvTable::formatDouble(res.finalResidualRel));
  } else if (kind == "impulsive") {
    const double t0 = cfg.parameters.value("t0", 0.0);
    const double tau = cfg.parameters.value("tau", 0.5);
    const int count = cfg.parameters.value("count", 6);
    const double D = cfg.parameters.value("D", 0.02);
    ImpulseSchedule sched = ImpulseSchedule::geometric(T, t0, tau, count, D);
    Eigen::VectorXd u0 = makeVector(
        cfg.parameters.value("u0", nlohmann::json{{"type", "random"}}), dec,
        "parameters.u0");
    Eigen::VectorXd v0 = makeVector(
        cfg.parameters.value("v0", nlohmann::json{{"type", "zero"}}), dec,
        "parameters.v0");
    ControlResult res =
        impulsive_control(dec, omega, sched, u0, v0, T, -1.0, policy, tol);

    CsvTable imp({"j", "t", "gap", "norm", "weighted_norm"});
    for (int j = 0; j < sched.count(); ++j) {
      double n2 = 0.0;
      for (int node : omega.nodes) {
        n2 += dec.weight[node] * res.impulses[j][node] * res.impulses[j][node];
      }
      double gap = sched.gapAfter(j);
      imp.addRow({static_cast<double>(j), sched.times[j], gap, std::sqrt(n2),
                  std::exp(D / gap) * std::sqrt(n2)});
    }
    ctx.emit("impulses.csv", imp);

    CsvTable summary({"cost", "weighted_norm_sum", "residual_retained",
                      "residual_full", "epsilon"});
    summary.addRow({res.cost, res.weightedNormSum,
                    res.terminalResidualRetained, res.terminalResidualFull,
                    res.epsilon});
    ctx.emit("control_summary.csv", summary);
    ctx.check("terminal_residual", res.success,
              CsvTable::formatDouble(res.terminalResidualRetained));
  } else {
    throw ConfigError(
        "config: parameters.kind must be hum|lebeau-robbiano|impulsive");
  }
}

// ------------------------------------------------------------------ obster

void runObster(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  Grid grid = makeGrid(cfg);
  CoefficientField coeffs = sample_coefficients(cfg.coefficients, grid);
  SpectralDecomposition dec = eigendecompose(assemble(grid, coeffs));
  ObservationSet omega = makeOmega(cfg, grid);

  const double T = cfg.parameters.value("T", 1.0);
  const double s0 = cfg.parameters.value("s0", 0.75 * T);
  const double gamma = cfg.parameters.value("gamma", 0.5);
  const int count = cfg.parameters.value("count", 8);
  const double D = cfg.parameters.value("D", 0.02);
  const int trials = cfg.parameters.value("trials", 50);
  RetainedPolicy policy;
  policy.frequencyCap = cfg.parameters.value(
      "lambda_cap", std::numeric_limits<double>::infinity());

  std::vector<double> times;
  for (int i = 0; i < count; ++i) times.push_back(s0 * std::pow(gamma, i));
  ObsterReport rep = verify_obster(dec, omega, times, gamma, D, trials, T,
                                   cfg.seed, policy);

  CsvTable summary({"empirical_C", "min_C", "max_C", "stability_ratio",
                    "trials", "skipped"});
  summary.addRow({rep.empiricalC, rep.minC, rep.maxC, rep.stabilityRatio,
                  static_cast<double>(rep.trials),
                  static_cast<double>(rep.skipped)});
  ctx.emit("obster.csv", summary);
  ctx.check("empirical_constant_stable",
            rep.stabilityRatio <=
                cfg.parameters.value("max_stability_ratio", 10.0),
            "batch max/min = " + CsvTable::formatDouble(rep.stabilityRatio));
}

void writeRecord(RunContext& ctx) {
  auto& rec = ctx.record;

  std::ofstream summary(ctx.outDir / "summary.txt");
  for (const auto& c : rec.checks) {
    summary << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
            << (c.detail.empty() ? "" : " — " + c.detail) << "\n";
  }
  for (const auto& w : rec.warnings) summary << "[WARN] " << w << "\n";
  summary.close();
  rec.files.push_back("summary.txt");
  rec.files.push_back("run_record.json");

  nlohmann::json j;
  j["config_hash"] = rec.configHash;
  j["timestamp"] = rec.timestamp;
  j["version"] = rec.version;
  j["seed"] = rec.seed;
  j["files"] = rec.files;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : rec.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  j["checks"] = checks;
  j["warnings"] = rec.warnings;
  std::ofstream out(ctx.outDir / "run_record.json");
  out << j.dump(2) << "\n";
}

}  // namespace

bool RunRecord::allPassed() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
  RunContext ctx{.cfg = cfg, .outDir = {}, .record = {}};
  ctx.outDir = cfg.output;
  std::filesystem::create_directories(ctx.outDir);

  ctx.record.configHash = config_hash(cfg.raw);
  ctx.record.version = kVersion;
  ctx.record.seed = cfg.seed;
  ctx.record.outputDir = ctx.outDir.string();
  {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    ctx.record.timestamp = buf;
  }

  if (cfg.experiment == "spectrum") {
    runSpectrum(ctx);
  } else if (cfg.experiment == "sets") {
    runSets(ctx);
  } else if (cfg.experiment == "specineq") {
    runSpecineq(ctx);
  } else if (cfg.experiment == "propagation") {
    runPropagation(ctx);
  } else if (cfg.experiment == "sobolev") {
    runSobolev(ctx);
  } else if (cfg.experiment == "control") {
    runControl(ctx);
  } else if (cfg.experiment == "obster") {
    runObster(ctx);
  } else {
    throw ConfigError("config: experiment has unknown value '" +
                      cfg.experiment + "'");
  }

  writeRecord(ctx);
  return ctx.record;
}

}  // namespace speclab
