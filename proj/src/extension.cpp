#include "speclab/extension.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <map>
#include <random>
#include <stdexcept>

namespace speclab {

namespace {

// sinh(λt)/λ with the λ -> 0 limit t.
double sinhc(double lambda, double t) {
  double x = lambda * t;
  if (std::abs(x) < 1e-8) return t * (1.0 + x * x / 6.0);
  return std::sinh(x) / lambda;
}

// Centered periodic spatial gradient of a node field, per axis.
void spatialGradient(const Grid& grid, const Eigen::VectorXd& v,
                     Eigen::VectorXd& gx, Eigen::VectorXd& gy) {
  const int N = grid.resolution();
  const double inv2h = 1.0 / (2.0 * grid.spacing());
  gx.resize(grid.nodeCount());
  if (grid.dim() == 1) {
    for (int i = 0; i < N; ++i) {
      gx[i] = (v[grid.wrap(i + 1)] - v[grid.wrap(i - 1)]) * inv2h;
    }
    gy.resize(0);
  } else {
    gy.resize(grid.nodeCount());
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) {
        int p = grid.nodeIndex(i, j);
        gx[p] = (v[grid.nodeIndex(i + 1, j)] - v[grid.nodeIndex(i - 1, j)]) *
                inv2h;
        gy[p] = (v[grid.nodeIndex(i, j + 1)] - v[grid.nodeIndex(i, j - 1)]) *
                inv2h;
      }
    }
  }
}

}  // namespace

ExtensionField extend(const SpectralDecomposition& dec, const Grid& grid,
                      const Eigen::VectorXd& u, double mu, double T2,
                      int timeSteps) {
  if (timeSteps < 2) throw std::invalid_argument("extend: timeSteps >= 2");
  if (!(T2 > 0.0)) throw std::invalid_argument("extend: T2 must be positive");
  if (mu > dec.maxFrequency() * (1.0 + 1e-12)) {
    throw std::invalid_argument(
        "extend: mu exceeds the largest resolved frequency; silent truncation "
        "is not allowed");
  }
  const int m = dec.modesBelow(mu);
  const int n = dec.size();

  ExtensionField f(grid);
  f.mu = mu;
  f.T2 = T2;
  f.weight = dec.weight;
  f.modalFrequencies = dec.frequencies.head(m);
  f.modalCoefficients = dec.coefficients(u).head(m);
  f.modalModes = dec.modes.leftCols(m);

  const int rows = 2 * timeSteps + 1;
  f.timeGrid.resize(rows);
  for (int i = -timeSteps; i <= timeSteps; ++i) {
    f.timeGrid[i + timeSteps] = T2 * static_cast<double>(i) / timeSteps;
  }

  f.values.resize(rows, n);
  f.timeDerivative.resize(rows, n);
  Eigen::VectorXd c(m);
  for (int r = 0; r < rows; ++r) {
    const double t = f.timeGrid[r];
    for (int k = 0; k < m; ++k) {
      c[k] = sinhc(f.modalFrequencies[k], t) * f.modalCoefficients[k];
    }
    f.values.row(r) = (f.modalModes * c).transpose();
    for (int k = 0; k < m; ++k) {
      c[k] = std::cosh(f.modalFrequencies[k] * t) * f.modalCoefficients[k];
    }
    f.timeDerivative.row(r) = (f.modalModes * c).transpose();
  }
  return f;
}

namespace {

SupResult supOverRegion(const ExtensionField& field, const Eigen::Vector2d& c,
                        double radius, double timeHalfWidth) {
  const Grid& grid = field.grid;
  std::vector<int> nodes = grid.nodesWithin(c, radius);
  if (nodes.empty()) return {0.0, true};

  const double tGuard = timeHalfWidth * (1.0 + 1e-12);
  double best = 0.0;
  Eigen::VectorXd gx, gy;
  for (int r = 0; r < field.timeGrid.size(); ++r) {
    if (std::abs(field.timeGrid[r]) > tGuard) continue;
    Eigen::VectorXd v = field.values.row(r).transpose();
    spatialGradient(grid, v, gx, gy);
    for (int node : nodes) {
      double s = field.timeDerivative(r, node) * field.timeDerivative(r, node) +
                 gx[node] * gx[node];
      if (grid.dim() == 2) s += gy[node] * gy[node];
      best = std::max(best, s);
    }
  }
  return {std::sqrt(best), false};
}

}  // namespace

SupResult sup_gradient_K(const ExtensionField& field, const Cell& cell) {
  return supOverRegion(field, cell.center, cell.innerRadius,
                       cell.timeHalfWidthInner);
}

SupResult sup_gradient_Omega(const ExtensionField& field, const Cell& cell) {
  return supOverRegion(field, cell.center, cell.outerRadius,
                       cell.timeHalfWidthOuter);
}

SupResult sup_gradient_E(const ExtensionField& field, const Cell& cell,
                         const ObservationSet& set) {
  const int r0 = field.timeIndexOfZero();
  double best = 0.0;
  bool any = false;
  for (int node : field.grid.nodesWithin(cell.center, cell.innerRadius)) {
    if (!set.contains(node)) continue;
    any = true;
    best = std::max(best, std::abs(field.timeDerivative(r0, node)));
  }
  return {any ? best : 0.0, !any};
}

PropagationSample propagation_sample(const ExtensionField& field,
                                     const Cell& cell, int cellIndex,
                                     const ObservationSet& set) {
  PropagationSample s;
  s.cellIndex = cellIndex;
  s.mu = field.mu;
  s.supK = sup_gradient_K(field, cell).value;
  s.supOmega = sup_gradient_Omega(field, cell).value;
  s.supE = sup_gradient_E(field, cell, set).value;

  // Π_mu u = ∂_t v(0, ·).
  const int r0 = field.timeIndexOfZero();
  double ball = 0.0, setBall = 0.0;
  for (int node : field.grid.nodesWithin(cell.center, cell.innerRadius)) {
    double w = field.weight[node];
    double uu = field.timeDerivative(r0, node);
    ball += w * uu * uu;
    if (set.contains(node)) setBall += w * uu * uu;
  }
  s.l2Ball = std::sqrt(ball);
  s.l2SetBall = std::sqrt(setBall);
  return s;
}

std::vector<int> levelset_small_nodes(const ExtensionField& field,
                                      const Cell& cell,
                                      const ObservationSet& set, double a) {
  const int r0 = field.timeIndexOfZero();
  std::vector<int> out;
  for (int node : field.grid.nodesWithin(cell.center, cell.innerRadius)) {
    if (set.contains(node) &&
        std::abs(field.timeDerivative(r0, node)) <= a) {
      out.push_back(node);
    }
  }
  return out;
}

AlphaFit estimate_alpha(const std::vector<PropagationSample>& samples) {
  std::vector<double> x, y;
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> byCell;
  AlphaFit fit;
  for (const auto& s : samples) {
    if (s.supE <= 0.0 || s.supK <= 0.0 || s.supOmega <= 0.0) {
      ++fit.degenerate;
      continue;
    }
    x.push_back(std::log(s.supE) - std::log(s.supOmega));
    y.push_back(std::log(s.supK) - std::log(s.supOmega));
    byCell[s.cellIndex].first.push_back(x.back());
    byCell[s.cellIndex].second.push_back(y.back());
  }
  fit.used = static_cast<int>(x.size());
  if (fit.used < 10) {
    throw std::invalid_argument(
        "estimate_alpha: need >= 10 non-degenerate samples");
  }
  AffineFit af;
  try {
    af = fit_affine(x, y);
  } catch (const std::invalid_argument&) {
    fit.identifiable = false;  // zero regressor variance (supE == supOmega)
    return fit;
  }
  fit.identifiable = true;
  fit.alpha = af.slope;
  if (fit.alpha <= 0.0 || fit.alpha >= 1.0) {
    fit.clamped = true;
    fit.alpha = std::clamp(fit.alpha, 1e-6, 1.0 - 1e-6);
  }
  fit.logC = af.intercept;
  fit.rmse = af.rmse;

  int viol = 0, violSlack = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    double predicted = fit.logC + fit.alpha * x[i];
    if (y[i] > predicted + 1e-12) ++viol;
    if (y[i] > predicted + 2.0 * fit.rmse + 1e-12) ++violSlack;
  }
  fit.violationFraction = static_cast<double>(viol) / fit.used;
  fit.violationFractionSlack = static_cast<double>(violSlack) / fit.used;

  for (const auto& [cell, data] : byCell) {
    if (data.first.size() < 5) continue;
    try {
      fit.perCellAlpha.emplace_back(cell, fit_affine(data.first, data.second).slope);
    } catch (const std::invalid_argument&) {
      // degenerate cell regressor; skip
    }
  }
  return fit;
}

SobolevReport sobolev_bound_check(const SpectralDecomposition& dec,
                                  const Grid& grid,
                                  const std::vector<Cell>& cells,
                                  const std::vector<double>& muValues,
                                  int trials, double T2, int timeSteps,
                                  unsigned long long seed) {
  if (muValues.size() < 3) {
    throw std::invalid_argument("sobolev_bound_check: need >= 3 mu values");
  }
  for (size_t i = 1; i < muValues.size(); ++i) {
    if (!(muValues[i] > muValues[i - 1])) {
      throw std::invalid_argument("sobolev_bound_check: mu values increasing");
    }
  }
  if (trials < 1) throw std::invalid_argument("sobolev_bound_check: trials >= 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SobolevReport rep;
  rep.muValues = muValues;
  for (double mu : muValues) {
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
      Eigen::VectorXd u(dec.size());
      for (int i = 0; i < dec.size(); ++i) u[i] = normal(rng);
      u /= dec.kappaNorm(u);
      ExtensionField f = extend(dec, grid, u, mu, T2, timeSteps);
      double lhs = 0.0;
      for (const Cell& c : cells) {
        double s = sup_gradient_Omega(f, c).value;
        lhs += s * s;
      }
      worst = std::max(worst, lhs);
    }
    rep.lhsSqrt.push_back(std::sqrt(worst));
  }

  std::vector<double> xs(muValues.begin(), muValues.end() - 1);
  std::vector<double> ys;
  for (size_t i = 0; i + 1 < muValues.size(); ++i) {
    ys.push_back(std::log(rep.lhsSqrt[i]));
  }
  AffineFit af = fit_affine(xs, ys);
  rep.K = af.slope;
  rep.logC = af.intercept;
  rep.r2 = af.r2;
  rep.heldOutMu = muValues.back();
  double predicted = std::exp(rep.logC + rep.K * rep.heldOutMu);
  rep.heldOutRatio = rep.lhsSqrt.back() / predicted;
  rep.heldOutOk = rep.heldOutRatio <= 2.0;
  return rep;
}

EnergyReport energy_identity_check(const SpectralDecomposition& dec,
                                   const Grid& grid, const Eigen::VectorXd& u,
                                   double mu, double tau, int timeSteps,
                                   double ellipticityLower, double slack) {
  ExtensionField f = extend(dec, grid, u, mu, tau, timeSteps);
  const double normU2 = dec.kappaInner(u, u);
  const int rows = static_cast<int>(f.timeGrid.size());
  const double dt = f.timeGrid[1] - f.timeGrid[0];

  EnergyReport rep;
  rep.gradConstant = 1.0 / ellipticityLower;
  Eigen::VectorXd gx, gy;
  for (int r = 0; r < rows; ++r) {
    double w = (r == 0 || r == rows - 1) ? 0.5 * dt : dt;
    Eigen::VectorXd dv = f.timeDerivative.row(r).transpose();
    rep.dtQuadrature += w * dv.cwiseProduct(f.weight).dot(dv);

    Eigen::VectorXd v = f.values.row(r).transpose();
    spatialGradient(grid, v, gx, gy);
    double g2 = gx.cwiseProduct(f.weight).dot(gx);
    if (grid.dim() == 2) g2 += gy.cwiseProduct(f.weight).dot(gy);
    rep.gradQuadrature += w * g2;

    // (-Δ v, v)_κ = Σ λ² (sinh(λt)/λ)² c² = Σ sinh²(λt) c², modal route.
    double dir = 0.0;
    for (int k = 0; k < f.modalFrequencies.size(); ++k) {
      double s = std::sinh(f.modalFrequencies[k] * f.timeGrid[r]) *
                 f.modalCoefficients[k];
      dir += s * s;
    }
    rep.gradDirichlet += w * dir;
  }

  rep.dtMajorant = 2.0 * tau * std::exp(2.0 * tau * mu) * normU2;
  rep.gradMajorant =
      rep.gradConstant * tau * std::exp(2.0 * tau * mu) * normU2;
  rep.dtPass = rep.dtQuadrature <= rep.dtMajorant * (1.0 + slack);
  rep.gradPass =
      rep.gradQuadrature <= rep.gradConstant * rep.gradDirichlet * (1.0 + slack) &&
      rep.gradConstant * rep.gradDirichlet <= rep.gradMajorant * (1.0 + slack);
  return rep;
}

YoungSplitReport verify_young_split(
    const std::vector<PropagationSample>& samples, double alpha,
    const std::vector<double>& dValues) {
  YoungSplitReport rep;
  rep.dValues = dValues;

  std::vector<const PropagationSample*> usable;
  for (const auto& s : samples) {
    if (s.supOmega > 0.0 && s.l2SetBall > 0.0 && s.l2Ball > 0.0) {
      usable.push_back(&s);
    } else {
      ++rep.excluded;
    }
  }
  if (usable.empty()) {
    throw std::invalid_argument("verify_young_split: no usable samples");
  }
  for (const auto* s : usable) {
    double denom =
        std::pow(s->supOmega, 1.0 - alpha) * std::pow(s->l2SetBall, alpha);
    rep.cPrime = std::max(rep.cPrime, s->l2Ball / denom);
  }

  const double c2 = rep.cPrime * rep.cPrime;
  for (double D : dValues) {
    bool ok = true;
    double worst = 0.0;
    for (const auto* s : usable) {
      double rhs =
          c2 * (s->supOmega * s->supOmega * std::exp(-D * s->mu) +
                s->l2SetBall * s->l2SetBall *
                    std::exp(D * (1.0 - alpha) / alpha * s->mu));
      double lhs = s->l2Ball * s->l2Ball;
      worst = std::max(worst, lhs / rhs);
      if (lhs > rhs * (1.0 + 1e-9)) ok = false;
    }
    rep.pass.push_back(ok);
    rep.worstMargin.push_back(worst);
  }
  return rep;
}

bool resolution_ok(const Grid& grid, double mu) {
  if (mu <= 0.0) return true;
  double pointsPerWavelength =
      (2.0 * std::numbers::pi / mu) / grid.spacing();
  return pointsPerWavelength >= 8.0;
}

}  // namespace speclab
