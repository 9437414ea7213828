#include "speclab/specineq.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "speclab/fit.hpp"

namespace speclab {

namespace {

// κ-weighted restriction factor: row per ω node, column per retained mode,
// entries sqrt(w_i) e_k(i). Then ‖u‖²_{L²(ω,κ)} = ‖B c‖² for u = Σ c_k e_k.
Eigen::MatrixXd restrictionFactor(const SpectralDecomposition& dec,
                                  const ObservationSet& set, int m) {
  Eigen::MatrixXd B(set.count(), m);
  for (int r = 0; r < set.count(); ++r) {
    const int node = set.nodes[r];
    B.row(r) = std::sqrt(dec.weight[node]) * dec.modes.row(node).head(m);
  }
  return B;
}

}  // namespace

SpectralConstantSample spectral_constant_L2(const SpectralDecomposition& dec,
                                            const ObservationSet& set,
                                            double mu) {
  const int m = dec.modesBelow(mu);
  if (m < 1) {
    throw std::invalid_argument("spectral_constant_L2: ran Pi_mu is empty");
  }
  Eigen::MatrixXd B = restrictionFactor(dec, set, m);
  // Full V: when the restriction is rank deficient the trailing columns of V
  // span its null space and still provide the extremal witness.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullV);

  SpectralConstantSample s;
  s.mu = mu;
  s.variant = SpectralConstantSample::Variant::L2;

  const auto& sigma = svd.singularValues();
  const double sigmaMax = sigma.size() ? sigma[0] : 0.0;
  const double sigmaMin = sigma.size() == m ? sigma[m - 1] : 0.0;

  Eigen::VectorXd cMin = svd.matrixV().col(m - 1);
  s.witness = dec.modes.leftCols(m) * cMin;

  // Rank-deficient (or numerically unresolvable) restriction: the set does
  // not observe ran Pi_mu at this resolution.
  if (sigmaMin <= 1e-13 * sigmaMax) {
    s.infinite = true;
    s.constant = std::numeric_limits<double>::infinity();
    return s;
  }
  s.constant = 1.0 / sigmaMin;
  return s;
}

SpectralConstantSample spectral_constant_Linf(const SpectralDecomposition& dec,
                                              const Grid& grid,
                                              const ObservationSet& set,
                                              double mu,
                                              const std::vector<Cell>& cells,
                                              int restarts,
                                              unsigned long long seed,
                                              int maxIterations) {
  const int m = dec.modesBelow(mu);
  if (m < 1) {
    throw std::invalid_argument("spectral_constant_Linf: ran Pi_mu is empty");
  }
  if (restarts < 1) {
    throw std::invalid_argument("spectral_constant_Linf: restarts >= 1");
  }

  // Per-cell node lists of ω ∩ B(p,R).
  std::vector<std::vector<int>> cellNodes;
  for (const Cell& c : cells) {
    std::vector<int> nodes;
    for (int n : grid.nodesWithin(c.center, c.innerRadius)) {
      if (set.contains(n)) nodes.push_back(n);
    }
    if (!nodes.empty()) cellNodes.push_back(std::move(nodes));
  }
  if (cellNodes.empty()) {
    throw std::invalid_argument(
        "spectral_constant_Linf: every cell misses the observation set");
  }

  const Eigen::MatrixXd modes = dec.modes.leftCols(m);

  // denominator D(c) = Σ_p max_{i in S_p} (Φ c)_i² for ‖c‖ = 1; a descent
  // subgradient picks the arg-max node of each cell.
  auto denom = [&](const Eigen::VectorXd& c, Eigen::VectorXd* grad) {
    Eigen::VectorXd u = modes * c;
    double d = 0.0;
    if (grad) grad->setZero(m);
    for (const auto& nodes : cellNodes) {
      int best = nodes[0];
      double bv = std::abs(u[best]);
      for (int n : nodes) {
        if (std::abs(u[n]) > bv) {
          bv = std::abs(u[n]);
          best = n;
        }
      }
      d += bv * bv;
      if (grad) *grad += 2.0 * u[best] * modes.row(best).transpose();
    }
    return d;
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Eigen::VectorXd> starts;
  {
    SpectralConstantSample l2 = spectral_constant_L2(dec, set, mu);
    Eigen::VectorXd c0 = dec.coefficients(l2.witness).head(m);
    if (c0.norm() > 0.0) starts.push_back(c0.normalized());
  }
  while (static_cast<int>(starts.size()) < restarts) {
    Eigen::VectorXd c(m);
    for (int k = 0; k < m; ++k) c[k] = normal(rng);
    starts.push_back(c.normalized());
  }

  SpectralConstantSample s;
  s.mu = mu;
  s.variant = SpectralConstantSample::Variant::LinfSum;
  double bestDen = std::numeric_limits<double>::infinity();
  double bestInitialDen = std::numeric_limits<double>::infinity();
  Eigen::VectorXd bestC;

  for (size_t start = 0; start < starts.size(); ++start) {
    Eigen::VectorXd c = starts[start];
    double d = denom(c, nullptr);
    bestInitialDen = std::min(bestInitialDen, d);
    double step = 0.1;
    for (int it = 0; it < maxIterations; ++it) {
      Eigen::VectorXd grad;
      denom(c, &grad);
      // project out the radial component, step on the sphere
      grad -= grad.dot(c) * c;
      double gn = grad.norm();
      if (gn < 1e-15) break;
      Eigen::VectorXd cNew = (c - step * grad / gn).normalized();
      double dNew = denom(cNew, nullptr);
      if (dNew < d) {
        c = cNew;
        d = dNew;
      } else {
        step *= 0.7;
        if (step < 1e-10) break;
      }
      ++s.ascentIterations;
    }
    if (d < bestDen) {
      bestDen = d;
      bestC = c;
      s.bestStart = static_cast<int>(start);
    }
  }

  if (!(bestDen > 0.0)) {
    s.infinite = true;
    s.constant = std::numeric_limits<double>::infinity();
    return s;
  }
  s.constant = 1.0 / bestDen;  // ‖u‖²_κ = 1 on the sphere: certified ratio
  s.witness = modes * bestC;
  s.ascentImprovement = 1.0 / bestDen - 1.0 / bestInitialDen;
  return s;
}

ExponentialFit fit_exponential(
    const std::vector<SpectralConstantSample>& samples) {
  std::map<double, double> byMu;  // keep the last finite sample per mu
  int excluded = 0;
  for (const auto& s : samples) {
    if (s.infinite || !std::isfinite(s.constant)) {
      ++excluded;
      continue;
    }
    byMu[s.mu] = s.constant;
  }
  if (byMu.size() < 4) {
    throw std::invalid_argument(
        "fit_exponential: need >= 4 finite samples with distinct mu");
  }
  std::vector<double> mus, logs;
  for (const auto& [mu, c] : byMu) {
    mus.push_back(mu);
    logs.push_back(std::log(c));
  }
  std::vector<double> musFit(mus.begin(), mus.end() - 1);
  std::vector<double> logsFit(logs.begin(), logs.end() - 1);
  AffineFit af = fit_affine(musFit, logsFit);

  ExponentialFit fit;
  fit.logC0 = af.intercept;
  fit.slope = af.slope;
  fit.r2 = af.r2;
  fit.heldOutMu = mus.back();
  double predicted = std::exp(fit.logC0 + fit.slope * fit.heldOutMu);
  double actual = std::exp(logs.back());
  fit.heldOutGapRel = std::abs(predicted - actual) / actual;
  fit.excludedInfinite = excluded;
  return fit;
}

}  // namespace speclab
