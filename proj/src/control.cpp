#include "speclab/control.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace speclab {

TimeSet TimeSet::interval(double a, double b, int nodes) {
  TimeSet F;
  F.intervals.push_back({a, b});
  F.quadratureNodesPerInterval = nodes;
  F.validate();
  return F;
}

TimeSet TimeSet::unionOf(std::vector<Interval> intervals, int nodes) {
  TimeSet F;
  F.intervals = std::move(intervals);
  F.quadratureNodesPerInterval = nodes;
  F.validate();
  return F;
}

void TimeSet::validate() const {
  if (intervals.empty()) {
    throw std::invalid_argument("TimeSet: no intervals");
  }
  if (quadratureNodesPerInterval < 2) {
    throw std::invalid_argument("TimeSet: need >= 2 quadrature nodes");
  }
  double prevEnd = 0.0;
  for (const Interval& iv : intervals) {
    if (!(iv.a >= prevEnd && iv.b > iv.a)) {
      throw std::invalid_argument(
          "TimeSet: intervals must be disjoint, increasing, of positive "
          "length, inside (0, T)");
    }
    prevEnd = iv.b;
  }
  if (!(totalMeasure() > 0.0)) {
    throw std::invalid_argument("TimeSet: zero total measure");
  }
}

double TimeSet::totalMeasure() const {
  double m = 0.0;
  for (const Interval& iv : intervals) m += iv.b - iv.a;
  return m;
}

void TimeSet::quadrature(std::vector<double>& t, std::vector<double>& w) const {
  t.clear();
  w.clear();
  const int q = quadratureNodesPerInterval;
  for (const Interval& iv : intervals) {
    const double dt = (iv.b - iv.a) / (q - 1);
    for (int i = 0; i < q; ++i) {
      t.push_back(iv.a + i * dt);
      w.push_back((i == 0 || i == q - 1) ? 0.5 * dt : dt);
    }
  }
}

int retained_count(const SpectralDecomposition& dec, double T,
                   const RetainedPolicy& policy) {
  int m = 0;
  for (int k = 0; k < dec.size(); ++k) {
    if (dec.frequencies[k] > policy.frequencyCap * (1.0 + 1e-12)) break;
    if (std::exp(-T * dec.eigenvalues[k]) < policy.decayThreshold) break;
    ++m;
  }
  if (m < 1) {
    throw std::invalid_argument(
        "retained_count: the policy retains no mode at this horizon");
  }
  return m;
}

Eigen::VectorXd heat_evolve(const SpectralDecomposition& dec,
                            const Eigen::VectorXd& u0, double t) {
  if (t < 0.0) {
    throw std::invalid_argument("heat_evolve: negative time rejected");
  }
  Eigen::VectorXd c = dec.coefficients(u0);
  for (int k = 0; k < c.size(); ++k) c[k] *= std::exp(-t * dec.eigenvalues[k]);
  return dec.modes * c;
}

namespace {

// κ-weighted mass matrix of the set on the retained modes, assembled from
// its square-root factor.
Eigen::MatrixXd massOnSet(const SpectralDecomposition& dec,
                          const ObservationSet& set, int m) {
  Eigen::MatrixXd B(set.count(), m);
  for (int r = 0; r < set.count(); ++r) {
    const int node = set.nodes[r];
    B.row(r) = std::sqrt(dec.weight[node]) * dec.modes.row(node).head(m);
  }
  return B.transpose() * B;
}

// ∫_a^b e^{-θ s} dθ, stable for small s.
double intExp(double a, double b, double s) {
  if (s <= 0.0) return b - a;
  return -std::exp(-a * s) * std::expm1(-(b - a) * s) / s;
}

}  // namespace

Gramian observability_gramian(const SpectralDecomposition& dec,
                              const ObservationSet& set, const TimeSet& F,
                              double T, int retained, GramianKernel kernel,
                              TimeIntegration integration) {
  F.validate();
  if (set.count() == 0) {
    throw std::invalid_argument("observability_gramian: empty set");
  }
  for (const auto& iv : F.intervals) {
    if (iv.b > T * (1.0 + 1e-12)) {
      throw std::invalid_argument(
          "observability_gramian: time set leaves (0, T)");
    }
  }
  const int m = retained;
  if (m < 1 || m > dec.size()) {
    throw std::invalid_argument("observability_gramian: bad retained count");
  }

  Gramian G;
  G.retained = m;
  G.T = T;
  G.kernel = kernel;
  G.integration = integration;
  G.timeSet = F;
  G.matrix = massOnSet(dec, set, m);

  if (integration == TimeIntegration::Exact) {
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < m; ++k) {
        double s = dec.eigenvalues[j] + dec.eigenvalues[k];
        double I = 0.0;
        for (const auto& iv : F.intervals) {
          I += kernel == GramianKernel::Forward
                   ? intExp(iv.a, iv.b, s)
                   : intExp(T - iv.b, T - iv.a, s);
        }
        G.matrix(j, k) *= I;
      }
    }
  } else {
    std::vector<double> t, w;
    F.quadrature(t, w);
    Eigen::MatrixXd M = G.matrix;
    G.matrix.setZero();
    Eigen::VectorXd d(m);
    for (size_t q = 0; q < t.size(); ++q) {
      const double theta =
          kernel == GramianKernel::Forward ? t[q] : T - t[q];
      for (int k = 0; k < m; ++k) {
        d[k] = std::exp(-theta * dec.eigenvalues[k]);
      }
      G.matrix.noalias() +=
          w[q] * (d.asDiagonal() * M * d.asDiagonal());
    }
  }
  G.matrix = 0.5 * (G.matrix + G.matrix.transpose()).eval();
  return G;
}

SupCellFunctional supcell_functional(const SpectralDecomposition& dec,
                                     const Grid& grid,
                                     const ObservationSet& set,
                                     const std::vector<Cell>& cells,
                                     const TimeSet& F) {
  F.validate();
  std::vector<std::vector<int>> cellNodes;
  for (const Cell& c : cells) {
    std::vector<int> nodes;
    for (int n : grid.nodesWithin(c.center, c.innerRadius)) {
      if (set.contains(n)) nodes.push_back(n);
    }
    if (!nodes.empty()) cellNodes.push_back(std::move(nodes));
  }
  if (cellNodes.empty()) {
    throw std::invalid_argument("supcell_functional: every cell misses ω");
  }
  std::vector<double> t, w;
  F.quadrature(t, w);

  SupCellFunctional fn;
  fn.cells = static_cast<int>(cellNodes.size());
  fn.evaluate = [&dec, cellNodes, t, w](const Eigen::VectorXd& u0) {
    double total = 0.0;
    for (size_t q = 0; q < t.size(); ++q) {
      Eigen::VectorXd u = heat_evolve(dec, u0, t[q]);
      double slice = 0.0;
      for (const auto& nodes : cellNodes) {
        double sup = 0.0;
        for (int n : nodes) sup = std::max(sup, std::abs(u[n]));
        slice += sup * sup;
      }
      total += w[q] * slice;
    }
    return total;
  };
  return fn;
}

ObservabilityConstant observability_constant(const SpectralDecomposition& dec,
                                             const Gramian& G, double T) {
  const int m = G.retained;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G.matrix);
  ObservabilityConstant out;
  out.gramianMinEig = eig.eigenvalues()(0);
  out.gramianMaxEig = eig.eigenvalues()(m - 1);
  if (out.gramianMinEig <= 1e-14 * std::max(out.gramianMaxEig, 0.0)) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    S(k, k) = std::exp(-2.0 * T * dec.eigenvalues[k]);
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(S, G.matrix);
  out.value = ges.eigenvalues().maxCoeff();
  return out;
}

namespace {

struct GramianEigs {
  double minEig, maxEig, trace;
};

GramianEigs gramianEigs(const Eigen::MatrixXd& G) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  return {eig.eigenvalues()(0), eig.eigenvalues()(G.rows() - 1), G.trace()};
}

// Modal heat factor diag(e^{-t λ²}) applied to a coefficient vector.
Eigen::VectorXd decay(const SpectralDecomposition& dec, int m, double t,
                      const Eigen::VectorXd& c) {
  Eigen::VectorXd out = c;
  for (int k = 0; k < m; ++k) out[k] *= std::exp(-t * dec.eigenvalues[k]);
  return out;
}

}  // namespace

ControlResult hum_control(const SpectralDecomposition& dec,
                          const ObservationSet& set, const TimeSet& F,
                          const Eigen::VectorXd& u0, const Eigen::VectorXd& v0,
                          double T, double epsilon,
                          const RetainedPolicy& policy,
                          double residualTolerance) {
  const int m = retained_count(dec, T, policy);
  const int n = dec.size();

  Gramian Lambda = observability_gramian(dec, set, F, T, m,
                                         GramianKernel::TerminalAdjoint,
                                         TimeIntegration::Trapezoid);

  ControlResult res;
  auto eigs = gramianEigs(Lambda.matrix);
  res.gramianMinEig = eigs.minEig;
  res.gramianMaxEig = eigs.maxEig;
  res.gramianTrace = eigs.trace;
  res.epsilon = epsilon < 0.0 ? 1e-12 * eigs.trace / m : epsilon;

  // Defect w = e^{TΔ}(v0 - u0); modes beyond the retained block are left to
  // dissipation and their terminal size is reported.
  Eigen::VectorXd z = dec.coefficients(v0 - u0);
  Eigen::VectorXd wFull = decay(dec, n, T, z);
  Eigen::VectorXd w = wFull.head(m);
  res.unretainedTailBound = wFull.tail(n - m).norm();

  Eigen::MatrixXd reg = Lambda.matrix;
  reg.diagonal().array() += res.epsilon;
  Eigen::VectorXd phi = reg.ldlt().solve(w);
  res.phiNorm = phi.norm();

  // Control samples on the quadrature grid: f(t) = 1_ω e^{(T-t)Δ} φ.
  std::vector<double> t, qw;
  F.quadrature(t, qw);
  res.times = t;
  res.quadWeights = qw;
  res.control.setZero(static_cast<int>(t.size()), n);

  Eigen::VectorXd uT = decay(dec, n, T, dec.coefficients(u0));  // modal coords
  for (size_t q = 0; q < t.size(); ++q) {
    Eigen::VectorXd p = dec.modes.leftCols(m) * decay(dec, m, T - t[q], phi);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    for (int node : set.nodes) f[node] = p[node];
    res.control.row(q) = f.transpose();

    double fNorm2 = 0.0;
    for (int node : set.nodes) {
      fNorm2 += dec.weight[node] * f[node] * f[node];
    }
    res.cost += qw[q] * fNorm2;

    // Independent full-space resimulation of the terminal state.
    uT += qw[q] * decay(dec, n, T - t[q], dec.coefficients(f));
  }

  Eigen::VectorXd target = decay(dec, n, T, dec.coefficients(v0));
  double denom = std::max({target.norm(), w.norm(), 1e-300});
  Eigen::VectorXd diff = uT - target;
  res.terminalResidualRetained = diff.head(m).norm() / denom;
  res.terminalResidualFull = diff.norm() / denom;
  res.success = res.terminalResidualRetained <= residualTolerance;
  return res;
}

LrResult lebeau_robbiano_control(const SpectralDecomposition& dec,
                                 const ObservationSet& set,
                                 const Eigen::VectorXd& u0, double T,
                                 const LrSchedule& schedule,
                                 const RetainedPolicy& policy,
                                 double tolerance) {
  if (schedule.slabs < 1 || !(schedule.mu0 > 0.0)) {
    throw std::invalid_argument("lebeau_robbiano_control: bad schedule");
  }
  const int n = dec.size();
  const double u0Norm = dec.kappaNorm(u0);

  LrResult out;
  Eigen::VectorXd y = dec.coefficients(u0);  // modal state
  double slabBegin = 0.0;
  std::vector<Eigen::VectorXd> controlRows;

  for (int j = 0; j < schedule.slabs; ++j) {
    const double slabEnd = T * (1.0 - std::pow(2.0, -(j + 1)));
    const double len = slabEnd - slabBegin;
    const double mu = schedule.mu0 * std::pow(2.0, j);
    if (mu > dec.maxFrequency() * (1.0 + 1e-12) ||
        mu > policy.frequencyCap * (1.0 + 1e-12)) {
      out.exhaustedSpectrum = true;
      break;
    }
    const int mLow = dec.modesBelow(mu);

    LrSlabRecord rec;
    rec.slab = j;
    rec.mu = mu;
    rec.begin = slabBegin;
    rec.end = slabEnd;
    rec.stateNormBefore = y.norm();

    // HUM on the low block over this slab, target 0 at the slab end.
    TimeSet slabF = TimeSet::interval(0.0, len, schedule.quadratureNodesPerSlab);
    Gramian Lambda = observability_gramian(dec, set, slabF, len, mLow,
                                           GramianKernel::TerminalAdjoint,
                                           TimeIntegration::Trapezoid);
    Eigen::VectorXd w = -decay(dec, mLow, len, y.head(mLow));
    rec.defectNorm = w.norm();
    double eps = 1e-12 * Lambda.matrix.trace() / mLow;
    Eigen::MatrixXd reg = Lambda.matrix;
    reg.diagonal().array() += eps;
    Eigen::VectorXd phi = reg.ldlt().solve(w);

    std::vector<double> t, qw;
    slabF.quadrature(t, qw);
    Eigen::VectorXd yNext = decay(dec, n, len, y);
    for (size_t q = 0; q < t.size(); ++q) {
      Eigen::VectorXd p =
          dec.modes.leftCols(mLow) * decay(dec, mLow, len - t[q], phi);
      Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
      double fNorm2 = 0.0;
      for (int node : set.nodes) {
        f[node] = p[node];
        fNorm2 += dec.weight[node] * p[node] * p[node];
      }
      rec.cost += qw[q] * fNorm2;
      yNext += qw[q] * decay(dec, n, len - t[q], dec.coefficients(f));
      out.times.push_back(slabBegin + t[q]);
      out.quadWeights.push_back(qw[q]);
      controlRows.push_back(f);
    }
    y = yNext;
    rec.blockResidual = y.head(mLow).norm();
    out.totalCost += rec.cost;
    out.slabRecords.push_back(rec);
    slabBegin = slabEnd;
  }

  // Free decay over the remaining tail.
  y = decay(dec, n, T - slabBegin, y);
  out.finalState = dec.modes * y;
  out.finalResidualRel = y.norm() / std::max(u0Norm, 1e-300);
  out.success = !out.exhaustedSpectrum && out.finalResidualRel <= tolerance;
  out.control.setZero(static_cast<int>(controlRows.size()), n);
  for (size_t r = 0; r < controlRows.size(); ++r) {
    out.control.row(static_cast<int>(r)) = controlRows[r].transpose();
  }
  return out;
}

ImpulseSchedule ImpulseSchedule::geometric(double T, double t0, double tau,
                                           int count, double weightD) {
  if (!(T > 0.0) || !(t0 >= 0.0) || t0 >= T || count < 1) {
    throw std::invalid_argument("ImpulseSchedule::geometric: bad parameters");
  }
  // t_j = T - (T - t0) 2^{-(j+1)}: first impulse at the midpoint of (t0, T),
  // consecutive gaps halve, so the stored ratio certificate is tau = 1/2.
  std::vector<double> times(count);
  for (int j = 0; j < count; ++j) {
    times[j] = T - (T - t0) * std::pow(2.0, -(j + 1));
  }
  return fromTimes(T, std::move(times), tau, weightD);
}

ImpulseSchedule ImpulseSchedule::fromTimes(double T, std::vector<double> times,
                                           double tau, double weightD) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw std::invalid_argument("ImpulseSchedule: tau must lie in (0,1)");
  }
  if (times.empty()) {
    throw std::invalid_argument("ImpulseSchedule: empty schedule");
  }
  for (size_t j = 0; j < times.size(); ++j) {
    if (!(times[j] > 0.0 && times[j] < T)) {
      throw std::invalid_argument("ImpulseSchedule: times must lie in (0,T)");
    }
    if (j > 0 && !(times[j] > times[j - 1])) {
      throw std::invalid_argument("ImpulseSchedule: times must increase");
    }
  }
  // Ratio condition: each gap at least tau times the previous one.
  for (size_t j = 2; j < times.size(); ++j) {
    double g1 = times[j - 1] - times[j - 2];
    double g2 = times[j] - times[j - 1];
    if (g2 < tau * g1 * (1.0 - 1e-12)) {
      throw std::invalid_argument(
          "ImpulseSchedule: gap ratio condition violated between impulses " +
          std::to_string(j - 1) + " and " + std::to_string(j));
    }
  }

  ImpulseSchedule s;
  s.times = std::move(times);
  s.ratio = tau;
  s.weightD = weightD;
  s.horizon = T;
  return s;
}

double ImpulseSchedule::gapAfter(int j) const {
  const double next = j + 1 < count() ? times[j + 1] : horizon;
  return next - times[j];
}

ControlResult impulsive_control(const SpectralDecomposition& dec,
                                const ObservationSet& set,
                                const ImpulseSchedule& schedule,
                                const Eigen::VectorXd& u0,
                                const Eigen::VectorXd& v0, double T,
                                double epsilon, const RetainedPolicy& policy,
                                double residualTolerance) {
  if (std::abs(schedule.horizon - T) > 1e-12 * std::max(1.0, T)) {
    throw std::invalid_argument("impulsive_control: schedule horizon != T");
  }
  const int m = retained_count(dec, T, policy);
  const int n = dec.size();
  const int J = schedule.count();

  // Weighted reachability Gramian K = Σ_j ρ_j^{-1} D_j M D_j with weights
  // ρ_j = e^{D/gap_j} and D_j = diag(e^{-(T-t_j)λ²}).
  Eigen::MatrixXd M = massOnSet(dec, set, m);
  std::vector<double> rho(J);
  for (int j = 0; j < J; ++j) {
    double expo = schedule.weightD / schedule.gapAfter(j);
    if (expo > 700.0) {
      throw std::invalid_argument(
          "impulsive_control: impulse weight overflows, reduce D or widen "
          "gaps");
    }
    rho[j] = std::exp(expo);
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, m);
  std::vector<Eigen::VectorXd> Dj(J);
  for (int j = 0; j < J; ++j) {
    Eigen::VectorXd d(m);
    for (int k = 0; k < m; ++k) {
      d[k] = std::exp(-(T - schedule.times[j]) * dec.eigenvalues[k]);
    }
    Dj[j] = d;
    K.noalias() += (1.0 / rho[j]) * (d.asDiagonal() * M * d.asDiagonal());
  }
  K = 0.5 * (K + K.transpose()).eval();

  ControlResult res;
  auto eigs = gramianEigs(K);
  res.gramianMinEig = eigs.minEig;
  res.gramianMaxEig = eigs.maxEig;
  res.gramianTrace = eigs.trace;
  res.epsilon = epsilon < 0.0 ? 1e-12 * eigs.trace / m : epsilon;

  Eigen::VectorXd z = dec.coefficients(v0 - u0);
  Eigen::VectorXd wFull = decay(dec, n, T, z);
  Eigen::VectorXd w = wFull.head(m);
  res.unretainedTailBound = wFull.tail(n - m).norm();

  Eigen::MatrixXd reg = K;
  reg.diagonal().array() += res.epsilon;
  Eigen::VectorXd psi = reg.ldlt().solve(w);
  res.phiNorm = psi.norm();

  Eigen::VectorXd uT = decay(dec, n, T, dec.coefficients(u0));
  for (int j = 0; j < J; ++j) {
    Eigen::VectorXd p =
        dec.modes.leftCols(m) * Dj[j].cwiseProduct(psi).eval();
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    double fNorm2 = 0.0;
    for (int node : set.nodes) {
      f[node] = p[node] / rho[j];
      fNorm2 += dec.weight[node] * f[node] * f[node];
    }
    res.impulses.push_back(f);
    res.cost += rho[j] * fNorm2;
    res.weightedNormSum += rho[j] * std::sqrt(fNorm2);
    uT += decay(dec, n, T - schedule.times[j], dec.coefficients(f));
  }

  Eigen::VectorXd target = decay(dec, n, T, dec.coefficients(v0));
  double denom = std::max({target.norm(), w.norm(), 1e-300});
  Eigen::VectorXd diff = uT - target;
  res.terminalResidualRetained = diff.head(m).norm() / denom;
  res.terminalResidualFull = diff.norm() / denom;
  res.success = res.terminalResidualRetained <= residualTolerance;
  return res;
}

ObsterReport verify_obster(const SpectralDecomposition& dec,
                           const ObservationSet& set,
                           const std::vector<double>& observationTimes,
                           double tau, double D, int trials, double T,
                           unsigned long long seed,
                           const RetainedPolicy& policy) {
  if (observationTimes.size() < 2) {
    throw std::invalid_argument("verify_obster: need >= 2 observation times");
  }
  for (size_t i = 0; i < observationTimes.size(); ++i) {
    if (!(observationTimes[i] > 0.0 && observationTimes[i] < T)) {
      throw std::invalid_argument("verify_obster: times must lie in (0,T)");
    }
    if (i > 0 && !(observationTimes[i] < observationTimes[i - 1])) {
      throw std::invalid_argument("verify_obster: times must decrease");
    }
  }
  // Ratio condition on decreasing gaps: (s_n - s_{n+1}) >= tau (s_{n-1} - s_n).
  for (size_t i = 2; i < observationTimes.size(); ++i) {
    double g1 = observationTimes[i - 2] - observationTimes[i - 1];
    double g2 = observationTimes[i - 1] - observationTimes[i];
    if (g2 < tau * g1 * (1.0 - 1e-12)) {
      throw std::invalid_argument("verify_obster: gap ratio condition violated");
    }
  }

  const int m = retained_count(dec, T, policy);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  ObsterReport rep;
  rep.trials = trials;
  const int batches = std::min(5, trials);
  const int perBatch = trials / batches;
  double batchBest = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(dec.size());
    for (int k = 0; k < m; ++k) c[k] = normal(rng);
    Eigen::VectorXd u0 = dec.modes * c;

    double lhs = 0.0;
    for (int k = 0; k < m; ++k) {
      double v = std::exp(-T * dec.eigenvalues[k]) * c[k];
      lhs += v * v;
    }
    double rhs = 0.0;
    for (size_t i = 0; i + 1 < observationTimes.size(); ++i) {
      double gap = observationTimes[i] - observationTimes[i + 1];
      Eigen::VectorXd u = heat_evolve(dec, u0, observationTimes[i]);
      double obs = 0.0;
      for (int node : set.nodes) {
        obs += dec.weight[node] * u[node] * u[node];
      }
      rhs = std::max(rhs, std::exp(-D / gap) * obs);
    }
    if (lhs > 0.0 && rhs > 0.0) {
      double c0 = lhs / rhs;
      rep.empiricalC = std::max(rep.empiricalC, c0);
      rep.minC = std::min(rep.minC, c0);
      rep.maxC = std::max(rep.maxC, c0);
      batchBest = std::max(batchBest, c0);
    } else {
      ++rep.skipped;
    }
    if ((trial + 1) % perBatch == 0 &&
        static_cast<int>(rep.batchMax.size()) < batches) {
      rep.batchMax.push_back(batchBest);
      batchBest = 0.0;
    }
  }
  if (!rep.batchMax.empty()) {
    double lo = *std::min_element(rep.batchMax.begin(), rep.batchMax.end());
    double hi = *std::max_element(rep.batchMax.begin(), rep.batchMax.end());
    rep.stabilityRatio = lo > 0.0 ? hi / lo
                                  : std::numeric_limits<double>::infinity();
  }
  return rep;
}

}  // namespace speclab
