#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <vector>

#include "speclab/grid.hpp"
#include "speclab/operator.hpp"
#include "speclab/sets.hpp"

namespace speclab {

/// Finite disjoint union of closed intervals inside (0, T), with the number
/// of composite-trapezoid quadrature nodes used per interval.
struct TimeSet {
  struct Interval {
    double a = 0.0, b = 0.0;
  };
  std::vector<Interval> intervals;
  int quadratureNodesPerInterval = 32;

  static TimeSet interval(double a, double b, int nodes = 32);
  static TimeSet unionOf(std::vector<Interval> intervals, int nodes = 32);

  double totalMeasure() const;

  /// Composite trapezoid nodes and weights over all intervals.
  void quadrature(std::vector<double>& t, std::vector<double>& w) const;

  void validate() const;  // 0 < a_i < b_i <= a_{i+1}, positive measure
};

/// Retained-subspace policy: modes participate in observability/control when
/// exp(-T λ²) >= decayThreshold and λ <= frequencyCap. Higher modes are left
/// to dissipation; their terminal contribution is reported, not hidden.
struct RetainedPolicy {
  double decayThreshold = 1e-14;
  double frequencyCap = std::numeric_limits<double>::infinity();
};

int retained_count(const SpectralDecomposition& dec, double T,
                   const RetainedPolicy& policy);

enum class TimeIntegration { Trapezoid, Exact };

/// Direction of the flow inside the quadratic form:
///   Forward          G_jk = M_jk ∫_F e^{-t(λ²_j+λ²_k)} dt   (observation)
///   TerminalAdjoint  Λ_jk = M_jk ∫_F e^{-(T-t)(λ²_j+λ²_k)} dt (control)
/// with M the κ-weighted mass matrix of ω on the retained modes.
enum class GramianKernel { Forward, TerminalAdjoint };

struct Gramian {
  Eigen::MatrixXd matrix;  // on the retained modal basis
  int retained = 0;
  double T = 0.0;
  GramianKernel kernel = GramianKernel::Forward;
  TimeIntegration integration = TimeIntegration::Trapezoid;
  TimeSet timeSet;

  double trace() const { return matrix.trace(); }
};

/// e^{tΔ} u0 = Σ_k e^{-t λ²_k} ⟨u0,e_k⟩_κ e_k; rejects negative t.
Eigen::VectorXd heat_evolve(const SpectralDecomposition& dec,
                            const Eigen::VectorXd& u0, double t);

Gramian observability_gramian(const SpectralDecomposition& dec,
                              const ObservationSet& set, const TimeSet& F,
                              double T, int retained,
                              GramianKernel kernel = GramianKernel::Forward,
                              TimeIntegration integration =
                                  TimeIntegration::Trapezoid);

/// Non-quadratic per-cell sup observation u0 ↦ Σ_p ∫_F sup²_{ω∩B(p,R)} |u|² dt.
/// This is an evaluator, not a quadratic form.
struct SupCellFunctional {
  std::function<double(const Eigen::VectorXd&)> evaluate;
  bool quadraticForm = false;
  int cells = 0;
};

SupCellFunctional supcell_functional(const SpectralDecomposition& dec,
                                     const Grid& grid,
                                     const ObservationSet& set,
                                     const std::vector<Cell>& cells,
                                     const TimeSet& F);

struct ObservabilityConstant {
  double value = 0.0;
  bool infinite = false;
  double gramianMinEig = 0.0;
  double gramianMaxEig = 0.0;
};

/// C_obs = max generalized eigenvalue of (S, G) with S = diag(e^{-2Tλ²}) on
/// the retained basis; a singular Gramian yields an infinite constant with
/// diagnostics instead of an exception.
ObservabilityConstant observability_constant(const SpectralDecomposition& dec,
                                             const Gramian& G, double T);

/// Strictly increasing impulse times inside (0, T) with the gap-ratio
/// certificate tau: (t_{j+1} - t_j) >= tau (t_j - t_{j-1}) for all stored j
/// (the gap after the last impulse runs to T). Construction validates the
/// ratio condition and rejects violating schedules.
struct ImpulseSchedule {
  std::vector<double> times;
  double ratio = 0.5;  // tau
  double weightD = 1.0;
  double horizon = 1.0;  // T

  /// t_j = T - (T - t0) 2^{-j}: consecutive gaps halve, so tau = 1/2.
  static ImpulseSchedule geometric(double T, double t0, double tau, int count,
                                   double weightD);

  static ImpulseSchedule fromTimes(double T, std::vector<double> times,
                                   double tau, double weightD);

  /// Gap t_{j+1} - t_j, with t_count := T.
  double gapAfter(int j) const;
  int count() const { return static_cast<int>(times.size()); }
};

struct ControlResult {
  bool success = false;
  double epsilon = 0.0;           // Tikhonov parameter actually used
  double cost = 0.0;              // minimized objective
  double weightedNormSum = 0.0;   // impulsive: Σ_j e^{D/gap_j} ‖f_j‖
  double terminalResidualRetained = 0.0;  // relative, retained subspace
  double terminalResidualFull = 0.0;      // relative, all resolved modes
  double unretainedTailBound = 0.0;       // ‖(1-P) e^{TΔ}(v0-u0)‖ reported
  double phiNorm = 0.0;

  // Conditioning report of the solved Gramian.
  double gramianMinEig = 0.0;
  double gramianMaxEig = 0.0;
  double gramianTrace = 0.0;

  // Distributed control: value rows per quadrature time, columns per node
  // (zero off ω). Empty for impulsive controls.
  std::vector<double> times;
  std::vector<double> quadWeights;
  Eigen::MatrixXd control;

  // Impulsive control: one node vector per impulse time.
  std::vector<Eigen::VectorXd> impulses;
};

/// HUM control steering u0 to the trajectory target e^{TΔ} v0 with f
/// supported on F × ω.
///
/// Conventions, locked by the duality test:
///   - state:    ∂_t u = Δu + 1_ω f 1_F,  u(0) = u0
///   - adjoint:  f(t) = 1_ω e^{(T-t)Δ} φ  (heat flow toward the terminal
///     time; no extra κ factor since control and observation both pair in
///     the κ-weighted inner product)
///   - solve:    (Λ + εI) φ = e^{TΔ}(v0 - u0) on the retained modes with Λ
///     the TerminalAdjoint Gramian of F, so the discrete reachability map
///     applied to f equals Λφ exactly and the retained terminal defect is
///     -εφ up to rounding.
///
/// epsilon < 0 selects the policy default 1e-12 · trace(Λ)/m.
ControlResult hum_control(const SpectralDecomposition& dec,
                          const ObservationSet& set, const TimeSet& F,
                          const Eigen::VectorXd& u0, const Eigen::VectorXd& v0,
                          double T, double epsilon = -1.0,
                          const RetainedPolicy& policy = {},
                          double residualTolerance = 1e-6);

/// Geometric partition of (0,T): slab j covers [T(1-2^{-j}), T(1-2^{-j-1})]
/// with cutoff mu_j = mu0 · 2^j; the remainder (after the last slab) is free
/// decay.
struct LrSchedule {
  double mu0 = 4.0;
  int slabs = 2;
  int quadratureNodesPerSlab = 32;
};

struct LrSlabRecord {
  int slab = 0;
  double mu = 0.0;
  double begin = 0.0, end = 0.0;
  double stateNormBefore = 0.0;
  double defectNorm = 0.0;  // norm of the low block killed in this slab
  double cost = 0.0;
  double blockResidual = 0.0;  // low-block norm at slab end (should be ~0)
};

struct LrResult {
  bool success = false;
  bool exhaustedSpectrum = false;  // schedule ran past the resolved modes
  double finalResidualRel = 0.0;   // ‖u(T)‖_κ / ‖u0‖_κ
  double totalCost = 0.0;
  std::vector<LrSlabRecord> slabRecords;
  Eigen::VectorXd finalState;

  // Time-concatenated control: one row per quadrature time across all
  // slabs, columns per node (zero off ω).
  std::vector<double> times;
  std::vector<double> quadWeights;
  Eigen::MatrixXd control;
};

/// Low-frequency annihilation alternating with free decay: on slab j a HUM
/// control on the Π_{mu_j} block kills the current low block; dissipation
/// shrinks the rest (including the control spill-over into higher modes,
/// which the bookkeeping tracks through full-space resimulation).
LrResult lebeau_robbiano_control(const SpectralDecomposition& dec,
                                 const ObservationSet& set,
                                 const Eigen::VectorXd& u0, double T,
                                 const LrSchedule& schedule,
                                 const RetainedPolicy& policy = {},
                                 double tolerance = 1e-6);

/// Weighted least-norm impulsive control: minimizes Σ_j e^{D/gap_j} ‖f_j‖²
/// subject to reaching e^{TΔ} v0 on the retained modes, the impulses acting
/// at the schedule times through u(T) = e^{TΔ}u0 + Σ_j e^{(T-t_j)Δ}(1_ω f_j).
/// The reported weightedNormSum is Σ_j e^{D/gap_j} ‖f_j‖ (norms, not
/// squares), the summability certificate of the construction. The f_j are
/// node-supported vectors on ω — the finite-dimensional stand-in for
/// measure-valued controls concentrated on the closure of the set.
ControlResult impulsive_control(const SpectralDecomposition& dec,
                                const ObservationSet& set,
                                const ImpulseSchedule& schedule,
                                const Eigen::VectorXd& u0,
                                const Eigen::VectorXd& v0, double T,
                                double epsilon = -1.0,
                                const RetainedPolicy& policy = {},
                                double residualTolerance = 1e-6);

struct ObsterReport {
  double empiricalC = 0.0;  // max over all trials of LHS/RHS
  double minC = std::numeric_limits<double>::infinity();  // raw trial spread
  double maxC = 0.0;
  std::vector<double> batchMax;  // max ratio per batch of trials
  double stabilityRatio = 0.0;   // max/min over batch maxima
  int trials = 0;
  int skipped = 0;  // u0 with vanishing sides
};

/// Empirical constant of the discrete-time observation inequality
///   ‖e^{TΔ}u0‖² <= C sup_n e^{-D/(s_n - s_{n+1})} ‖e^{s_nΔ}u0‖²_{L²(E,κ)}
/// over random retained-mode u0; observation times s_n decrease, consecutive
/// gaps satisfying the same ratio condition as the control schedule.
/// The constant is a max estimator, so its stability is measured by
/// re-estimating it on independent batches of trials (batchMax), not by the
/// raw per-trial ratio spread, which is wide by construction.
ObsterReport verify_obster(const SpectralDecomposition& dec,
                           const ObservationSet& set,
                           const std::vector<double>& observationTimes,
                           double tau, double D, int trials, double T,
                           unsigned long long seed,
                           const RetainedPolicy& policy = {});

}  // namespace speclab
