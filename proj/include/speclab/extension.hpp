#pragma once

#include <Eigen/Dense>

#include <vector>

#include "speclab/fit.hpp"
#include "speclab/grid.hpp"
#include "speclab/operator.hpp"
#include "speclab/sets.hpp"

namespace speclab {

/// Harmonic-in-time extension of a band-limited function:
///
///   v_mu(t, x) = Σ_{λ_k <= mu} sinh(λ_k t)/λ_k ⟨u,e_k⟩_κ e_k(x),
///
/// the λ = 0 mode contributing t·⟨u,e_0⟩ e_0. Time dependence is analytic
/// (per-mode sinh/cosh); only space is discretized. v is odd in t with
/// v(0,·) = 0 and ∂_t v(0,·) = Π_mu u, and satisfies ∂²_t v = -(-Δ_h) v
/// mode by mode.
struct ExtensionField {
  explicit ExtensionField(Grid g) : grid(std::move(g)) {}

  Grid grid;
  double mu = 0.0;
  double T2 = 0.0;
  Eigen::VectorXd timeGrid;        // 2·steps+1 symmetric points incl. 0
  Eigen::MatrixXd values;          // row i = v(timeGrid[i], ·)
  Eigen::MatrixXd timeDerivative;  // row i = ∂_t v(timeGrid[i], ·)

  // Retained modal data (λ_k <= mu) for analytic evaluation.
  Eigen::VectorXd modalFrequencies;
  Eigen::VectorXd modalCoefficients;
  Eigen::MatrixXd modalModes;  // node × retained
  Eigen::VectorXd weight;

  int timeIndexOfZero() const { return static_cast<int>(timeGrid.size()) / 2; }
};

ExtensionField extend(const SpectralDecomposition& dec, const Grid& grid,
                      const Eigen::VectorXd& u, double mu, double T2,
                      int timeSteps);

struct SupResult {
  double value = 0.0;
  bool empty = false;
};

/// sup over K_p = [-T1,T1] × B(p,R) of |(∂_t v, ∇_x v)|, grid points only.
SupResult sup_gradient_K(const ExtensionField& field, const Cell& cell);

/// sup over Ω_p = [-T2,T2] × B(p,2R).
SupResult sup_gradient_Omega(const ExtensionField& field, const Cell& cell);

/// sup over E_p = {0} × (ω ∩ B(p,R)); v(0)=0 so this is sup |Π_mu u| there.
SupResult sup_gradient_E(const ExtensionField& field, const Cell& cell,
                         const ObservationSet& set);

/// One observation of the three-region chain for a fixed (u, cell, mu),
/// together with the L² data entering the inequality chain. Norms are
/// κ-weighted and evaluated on Π_mu u.
struct PropagationSample {
  int cellIndex = -1;
  double mu = 0.0;
  double supE = 0.0;
  double supK = 0.0;
  double supOmega = 0.0;
  double l2Ball = 0.0;     // ‖Π_mu u‖_{L²(B(p,R), κ)}
  double l2SetBall = 0.0;  // ‖Π_mu u‖_{L²(ω ∩ B(p,R), κ)}
};

PropagationSample propagation_sample(const ExtensionField& field,
                                     const Cell& cell, int cellIndex,
                                     const ObservationSet& set);

/// Level-set display helper: the nodes of ω ∩ B(p,R) where |Π_mu u| <= a.
std::vector<int> levelset_small_nodes(const ExtensionField& field,
                                      const Cell& cell,
                                      const ObservationSet& set, double a);

struct AlphaFit {
  double alpha = 0.0;
  double logC = 0.0;
  bool identifiable = false;
  bool clamped = false;
  int used = 0;
  int degenerate = 0;           // samples dropped for a vanishing sup
  double rmse = 0.0;
  double violationFraction = 0.0;       // against exp(logC)
  double violationFractionSlack = 0.0;  // against exp(logC + 2·rmse)

  // Per-cell exponents (diagnostic; the headline alpha is fitted globally).
  std::vector<std::pair<int, double>> perCellAlpha;
};

/// Fits sup_K <= C (sup_E)^α (sup_Ω)^{1-α} by regressing
/// log supK - log supΩ on log supE - log supΩ. α is clamped to (0,1);
/// a zero-variance regressor makes the fit unidentifiable.
AlphaFit estimate_alpha(const std::vector<PropagationSample>& samples);

struct SobolevReport {
  std::vector<double> muValues;
  std::vector<double> lhsSqrt;  // (Σ_p sup²_{(-T2,T2)×B(p,2R)})^{1/2}, worst u
  double K = 0.0;               // fitted slope of log lhsSqrt vs mu
  double logC = 0.0;
  double r2 = 0.0;
  double heldOutMu = 0.0;
  double heldOutRatio = 0.0;  // actual / predicted at the held-out mu
  bool heldOutOk = false;
};

/// Measures the square-summed sup bound over random unit-norm u for each mu,
/// fits log of the square root affinely in mu (all but the largest mu) and
/// validates the fitted envelope on the held-out largest mu within factor 2.
SobolevReport sobolev_bound_check(const SpectralDecomposition& dec,
                                  const Grid& grid,
                                  const std::vector<Cell>& cells,
                                  const std::vector<double>& muValues,
                                  int trials, double T2, int timeSteps,
                                  unsigned long long seed);

struct EnergyReport {
  double dtQuadrature = 0.0;     // ∫ ‖∂_t v‖²_κ dt (trapezoid)
  double dtMajorant = 0.0;       // 2τ e^{2τ mu} ‖u‖²_κ
  double gradQuadrature = 0.0;   // ∫ ‖∇_x v‖²_κ dt (centered differences)
  double gradDirichlet = 0.0;    // ∫ (-Δ v, v)_κ dt (modal)
  double gradMajorant = 0.0;     // (1/a) τ e^{2τ mu} ‖u‖²_κ
  double gradConstant = 0.0;     // the C(a,A) = 1/a used
  bool dtPass = false;
  bool gradPass = false;
};

/// Time-quadrature energy checks on (-tau, tau):
///   ‖∂_t v‖² <= 2τ e^{2τμ} ‖u‖²  and
///   ‖∇_x v(t)‖²_κ <= (1/a)(-Δ v(t), v(t))_κ integrated, with the same
///   e^{2τμ} majorant. `slack` absorbs quadrature error of the majorant.
EnergyReport energy_identity_check(const SpectralDecomposition& dec,
                                   const Grid& grid, const Eigen::VectorXd& u,
                                   double mu, double tau, int timeSteps,
                                   double ellipticityLower,
                                   double slack = 0.05);

struct YoungSplitReport {
  double cPrime = 0.0;  // max sample ratio l2Ball / (supΩ^{1-α} l2SetBall^α)
  std::vector<double> dValues;
  std::vector<bool> pass;       // per D value, all samples satisfied
  std::vector<double> worstMargin;  // per D, max LHS/RHS over samples
  int excluded = 0;
};

/// Verifies the Young-split consequence of the fitted chain: with
/// C' calibrated on the samples and α from the fit, for every D
///   l2Ball² <= C'² ( supΩ² e^{-D mu} + l2SetBall² e^{D (1-α)/α mu} ).
YoungSplitReport verify_young_split(const std::vector<PropagationSample>& samples,
                                    double alpha,
                                    const std::vector<double>& dValues);

/// Resolution rule: at least 8 grid points per wavelength at frequency mu.
bool resolution_ok(const Grid& grid, double mu);

}  // namespace speclab
