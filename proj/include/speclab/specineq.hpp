#pragma once

#include <Eigen/Dense>

#include <vector>

#include "speclab/grid.hpp"
#include "speclab/operator.hpp"
#include "speclab/sets.hpp"

namespace speclab {

/// One measurement of the spectral constant at a frequency cutoff: the best
/// C with ‖u‖_{L²(κdx)} <= C · (observation norm) over u in ran Π_mu.
struct SpectralConstantSample {
  enum class Variant { L2, LinfSum };

  double mu = 0.0;
  Variant variant = Variant::L2;
  double constant = 0.0;
  bool infinite = false;       // observation fails to see ran Π_mu
  Eigen::VectorXd witness;     // extremal u in node space

  // Ascent diagnostics (LinfSum variant).
  int ascentIterations = 0;
  int bestStart = -1;
  double ascentImprovement = 0.0;  // constant gain over the best initial point
};

/// Exact finite-dimensional constant for the L² observation on ω:
/// C = 1/σ_min(B) with B the κ-weighted restriction of the retained modes
/// to ω. Computed by SVD so that exponentially small σ_min stay resolved;
/// a rank-deficient restriction is reported as an infinite constant, not an
/// exception.
SpectralConstantSample spectral_constant_L2(const SpectralDecomposition& dec,
                                            const ObservationSet& set,
                                            double mu);

/// Certified lower bound on the constant for the per-cell sup observation
/// Σ_p sup²_{ω ∩ B(p,R)} |u|², by projected subgradient descent of the
/// denominator over the unit sphere of ran Π_mu, warm-started at the L²
/// witness plus random restarts.
SpectralConstantSample spectral_constant_Linf(const SpectralDecomposition& dec,
                                              const Grid& grid,
                                              const ObservationSet& set,
                                              double mu,
                                              const std::vector<Cell>& cells,
                                              int restarts,
                                              unsigned long long seed,
                                              int maxIterations = 400);

struct ExponentialFit {
  double logC0 = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
  double heldOutMu = 0.0;
  double heldOutGapRel = 0.0;  // |predicted - actual| / actual at largest mu
  int excludedInfinite = 0;
};

/// Affine fit of log C against mu on all but the largest mu; the largest mu
/// is held out and reported as a relative prediction gap. Infinite samples
/// are excluded with a count.
ExponentialFit fit_exponential(const std::vector<SpectralConstantSample>& samples);

}  // namespace speclab
