#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "speclab/grid.hpp"

namespace speclab {

/// A grid-node subset playing the role of the observation region, together
/// with the hypothesis it was built for: a sliding-ball density (R, delta)
/// or a Hausdorff-content target dimension.
struct ObservationSet {
  enum class Kind { Density, Content };

  std::vector<int> nodes;      // sorted, unique
  std::vector<uint8_t> mask;   // size nodeCount, 1 iff member
  Kind kind = Kind::Density;
  double R = 0.0;
  double delta = 0.0;          // measured min window measure (density kind)
  double contentDim = 0.0;     // target order n (content kind)
  std::string provenance;

  bool contains(int node) const { return mask[node] != 0; }
  int count() const { return static_cast<int>(nodes.size()); }

  /// Plain measure: node count × h^d.
  double measure(const Grid& grid) const {
    return count() * grid.cellVolume();
  }
};

struct SetSpec {
  enum class Kind { Full, PeriodicBalls, FatCantor, CantorDust, RandomDensity };
  Kind kind = Kind::Full;

  // PeriodicBalls: balls of the given radius centered on a pitch sublattice.
  double radius = 0.1;
  double pitch = 0.5;

  // FatCantor: at step k = 1..depth the middle fraction removedFraction/2^k
  // of every remaining interval is removed; positive measure in the limit.
  int depth = 4;
  double removedFraction = 0.5;

  // CantorDust: each interval keeps its two end pieces of relative length
  // `ratio`; per-axis target dimension log 2 / log(1/ratio).
  double ratio = 1.0 / 3.0;

  // RandomDensity: Bernoulli node draws retried until the sliding window of
  // radius R has measure >= delta everywhere.
  double delta = 0.1;
  double windowR = 0.25;
  unsigned long long seed = 1;

  static SetSpec full();
  static SetSpec periodicBalls(double radius, double pitch);
  static SetSpec fatCantor(int depth, double removedFraction);
  static SetSpec cantorDust(int depth, double ratio);
  static SetSpec randomDensity(double delta, double R, unsigned long long seed);
};

ObservationSet generate_set(const SetSpec& spec, const Grid& grid);

/// Builds a set from explicit node indices, validating membership and
/// non-emptiness.
ObservationSet make_observation_set(const Grid& grid, std::vector<int> nodes,
                                    ObservationSet::Kind kind, double R,
                                    double delta, double contentDim,
                                    std::string provenance);

struct DensityReport {
  double minMeasure = 0.0;  // min over centers of meas(ω ∩ B(x,R))
  int worstCenter = -1;
  double R = 0.0;
  double delta = 0.0;
  bool pass = false;
};

/// Slides a ball of radius R over all grid nodes and reports the minimum
/// window measure of the set against the threshold delta.
DensityReport verify_density(const ObservationSet& set, const Grid& grid,
                             double R, double delta);

/// Two-sided Hausdorff-content estimate at order n. The upper bound is the
/// value of an explicit greedy ball cover over the dyadic radius lattice
/// h·2^m (certified: the cover is materialized). The lower bound is dyadic
/// box counting, max over informative scales of N_r r^n divided by the
/// reported dimensional factor — a heuristic companion, not a certificate.
struct CoveringEstimate {
  double order = 0.0;
  double upperBound = 0.0;
  double lowerBound = 0.0;
  double lowerBoundFactor = 1.0;     // the factor divided out of N_r r^n
  std::vector<double> radiiUsed;     // greedy cover radii

  /// Value Σ r_j^m of the stored cover at another order m.
  double coverValueAtOrder(double m) const;
};

CoveringEstimate hausdorff_content(const ObservationSet& set, const Grid& grid,
                                   double n, double maxRadius);

}  // namespace speclab
