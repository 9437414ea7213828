#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace speclab {

/// Uniform periodic lattice on a 1- or 2-torus with side length `extent`.
/// Nodes sit at integer multiples of the spacing h = extent/resolution on
/// each axis; all index arithmetic wraps, so every neighbour query resolves.
class Grid {
 public:
  Grid(int dim, double extent, int resolution);

  int dim() const { return dim_; }
  double extent() const { return extent_; }
  int resolution() const { return resolution_; }
  double spacing() const { return spacing_; }
  int nodeCount() const { return nodeCount_; }

  /// Volume h^dim of one lattice cell (the quadrature weight of a node).
  double cellVolume() const { return cellVolume_; }

  int wrap(int i) const {
    int r = i % resolution_;
    return r < 0 ? r + resolution_ : r;
  }

  /// Flattened index of lattice coordinates (i, j); j is ignored in 1-D.
  int nodeIndex(int i, int j = 0) const {
    return dim_ == 1 ? wrap(i) : wrap(j) * resolution_ + wrap(i);
  }

  std::array<int, 2> latticeCoords(int node) const {
    if (dim_ == 1) return {node, 0};
    return {node % resolution_, node / resolution_};
  }

  Eigen::Vector2d point(int node) const {
    auto c = latticeCoords(node);
    return {c[0] * spacing_, c[1] * spacing_};
  }

  /// Distance of two coordinates folded onto the circle of length `extent`.
  double axisDistance(double a, double b) const;

  /// Periodic Euclidean distance between two points of the torus.
  double distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const;

  double nodeDistance(int a, int b) const {
    return distance(point(a), point(b));
  }

  /// All nodes with periodic distance <= radius from `center`. Closed ball,
  /// with a small relative guard so exact-boundary nodes are kept.
  std::vector<int> nodesWithin(const Eigen::Vector2d& center,
                               double radius) const;

 private:
  int dim_;
  double extent_;
  int resolution_;
  double spacing_;
  int nodeCount_;
  double cellVolume_;
};

/// Builds the periodic computational domain. dim must be 1 or 2,
/// resolution >= 4, extent > 0.
Grid build_torus(int dim, double extent, int resolution);

/// One cell of the space-time covering: inner ball B(p,R), outer ball
/// B(p,2R) and the time half-widths 0 < T1 < T2 of the associated regions.
struct Cell {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double innerRadius = 0.0;       // R
  double outerRadius = 0.0;       // 2R
  double timeHalfWidthInner = 0.0;  // T1
  double timeHalfWidthOuter = 0.0;  // T2
};

/// Lays cell centers on a sublattice of the given pitch (which must divide
/// the extent) and checks exhaustively that the inner balls cover every
/// node. Throws if the cover fails or the parameters are inconsistent.
std::vector<Cell> cell_cover(const Grid& grid, double R, double T1, double T2,
                             double pitch);

/// Node samples of kappa and of the symmetric metric g together with the
/// ellipticity certificate a (kappa >= a, g >= a*Id pointwise) and the
/// discrete Lipschitz certificate A (worst adjacent-node quotient over
/// kappa and every entry of g, wrap-around pairs included).
/// In 1-D only gxx is meaningful; gxy and gyy are stored as 0.
struct CoefficientField {
  Eigen::VectorXd kappa;
  Eigen::VectorXd gxx;
  Eigen::VectorXd gxy;
  Eigen::VectorXd gyy;
  double ellipticityLower = 0.0;  // a
  double lipschitzBound = 0.0;    // A
};

struct CoefficientSpec {
  enum class Kind { Constant, SmoothPeriodic, PiecewiseLipschitz };
  Kind kind = Kind::Constant;

  // Constant: kappa0, g0.
  double kappa0 = 1.0;
  double g0xx = 1.0, g0xy = 0.0, g0yy = 1.0;

  // SmoothPeriodic:
  //   kappa(x) = kappaBase + kappaAmp * sin(2π k x1 / L) [ * cos(2π k x2 / L) ]
  //   g_diag(x) = gBase + gAmp * cos(2π m x1 / L) [ * cos(2π m x2 / L) ]
  //   gxy(x)   = gCrossAmp * sin(2π m x1 / L) sin(2π m x2 / L)   (2-D only)
  double kappaBase = 2.0, kappaAmp = 1.0;
  int kappaHarmonic = 1;
  double gBase = 1.0, gAmp = 0.0;
  int gHarmonic = 1;
  double gCrossAmp = 0.0;

  // PiecewiseLipschitz: periodic tent profiles along the first axis running
  // from the min value (at x1 = 0) to the max value (at x1 = L/2) and back.
  double kappaMin = 1.0, kappaMax = 2.0;
  double gMin = 1.0, gMax = 1.0;

  static CoefficientSpec constant(double kappa, double gxx = 1.0,
                                  double gxy = 0.0, double gyy = 1.0);
  static CoefficientSpec smoothPeriodic(double kappaBase, double kappaAmp,
                                        int kappaHarmonic, double gBase,
                                        double gAmp, int gHarmonic,
                                        double gCrossAmp = 0.0);
  static CoefficientSpec piecewiseLipschitz(double kappaMin, double kappaMax,
                                            double gMin, double gMax);
};

/// Samples the coefficient spec on the grid, validates every field invariant
/// and computes the (a, A) certificates. Throws on ellipticity violations.
CoefficientField sample_coefficients(const CoefficientSpec& spec,
                                     const Grid& grid);

/// Validates raw node samples and computes the (a, A) certificates; this is
/// also the re-scan used to check certificate reproducibility.
CoefficientField make_coefficient_field(const Grid& grid,
                                        Eigen::VectorXd kappa,
                                        Eigen::VectorXd gxx,
                                        Eigen::VectorXd gxy,
                                        Eigen::VectorXd gyy);

}  // namespace speclab
