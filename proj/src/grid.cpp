#include "speclab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace speclab {

Grid::Grid(int dim, double extent, int resolution)
    : dim_(dim), extent_(extent), resolution_(resolution) {
  if (dim != 1 && dim != 2) {
    throw std::invalid_argument("Grid: unsupported dimension " +
                                std::to_string(dim) + " (must be 1 or 2)");
  }
  if (!(extent > 0.0)) {
    throw std::invalid_argument("Grid: extent must be positive");
  }
  if (resolution < 4) {
    throw std::invalid_argument("Grid: resolution must be >= 4");
  }
  spacing_ = extent_ / resolution_;
  nodeCount_ = dim_ == 1 ? resolution_ : resolution_ * resolution_;
  cellVolume_ = dim_ == 1 ? spacing_ : spacing_ * spacing_;
}

double Grid::axisDistance(double a, double b) const {
  double d = std::fmod(std::abs(a - b), extent_);
  return std::min(d, extent_ - d);
}

double Grid::distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const {
  double dx = axisDistance(a.x(), b.x());
  if (dim_ == 1) return dx;
  double dy = axisDistance(a.y(), b.y());
  return std::hypot(dx, dy);
}

std::vector<int> Grid::nodesWithin(const Eigen::Vector2d& center,
                                   double radius) const {
  std::vector<int> out;
  const double guard = radius + 1e-12 * extent_;
  for (int n = 0; n < nodeCount_; ++n) {
    if (distance(point(n), center) <= guard) out.push_back(n);
  }
  return out;
}

Grid build_torus(int dim, double extent, int resolution) {
  return Grid(dim, extent, resolution);
}

std::vector<Cell> cell_cover(const Grid& grid, double R, double T1, double T2,
                             double pitch) {
  if (!(R > 0.0)) throw std::invalid_argument("cell_cover: R must be positive");
  if (!(T1 > 0.0 && T1 < T2)) {
    throw std::invalid_argument("cell_cover: need 0 < T1 < T2");
  }
  if (!(pitch > 0.0)) {
    throw std::invalid_argument("cell_cover: pitch must be positive");
  }
  const double L = grid.extent();
  const int perAxis = static_cast<int>(std::lround(L / pitch));
  if (perAxis < 1 || std::abs(perAxis * pitch - L) > 1e-9 * L) {
    throw std::invalid_argument(
        "cell_cover: pitch must divide the torus extent");
  }
  if (2.0 * R < pitch * (1.0 - 1e-12)) {
    throw std::invalid_argument(
        "cell_cover: cover fails, need 2R >= pitch so inner balls can cover");
  }

  std::vector<Cell> cells;
  if (grid.dim() == 1) {
    cells.reserve(perAxis);
    for (int i = 0; i < perAxis; ++i) {
      Cell c;
      c.center = {i * pitch, 0.0};
      c.innerRadius = R;
      c.outerRadius = 2.0 * R;
      c.timeHalfWidthInner = T1;
      c.timeHalfWidthOuter = T2;
      cells.push_back(c);
    }
  } else {
    cells.reserve(perAxis * perAxis);
    for (int j = 0; j < perAxis; ++j) {
      for (int i = 0; i < perAxis; ++i) {
        Cell c;
        c.center = {i * pitch, j * pitch};
        c.innerRadius = R;
        c.outerRadius = 2.0 * R;
        c.timeHalfWidthInner = T1;
        c.timeHalfWidthOuter = T2;
        cells.push_back(c);
      }
    }
  }

  // Exhaustive covering check: every node must lie in at least one inner ball.
  const double guard = R + 1e-12 * L;
  for (int n = 0; n < grid.nodeCount(); ++n) {
    bool covered = false;
    for (const Cell& c : cells) {
      if (grid.distance(grid.point(n), c.center) <= guard) {
        covered = true;
        break;
      }
    }
    if (!covered) {
      throw std::invalid_argument(
          "cell_cover: cover fails, node " + std::to_string(n) +
          " is not inside any inner ball (increase R or decrease pitch)");
    }
  }
  return cells;
}

CoefficientSpec CoefficientSpec::constant(double kappa, double gxx, double gxy,
                                          double gyy) {
  CoefficientSpec s;
  s.kind = Kind::Constant;
  s.kappa0 = kappa;
  s.g0xx = gxx;
  s.g0xy = gxy;
  s.g0yy = gyy;
  return s;
}

CoefficientSpec CoefficientSpec::smoothPeriodic(double kappaBase,
                                                double kappaAmp,
                                                int kappaHarmonic, double gBase,
                                                double gAmp, int gHarmonic,
                                                double gCrossAmp) {
  CoefficientSpec s;
  s.kind = Kind::SmoothPeriodic;
  s.kappaBase = kappaBase;
  s.kappaAmp = kappaAmp;
  s.kappaHarmonic = kappaHarmonic;
  s.gBase = gBase;
  s.gAmp = gAmp;
  s.gHarmonic = gHarmonic;
  s.gCrossAmp = gCrossAmp;
  return s;
}

CoefficientSpec CoefficientSpec::piecewiseLipschitz(double kappaMin,
                                                    double kappaMax,
                                                    double gMin, double gMax) {
  CoefficientSpec s;
  s.kind = Kind::PiecewiseLipschitz;
  s.kappaMin = kappaMin;
  s.kappaMax = kappaMax;
  s.gMin = gMin;
  s.gMax = gMax;
  return s;
}

namespace {

// Smallest eigenvalue of the symmetric 2x2 matrix [[gxx, gxy], [gxy, gyy]].
double minEig2x2(double gxx, double gxy, double gyy) {
  double tr = gxx + gyy;
  double disc = std::hypot(gxx - gyy, 2.0 * gxy);
  return 0.5 * (tr - disc);
}

// Periodic tent: 0 at x1 = 0, 1 at x1 = L/2, linear in between.
double tent(double x, double L) {
  double d = std::fmod(std::abs(x), L);
  d = std::min(d, L - d);
  return 2.0 * d / L;
}

}  // namespace

CoefficientField make_coefficient_field(const Grid& grid,
                                        Eigen::VectorXd kappa,
                                        Eigen::VectorXd gxx,
                                        Eigen::VectorXd gxy,
                                        Eigen::VectorXd gyy) {
  const int n = grid.nodeCount();
  if (kappa.size() != n || gxx.size() != n || gxy.size() != n ||
      gyy.size() != n) {
    throw std::invalid_argument(
        "make_coefficient_field: sample size does not match node count");
  }

  double a = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double gmin = grid.dim() == 1 ? gxx[i] : minEig2x2(gxx[i], gxy[i], gyy[i]);
    a = std::min(a, std::min(kappa[i], gmin));
  }
  if (!(a > 0.0)) {
    throw std::invalid_argument(
        "make_coefficient_field: ellipticity violated (kappa or the metric "
        "degenerates at some node)");
  }

  // Discrete Lipschitz certificate over axis-adjacent pairs, wrap included.
  const double h = grid.spacing();
  double A = 0.0;
  auto quotients = [&](int p, int q) {
    A = std::max(A, std::abs(kappa[p] - kappa[q]) / h);
    A = std::max(A, std::abs(gxx[p] - gxx[q]) / h);
    if (grid.dim() == 2) {
      A = std::max(A, std::abs(gxy[p] - gxy[q]) / h);
      A = std::max(A, std::abs(gyy[p] - gyy[q]) / h);
    }
  };
  const int N = grid.resolution();
  if (grid.dim() == 1) {
    for (int i = 0; i < N; ++i) quotients(i, grid.wrap(i + 1));
  } else {
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) {
        int p = grid.nodeIndex(i, j);
        quotients(p, grid.nodeIndex(i + 1, j));
        quotients(p, grid.nodeIndex(i, j + 1));
      }
    }
  }

  CoefficientField f;
  f.kappa = std::move(kappa);
  f.gxx = std::move(gxx);
  f.gxy = std::move(gxy);
  f.gyy = std::move(gyy);
  f.ellipticityLower = a;
  f.lipschitzBound = A;
  return f;
}

CoefficientField sample_coefficients(const CoefficientSpec& spec,
                                     const Grid& grid) {
  const int n = grid.nodeCount();
  const double L = grid.extent();
  const double twoPi = 2.0 * M_PI;
  Eigen::VectorXd kappa(n), gxx(n), gxy(n), gyy(n);
  gxy.setZero();
  gyy.setZero();

  switch (spec.kind) {
    case CoefficientSpec::Kind::Constant:
      kappa.setConstant(spec.kappa0);
      gxx.setConstant(spec.g0xx);
      if (grid.dim() == 2) {
        gxy.setConstant(spec.g0xy);
        gyy.setConstant(spec.g0yy);
      }
      break;
    case CoefficientSpec::Kind::SmoothPeriodic:
      for (int i = 0; i < n; ++i) {
        Eigen::Vector2d x = grid.point(i);
        double sk = std::sin(twoPi * spec.kappaHarmonic * x.x() / L);
        double sg = std::cos(twoPi * spec.gHarmonic * x.x() / L);
        if (grid.dim() == 2) {
          sk *= std::cos(twoPi * spec.kappaHarmonic * x.y() / L);
          sg *= std::cos(twoPi * spec.gHarmonic * x.y() / L);
        }
        kappa[i] = spec.kappaBase + spec.kappaAmp * sk;
        gxx[i] = spec.gBase + spec.gAmp * sg;
        if (grid.dim() == 2) {
          gyy[i] = gxx[i];
          gxy[i] = spec.gCrossAmp *
                   std::sin(twoPi * spec.gHarmonic * x.x() / L) *
                   std::sin(twoPi * spec.gHarmonic * x.y() / L);
        }
      }
      break;
    case CoefficientSpec::Kind::PiecewiseLipschitz:
      for (int i = 0; i < n; ++i) {
        Eigen::Vector2d x = grid.point(i);
        double t = tent(x.x(), L);
        kappa[i] = spec.kappaMin + (spec.kappaMax - spec.kappaMin) * t;
        gxx[i] = spec.gMin + (spec.gMax - spec.gMin) * t;
        if (grid.dim() == 2) gyy[i] = gxx[i];
      }
      break;
  }
  if (grid.dim() == 1) {
    gxy.setZero();
    gyy.setZero();
  }
  return make_coefficient_field(grid, std::move(kappa), std::move(gxx),
                                std::move(gxy), std::move(gyy));
}

}  // namespace speclab
