#include "speclab/operator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace speclab {

double EllipticOperator::infinityNorm() const {
  Eigen::VectorXd rowSums = Eigen::VectorXd::Zero(matrix.rows());
  for (int k = 0; k < matrix.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it) {
      rowSums[it.row()] += std::abs(it.value());
    }
  }
  return rowSums.size() ? rowSums.maxCoeff() : 0.0;
}

EllipticOperator assemble(const Grid& grid, const CoefficientField& coeffs) {
  const int n = grid.nodeCount();
  const int N = grid.resolution();
  const double h = grid.spacing();
  const double hd = grid.cellVolume();
  // Face stiffness scale: w_face * h^{d-2} turns squared face differences
  // into the discrete Dirichlet energy ∫ gκ |∇u|².
  const double faceScale = hd / (h * h);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(n) * (grid.dim() == 1 ? 3 : 12));

  auto addFace = [&](int p, int q, double w) {
    const double c = w * faceScale;
    trips.emplace_back(p, p, c);
    trips.emplace_back(q, q, c);
    trips.emplace_back(p, q, -c);
    trips.emplace_back(q, p, -c);
  };

  if (grid.dim() == 1) {
    for (int i = 0; i < N; ++i) {
      int p = i, q = grid.wrap(i + 1);
      double w = 0.5 * (coeffs.gxx[p] * coeffs.kappa[p] +
                        coeffs.gxx[q] * coeffs.kappa[q]);
      addFace(p, q, w);
    }
  } else {
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) {
        int p = grid.nodeIndex(i, j);
        int px = grid.nodeIndex(i + 1, j);
        int py = grid.nodeIndex(i, j + 1);
        addFace(p, px, 0.5 * (coeffs.gxx[p] * coeffs.kappa[p] +
                              coeffs.gxx[px] * coeffs.kappa[px]));
        addFace(p, py, 0.5 * (coeffs.gyy[p] * coeffs.kappa[p] +
                              coeffs.gyy[py] * coeffs.kappa[py]));
      }
    }
    // Cross terms: corner-averaged gxy*κ acting on the 4-point averaged
    // derivatives D_x, D_y at each dual corner (i+1/2, j+1/2).
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) {
        int n00 = grid.nodeIndex(i, j);
        int n10 = grid.nodeIndex(i + 1, j);
        int n01 = grid.nodeIndex(i, j + 1);
        int n11 = grid.nodeIndex(i + 1, j + 1);
        double b = 0.25 * (coeffs.gxy[n00] * coeffs.kappa[n00] +
                           coeffs.gxy[n10] * coeffs.kappa[n10] +
                           coeffs.gxy[n01] * coeffs.kappa[n01] +
                           coeffs.gxy[n11] * coeffs.kappa[n11]);
        if (b == 0.0) continue;
        // D_x = Σ cx_k u_k / (2h), D_y = Σ cy_k u_k / (2h) on the corner's
        // four nodes; the form adds b h² (D_x u D_y v + D_y u D_x v).
        const int idx[4] = {n00, n10, n01, n11};
        const double cx[4] = {-1.0, 1.0, -1.0, 1.0};
        const double cy[4] = {-1.0, -1.0, 1.0, 1.0};
        const double scale = b * hd / (4.0 * h * h);
        for (int r = 0; r < 4; ++r) {
          for (int c = 0; c < 4; ++c) {
            double v = scale * (cx[r] * cy[c] + cy[r] * cx[c]);
            if (v != 0.0) trips.emplace_back(idx[r], idx[c], v);
          }
        }
      }
    }
  }

  EllipticOperator op;
  op.form.resize(n, n);
  op.form.setFromTriplets(trips.begin(), trips.end());
  op.weight = coeffs.kappa * hd;
  op.ellipticityLower = coeffs.ellipticityLower;
  op.lipschitzBound = coeffs.lipschitzBound;

  Eigen::VectorXd invW = op.weight.cwiseInverse();
  op.matrix = invW.asDiagonal() * op.form;
  return op;
}

SpectralDecomposition eigendecompose(const EllipticOperator& op, int denseCap) {
  const int n = static_cast<int>(op.weight.size());
  if (n > denseCap) {
    throw std::invalid_argument(
        "eigendecompose: node count " + std::to_string(n) +
        " exceeds the dense-solver cap " + std::to_string(denseCap));
  }
  Eigen::VectorXd sqrtW = op.weight.cwiseSqrt();
  Eigen::VectorXd invSqrtW = sqrtW.cwiseInverse();

  Eigen::MatrixXd S = Eigen::MatrixXd(op.form);
  S = invSqrtW.asDiagonal() * S * invSqrtW.asDiagonal();
  S = 0.5 * (S + S.transpose()).eval();  // scrub rounding asymmetry

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecompose: dense eigensolver failed");
  }

  SpectralDecomposition dec;
  dec.eigenvalues = solver.eigenvalues().cwiseMax(0.0);
  dec.frequencies = dec.eigenvalues.cwiseSqrt();
  dec.modes = invSqrtW.asDiagonal() * solver.eigenvectors();
  dec.weight = op.weight;
  return dec;
}

int SpectralDecomposition::modesBelow(double mu) const {
  if (mu < 0.0) return 0;
  // The square root turns eigensolver rounding near lambda^2 = 0 into
  // frequencies of order sqrt(eps)*lambda_max; the additive slack keeps the
  // constant mode inside Pi_0 despite it.
  const double cutoff = mu * (1.0 + 1e-12) + 1e-7 * maxFrequency();
  int lo = 0, hi = static_cast<int>(frequencies.size());
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (frequencies[mid] <= cutoff) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

Eigen::VectorXd apply_function(const SpectralDecomposition& dec,
                               const ScalarFunction& phi,
                               const Eigen::VectorXd& u) {
  Eigen::VectorXd c = dec.coefficients(u);
  for (int k = 0; k < c.size(); ++k) c[k] *= phi(dec.frequencies[k]);
  return dec.modes * c;
}

Eigen::VectorXd project_below(const SpectralDecomposition& dec, double mu,
                              const Eigen::VectorXd& u) {
  const int m = dec.modesBelow(mu);
  if (m == 0) return Eigen::VectorXd::Zero(u.size());
  Eigen::VectorXd c = dec.coefficients(u);
  return dec.modes.leftCols(m) * c.head(m);
}

BoundReport verify_bound(const SpectralDecomposition& dec,
                         const ScalarFunction& phi, double mu, int trials,
                         unsigned long long seed, double tolerance) {
  if (trials < 1) throw std::invalid_argument("verify_bound: trials >= 1");
  const int m = dec.modesBelow(mu);

  BoundReport rep;
  rep.trials = trials;
  for (int k = 0; k < m; ++k) {
    rep.supPhi = std::max(rep.supPhi, std::abs(phi(dec.frequencies[k])));
  }
  if (m == 0 || rep.supPhi == 0.0) {
    rep.pass = true;  // φ Π_mu u vanishes identically
    return rep;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = dec.size();
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u[i] = normal(rng);
    double nu = dec.kappaNorm(u);
    if (nu == 0.0) continue;
    Eigen::VectorXd c = dec.coefficients(u).head(m);
    for (int k = 0; k < m; ++k) c[k] *= phi(dec.frequencies[k]);
    double nv = std::sqrt(std::max(0.0, c.squaredNorm()));
    rep.worstRatio = std::max(rep.worstRatio, nv / (rep.supPhi * nu));
  }
  rep.pass = rep.worstRatio <= 1.0 + tolerance;
  return rep;
}

}  // namespace speclab
