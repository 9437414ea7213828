#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>

#include "speclab/grid.hpp"

namespace speclab {

/// Discrete divergence-form operator
///
///   -Δ u = -(1/κ) Σ_ij ∂_i g^{ij} κ ∂_j u
///
/// on the periodic lattice, self-adjoint in the κ-weighted inner product
/// ⟨u,v⟩_κ = Σ_i κ_i h^d u_i v_i. The operator is assembled through its
/// bilinear form: diagonal metric entries contribute face fluxes with
/// arithmetically averaged g^{aa}κ, the 2-D off-diagonal entry contributes
/// corner terms built from the 4-point cross-derivative average. Every
/// contribution enters the form symmetrically, so matrix = W^{-1} form with
/// form = formᵀ and W = diag(κ h^d); constants are in the kernel exactly.
struct EllipticOperator {
  Eigen::SparseMatrix<double> matrix;  // -Δ acting on node vectors
  Eigen::SparseMatrix<double> form;    // symmetric PSD bilinear form
  Eigen::VectorXd weight;              // κ_i h^d, the discrete measure κ dx
  double ellipticityLower = 0.0;       // a, inherited from the field
  double lipschitzBound = 0.0;         // A, inherited from the field

  /// Max absolute row sum of matrix; the scale used in residual tests.
  double infinityNorm() const;
};

EllipticOperator assemble(const Grid& grid, const CoefficientField& coeffs);

/// Full eigensystem of -Δ: eigenvalues λ²_k ascending (clamped at 0),
/// frequencies λ_k = sqrt(λ²_k), and a κ-orthonormal mode basis.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;  // λ²_k, nondecreasing
  Eigen::VectorXd frequencies;  // λ_k
  Eigen::MatrixXd modes;        // column k is e_k, ⟨e_j,e_k⟩_κ = δ_jk
  Eigen::VectorXd weight;       // κ_i h^d

  int size() const { return static_cast<int>(eigenvalues.size()); }

  double kappaInner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    return u.cwiseProduct(weight).dot(v);
  }
  double kappaNorm(const Eigen::VectorXd& u) const {
    return std::sqrt(std::max(0.0, kappaInner(u, u)));
  }

  /// Modal coefficients c_k = ⟨u, e_k⟩_κ.
  Eigen::VectorXd coefficients(const Eigen::VectorXd& u) const {
    return modes.transpose() * weight.cwiseProduct(u);
  }
  Eigen::VectorXd synthesize(const Eigen::VectorXd& c) const {
    return modes.leftCols(c.size()) * c;
  }

  /// Number of modes with frequency λ_k <= mu, with a small guard so that
  /// an eigenfrequency landing exactly on mu is kept despite rounding and
  /// the near-zero constant mode belongs to Pi_0.
  int modesBelow(double mu) const;

  double maxFrequency() const {
    return frequencies.size() ? frequencies[frequencies.size() - 1] : 0.0;
  }
};

/// Dense eigensolve after the diagonal symmetrization
/// S = W^{1/2} (-Δ) W^{-1/2}; throws if the node count exceeds denseCap.
SpectralDecomposition eigendecompose(const EllipticOperator& op,
                                     int denseCap = 4096);

using ScalarFunction = std::function<double(double)>;

/// φ(√-Δ) u = Σ_k φ(λ_k) ⟨u,e_k⟩_κ e_k.
Eigen::VectorXd apply_function(const SpectralDecomposition& dec,
                               const ScalarFunction& phi,
                               const Eigen::VectorXd& u);

/// Spectral projector Π_mu, the indicator case of apply_function.
Eigen::VectorXd project_below(const SpectralDecomposition& dec, double mu,
                              const Eigen::VectorXd& u);

struct BoundReport {
  double worstRatio = 0.0;  // max over trials of ‖φ(√-Δ)Π_mu u‖ / (sup|φ| ‖u‖)
  double supPhi = 0.0;      // sup over retained λ_k <= mu of |φ(λ_k)|
  int trials = 0;
  bool pass = false;
};

/// Checks ‖φ(√-Δ) Π_mu u‖_κ <= sup_{[0,mu]} |φ| ‖u‖_κ on random u, the sup
/// taken over the retained eigenfrequencies.
BoundReport verify_bound(const SpectralDecomposition& dec,
                         const ScalarFunction& phi, double mu, int trials,
                         unsigned long long seed, double tolerance = 1e-10);

}  // namespace speclab
