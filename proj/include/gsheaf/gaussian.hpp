#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

namespace gsheaf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Symmetric positive semidefinite matrix.
///
/// Construction symmetrizes the input and clamps a slightly negative
/// spectrum to zero. Inputs that are visibly asymmetric (relative 1e-10) or
/// whose smallest eigenvalue is below -1e-9 * max(1, largest eigenvalue) are
/// rejected with a ShapeError / SingularityError respectively.
class PsdMatrix {
 public:
  static constexpr double kSymmetryTol = 1e-10;
  static constexpr double kClampTol = 1e-9;

  PsdMatrix() = default;
  explicit PsdMatrix(const Matrix& m);

  static PsdMatrix zero(int d);
  static PsdMatrix identity(int d);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  operator const Matrix&() const { return m_; }

  double min_eigenvalue() const;

 private:
  Matrix m_;
};

struct Gaussian {
  Vector mean;
  PsdMatrix cov;

  Gaussian() = default;
  Gaussian(Vector mu, PsdMatrix sigma);
  Gaussian(Vector mu, const Matrix& sigma) : Gaussian(std::move(mu), PsdMatrix(sigma)) {}

  int dim() const { return static_cast<int>(mean.size()); }
};

/// A Gaussian per node, all of one dimension.
using GaussianField = std::vector<Gaussian>;

/// Throws ShapeError unless `field` has `n` entries of common dimension.
/// Returns that dimension (0 for an empty field).
int check_field(const GaussianField& field, int n);

/// T x d matrix of draws attributed to one node.
struct SampleSet {
  Matrix rows;

  int count() const { return static_cast<int>(rows.rows()); }
  int dim() const { return static_cast<int>(rows.cols()); }
};

/// N(A mu, A Sigma A^T) for a square A matching g.
Gaussian pushforward(const Matrix& a, const Gaussian& g);
/// Same for a rectangular map R^d -> R^m.
Gaussian pushforward_linear(const Matrix& a, const Gaussian& g);

/// Law of the sum of independent draws: means and covariances add.
Gaussian convolve(const std::vector<Gaussian>& gs);

/// KL(p || q) in nats. Requires q.cov positive definite (min eig > 1e-12).
double kl_divergence(const Gaussian& p, const Gaussian& q);

/// Squared Bures term tr(Sp + Sq - 2 (Sp^1/2 Sq Sp^1/2)^1/2).
double bures_squared(const PsdMatrix& sp, const PsdMatrix& sq);
/// Squared 2-Wasserstein distance between Gaussians.
double w2_squared(const Gaussian& p, const Gaussian& q);
/// 2-Wasserstein distance between Gaussians.
double bures_w2(const Gaussian& p, const Gaussian& q);

/// Principal square root via eigendecomposition (negative eigenvalues -> 0).
PsdMatrix psd_sqrt(const PsdMatrix& s);

SampleSet sample(const Gaussian& g, int count, Rng& rng);

/// Maximum-likelihood fit: sample mean and 1/T covariance.
Gaussian mle_fit(const SampleSet& samples);

}  // namespace gsheaf
