#include "gsheaf/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gsheaf/error.hpp"

namespace gsheaf {

PsdMatrix::PsdMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("PsdMatrix: matrix is not square");
  if (!m.allFinite()) throw NumericError("PsdMatrix: non-finite entry");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw ShapeError("PsdMatrix: matrix is not symmetric");
  }
  m_ = 0.5 * (m + m.transpose());
  if (m_.rows() == 0) return;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m_);
  const Vector& lambda = eig.eigenvalues();
  const double top = std::max(1.0, lambda.maxCoeff());
  if (lambda.minCoeff() < -kClampTol * top) {
    throw SingularityError("PsdMatrix: eigenvalue " + std::to_string(lambda.minCoeff()) +
                           " is not within clamp tolerance");
  }
  // Roundoff-level negatives are left alone so that projection is idempotent.
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * top;
  if (lambda.minCoeff() < -roundoff) {
    const Vector clamped = lambda.cwiseMax(0.0);
    Matrix r = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
    m_ = 0.5 * (r + r.transpose());
  }
}

PsdMatrix PsdMatrix::zero(int d) { return PsdMatrix(Matrix::Zero(d, d)); }

PsdMatrix PsdMatrix::identity(int d) { return PsdMatrix(Matrix::Identity(d, d)); }

double PsdMatrix::min_eigenvalue() const {
  if (m_.rows() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Matrix>(m_, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

Gaussian::Gaussian(Vector mu, PsdMatrix sigma) : mean(std::move(mu)), cov(std::move(sigma)) {
  if (mean.size() != cov.dim()) {
    throw ShapeError("Gaussian: mean length " + std::to_string(mean.size()) +
                     " != covariance dimension " + std::to_string(cov.dim()));
  }
}

int check_field(const GaussianField& field, int n) {
  if (static_cast<int>(field.size()) != n) {
    throw ShapeError("field has " + std::to_string(field.size()) + " entries, expected " +
                     std::to_string(n));
  }
  if (field.empty()) return 0;
  const int d = field.front().dim();
  for (const auto& g : field) {
    if (g.dim() != d) throw ShapeError("field has mixed dimensions");
  }
  return d;
}

Gaussian pushforward(const Matrix& a, const Gaussian& g) {
  if (a.rows() != a.cols()) throw ShapeError("pushforward: map is not square");
  return pushforward_linear(a, g);
}

Gaussian pushforward_linear(const Matrix& a, const Gaussian& g) {
  if (a.cols() != g.dim()) {
    throw ShapeError("pushforward: map has " + std::to_string(a.cols()) +
                     " columns, Gaussian has dimension " + std::to_string(g.dim()));
  }
  Matrix cov = a * g.cov.matrix() * a.transpose();
  return Gaussian(a * g.mean, PsdMatrix(0.5 * (cov + cov.transpose())));
}

Gaussian convolve(const std::vector<Gaussian>& gs) {
  if (gs.empty()) throw ParameterError("convolve: empty list");
  const int d = gs.front().dim();
  Vector mean = Vector::Zero(d);
  Matrix cov = Matrix::Zero(d, d);
  for (const auto& g : gs) {
    if (g.dim() != d) throw ShapeError("convolve: mixed dimensions");
    mean += g.mean;
    cov += g.cov.matrix();
  }
  return Gaussian(std::move(mean), PsdMatrix(cov));
}

double kl_divergence(const Gaussian& p, const Gaussian& q) {
  if (p.dim() != q.dim()) throw ShapeError("kl_divergence: dimension mismatch");
  const int d = p.dim();
  Eigen::SelfAdjointEigenSolver<Matrix> eq(q.cov.matrix());
  if (eq.eigenvalues().minCoeff() <= 1e-12) {
    throw SingularityError("kl_divergence: q covariance is singular");
  }
  const Matrix& v = eq.eigenvectors();
  const Vector inv = eq.eigenvalues().cwiseInverse();
  const Matrix q_inv = v * inv.asDiagonal() * v.transpose();
  const Vector diff = q.mean - p.mean;
  const double trace = (q_inv * p.cov.matrix()).trace();
  const double maha = diff.dot(q_inv * diff);
  const double logdet_q = eq.eigenvalues().array().log().sum();
  Eigen::SelfAdjointEigenSolver<Matrix> ep(p.cov.matrix(), Eigen::EigenvaluesOnly);
  if (ep.eigenvalues().minCoeff() <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double logdet_p = ep.eigenvalues().array().log().sum();
  return std::max(0.0, 0.5 * (trace + maha - d + logdet_q - logdet_p));
}

PsdMatrix psd_sqrt(const PsdMatrix& s) {
  if (s.dim() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s.matrix());
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Matrix r = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  return PsdMatrix(0.5 * (r + r.transpose()));
}

double bures_squared(const PsdMatrix& sp, const PsdMatrix& sq) {
  if (sp.dim() != sq.dim()) throw ShapeError("bures: dimension mismatch");
  const Matrix root_p = psd_sqrt(sp).matrix();
  Matrix middle = root_p * sq.matrix() * root_p;
  middle = 0.5 * (middle + middle.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(middle, Eigen::EigenvaluesOnly);
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::max(0.0, sp.matrix().trace() + sq.matrix().trace() - 2.0 * cross);
}

double w2_squared(const Gaussian& p, const Gaussian& q) {
  if (p.dim() != q.dim()) throw ShapeError("w2: dimension mismatch");
  return (p.mean - q.mean).squaredNorm() + bures_squared(p.cov, q.cov);
}

double bures_w2(const Gaussian& p, const Gaussian& q) { return std::sqrt(w2_squared(p, q)); }

SampleSet sample(const Gaussian& g, int count, Rng& rng) {
  if (count < 1) throw ParameterError("sample: count must be >= 1");
  const int d = g.dim();
  const Matrix root = psd_sqrt(g.cov).matrix();
  std::normal_distribution<double> normal(0.0, 1.0);
  SampleSet out{Matrix(count, d)};
  Vector z(d);
  for (int t = 0; t < count; ++t) {
    for (int i = 0; i < d; ++i) z[i] = normal(rng);
    out.rows.row(t) = (g.mean + root * z).transpose();
  }
  return out;
}

Gaussian mle_fit(const SampleSet& samples) {
  const int count = samples.count();
  if (count < 2) throw ParameterError("mle_fit: need at least 2 samples");
  if (!samples.rows.allFinite()) throw NumericError("mle_fit: non-finite sample");
  const Vector mean = samples.rows.colwise().mean().transpose();
  const Matrix centered = samples.rows.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(count);
  return Gaussian(mean, PsdMatrix(0.5 * (cov + cov.transpose())));
}

}  // namespace gsheaf
