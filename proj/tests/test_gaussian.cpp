#include <cmath>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "gsheaf/error.hpp"
#include "gsheaf/gaussian.hpp"
#include "gsheaf/verify.hpp"

using namespace gsheaf;

namespace {

Gaussian g1(double mu, double var) { return Gaussian(Vector::Constant(1, mu), Matrix::Constant(1, 1, var)); }

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("PsdMatrix validates, clamps and is idempotent") {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1e-12;
  const PsdMatrix p(m);
  CHECK(p.min_eigenvalue() >= 0.0);
  CHECK(PsdMatrix(p.matrix()).matrix() == p.matrix());
  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(PsdMatrix{asym}, ShapeError);
  Matrix neg(2, 2);
  neg << 1.0, 0.0, 0.0, -0.1;
  CHECK_THROWS_AS(PsdMatrix{neg}, SingularityError);
  CHECK_THROWS_AS(Gaussian(Vector::Zero(2), Matrix::Identity(3, 3)), ShapeError);
}

TEST_CASE("pushforward examples and composition law") {
  Rng rng(1);
  const Gaussian g = random_field(1, 3, rng)[0];
  const Gaussian same = pushforward(Matrix::Identity(3, 3), g);
  CHECK(max_abs(same.mean - g.mean) == 0.0);
  CHECK(max_abs(same.cov.matrix() - g.cov.matrix()) < 1e-15);

  const Gaussian h = pushforward(Vector(Eigen::Vector2d(2, 1)).asDiagonal().toDenseMatrix(),
                                 Gaussian(Vector::Ones(2), Matrix::Identity(2, 2)));
  CHECK(h.mean(0) == 2.0);
  CHECK(h.mean(1) == 1.0);
  CHECK(h.cov.matrix()(0, 0) == 4.0);
  CHECK(h.cov.matrix()(1, 1) == 1.0);
  CHECK(h.cov.matrix()(0, 1) == 0.0);

  const Gaussian z = pushforward(Matrix::Zero(3, 3), g);
  CHECK(max_abs(z.mean) == 0.0);
  CHECK(max_abs(z.cov.matrix()) == 0.0);

  for (int i = 0; i < 20; ++i) {
    const Matrix a = Matrix::Random(3, 3), b = Matrix::Random(3, 3);
    const Gaussian x = random_field(1, 3, rng)[0];
    const Gaussian lhs = pushforward(b, pushforward(a, x));
    const Gaussian rhs = pushforward(b * a, x);
    CHECK(max_abs(lhs.mean - rhs.mean) < 1e-10);
    CHECK(max_abs(lhs.cov.matrix() - rhs.cov.matrix()) < 1e-10);
  }
  CHECK_THROWS_AS(pushforward(Matrix::Identity(2, 2), g), ShapeError);
  const Gaussian rect = pushforward_linear(Matrix::Ones(1, 3), g);
  CHECK(rect.dim() == 1);
  CHECK(rect.mean(0) == doctest::Approx(g.mean.sum()));
}

TEST_CASE("convolve examples and algebra") {
  const Gaussian a = convolve({g1(0, 1), g1(0, 1)});
  CHECK(a.mean(0) == 0.0);
  CHECK(a.cov.matrix()(0, 0) == 2.0);
  const Gaussian b = convolve({g1(1, 2), g1(2, 3), g1(-3, 5)});
  CHECK(b.mean(0) == 0.0);
  CHECK(b.cov.matrix()(0, 0) == 10.0);
  const Gaussian c = convolve({g1(1.5, 0.25)});
  CHECK(c.mean(0) == 1.5);
  CHECK(c.cov.matrix()(0, 0) == 0.25);

  Rng rng(2);
  const GaussianField f = random_field(3, 2, rng);
  const Gaussian ab_c = convolve({convolve({f[0], f[1]}), f[2]});
  const Gaussian a_bc = convolve({f[0], convolve({f[1], f[2]})});
  const Gaussian cba = convolve({f[2], f[1], f[0]});
  CHECK(max_abs(ab_c.mean - a_bc.mean) < 1e-12);
  CHECK(max_abs(ab_c.cov.matrix() - a_bc.cov.matrix()) < 1e-12);
  CHECK(max_abs(ab_c.cov.matrix() - cba.cov.matrix()) < 1e-12);
  CHECK_THROWS_AS(convolve({f[0], g1(0, 1)}), ShapeError);
}

TEST_CASE("kl_divergence") {
  CHECK(kl_divergence(g1(1, 1), g1(1, 1)) == doctest::Approx(0.0));
  CHECK(kl_divergence(g1(1, 1), g1(0, 1)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(kl_divergence(g1(0, 1), g1(0, 1e-20)), SingularityError);
  // Closed form for scalars: ln(s_q / s_p) + (s_p^2 + (m_p - m_q)^2) / (2 s_q^2) - 1/2.
  const double oracle = std::log(2.0 / 1.0) + (1.0 + 9.0) / (2.0 * 4.0) - 0.5;
  CHECK(kl_divergence(g1(3, 1), g1(0, 4)) == doctest::Approx(oracle).epsilon(1e-14));
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const GaussianField f = random_field(2, 3, rng);
    CHECK(kl_divergence(f[0], f[1]) >= 0.0);
  }
}

TEST_CASE("bures_w2 examples and metric axioms") {
  CHECK(bures_w2(g1(0, 1), g1(3, 1)) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(bures_w2(g1(0, 1), g1(0, 4)) == doctest::Approx(1.0).epsilon(1e-14));
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const GaussianField f = random_field(3, 3, rng);
    CHECK(w2_squared(f[0], f[0]) < 1e-12);
    CHECK(std::abs(bures_w2(f[0], f[1]) - bures_w2(f[1], f[0])) < 1e-8);
    CHECK(bures_w2(f[0], f[2]) <= bures_w2(f[0], f[1]) + bures_w2(f[1], f[2]) + 1e-6);
    CHECK(w2_squared(f[0], f[1]) == doctest::Approx(std::pow(bures_w2(f[0], f[1]), 2)).epsilon(1e-10));
  }
  // Commuting covariances reduce to the sum of squared square-root differences.
  Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
  a.diagonal() << 1.0, 9.0;
  b.diagonal() << 4.0, 1.0;
  CHECK(bures_squared(PsdMatrix(a), PsdMatrix(b)) == doctest::Approx(1.0 + 4.0).epsilon(1e-12));
}

TEST_CASE("psd_sqrt") {
  CHECK(max_abs(psd_sqrt(PsdMatrix::identity(3)).matrix() - Matrix::Identity(3, 3)) < 1e-14);
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 4.0, 9.0;
  const Matrix r = psd_sqrt(PsdMatrix(d)).matrix();
  CHECK(r(0, 0) == doctest::Approx(2.0));
  CHECK(r(1, 1) == doctest::Approx(3.0));
  CHECK(std::abs(r(0, 1)) < 1e-14);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const Matrix b = Matrix::Random(4, 4);
    const Matrix s = b.transpose() * b;
    const Matrix root = psd_sqrt(PsdMatrix(s)).matrix();
    CHECK((root * root - s).norm() / s.norm() < 1e-8);
    CHECK(max_abs(root - root.transpose()) < 1e-12);
  }
}

TEST_CASE("sample and mle_fit") {
  Rng rng(6);
  const Gaussian degenerate(Vector(Eigen::Vector2d(1, -2)), Matrix::Zero(2, 2));
  const SampleSet s0 = sample(degenerate, 5, rng);
  for (int t = 0; t < 5; ++t) CHECK(max_abs(s0.rows.row(t).transpose() - degenerate.mean) == 0.0);

  const SampleSet big = sample(Gaussian(Vector::Zero(2), Matrix::Identity(2, 2)), 50000, rng);
  const Vector mean = big.rows.colwise().mean();
  CHECK(std::abs(mean(0)) < 4.0 / std::sqrt(50000.0));
  CHECK(std::abs(mean(1)) < 4.0 / std::sqrt(50000.0));

  Rng r1(42), r2(42);
  const Gaussian g(Vector(Eigen::Vector2d(0.5, 1)), Matrix::Identity(2, 2) * 0.7);
  CHECK(sample(g, 10, r1).rows == sample(g, 10, r2).rows);

  SampleSet two{Matrix(2, 2)};
  two.rows << 0, 0, 2, 0;
  const Gaussian fit = mle_fit(two);
  CHECK(fit.mean(0) == 1.0);
  CHECK(fit.mean(1) == 0.0);
  CHECK(fit.cov.matrix()(0, 0) == 1.0);
  CHECK(fit.cov.matrix()(1, 1) == 0.0);
  CHECK(fit.cov.matrix()(0, 1) == 0.0);

  SampleSet flat{Matrix::Constant(4, 3, 2.5)};
  CHECK(max_abs(mle_fit(flat).cov.matrix()) == 0.0);
  CHECK_THROWS_AS(mle_fit(SampleSet{Matrix::Zero(1, 2)}), ParameterError);

  Matrix c(2, 2);
  c << 1.0, 0.3, 0.3, 0.8;
  const Gaussian unit(Vector(Eigen::Vector2d(0.2, -0.4)), c);
  CHECK(bures_w2(mle_fit(sample(unit, 100000, rng)), unit) < 0.05);
}
