#include <cmath>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "gsheaf/error.hpp"
#include "gsheaf/sheaf.hpp"
#include "gsheaf/verify.hpp"

using namespace gsheaf;

namespace {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

CovField covs(const GaussianField& f) {
  CovField out;
  for (const Gaussian& g : f) out.push_back(g.cov);
  return out;
}

// Dense coboundary oracle: row block e holds F_u at u and -F_v at v.
Matrix dense_coboundary(const Graph& g, const RestrictionMapSet& maps) {
  const int d = maps.dim();
  Matrix delta = Matrix::Zero(g.num_edges() * d, g.num_nodes() * d);
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    delta.block(e * d, ed.u * d, d, d) = maps.map(e, ed.u);
    delta.block(e * d, ed.v * d, d, d) = -maps.map(e, ed.v);
  }
  return delta;
}

Matrix inv_sqrt(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  Vector ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev(i) = ev(i) > 1e-10 ? 1.0 / std::sqrt(ev(i)) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Matrix dense_normalized(const Graph& g, const RestrictionMapSet& maps) {
  const int d = maps.dim(), n = g.num_nodes();
  const Matrix delta = dense_coboundary(g, maps);
  const Matrix l = delta.transpose() * delta;
  Matrix dis = Matrix::Zero(n * d, n * d);
  for (int v = 0; v < n; ++v) dis.block(v * d, v * d, d, d) = inv_sqrt(l.block(v * d, v * d, d, d));
  return dis * l * dis;
}

Graph path3() { return Graph::from_edges(3, {{0, 1}, {1, 2}}); }

Graph cycle(int n) {
  std::vector<std::pair<int, int>> e;
  for (int v = 0; v < n; ++v) e.emplace_back(v, (v + 1) % n);
  return Graph::from_edges(n, e);
}

// Orthogonal sheaf gauge-equivalent to the constant sheaf: F_{v<=e} = R_e Q_v.
struct GaugeSheaf {
  RestrictionMapSet maps;
  std::vector<Matrix> q;
};

GaugeSheaf gauge_sheaf(const Graph& g, int d, Rng& rng) {
  GaugeSheaf s;
  for (int v = 0; v < g.num_nodes(); ++v) s.q.push_back(random_orthogonal(d, rng));
  std::vector<Matrix> maps;
  for (const Edge& e : g.edges()) {
    const Matrix r = random_orthogonal(d, rng);
    maps.push_back(r * s.q[e.u]);
    maps.push_back(r * s.q[e.v]);
  }
  s.maps = RestrictionMapSet(g, d, MapClass::orthogonal, maps);
  return s;
}

}  // namespace

TEST_CASE("RestrictionMapSet validation") {
  const Graph g = path3();
  CHECK_THROWS_AS(RestrictionMapSet(g, 2, MapClass::general, {Matrix::Identity(2, 2)}), ShapeError);
  Matrix off = Matrix::Identity(2, 2);
  off(0, 1) = 0.5;
  CHECK_THROWS(RestrictionMapSet(g, 2, MapClass::diagonal, std::vector<Matrix>(4, off)));
  CHECK_THROWS(RestrictionMapSet(g, 2, MapClass::orthogonal, std::vector<Matrix>(4, 2.0 * Matrix::Identity(2, 2))));
  const RestrictionMapSet id = RestrictionMapSet::identity(g, 2);
  CHECK(id.map(1, 2) == Matrix::Identity(2, 2));
  CHECK_THROWS_AS(id.map(0, 2), ShapeError);
  CHECK(map_class_from_string("orth") == MapClass::orthogonal);
  CHECK(map_class_from_string(to_string(MapClass::general)) == MapClass::general);
}

TEST_CASE("assemble examples") {
  const Graph p3 = path3();
  const SheafOperators c = SheafOperators::assemble(p3, RestrictionMapSet::identity(p3, 1));
  Matrix expected(3, 3);
  expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK(c.dense_laplacian(false) == expected);

  const Graph edge = Graph::from_edges(2, {{0, 1}});
  const SheafOperators e2 = SheafOperators::assemble(edge, RestrictionMapSet::identity(edge, 2));
  Matrix block(4, 4);
  block << Matrix::Identity(2, 2), -Matrix::Identity(2, 2), -Matrix::Identity(2, 2), Matrix::Identity(2, 2);
  CHECK(e2.dense_laplacian(false) == block);

  Rng rng(7);
  const Graph g = random_connected_graph(6, 5, rng);
  const SheafOperators o = SheafOperators::assemble(g, random_maps(g, 3, MapClass::orthogonal, rng));
  for (int v = 0; v < 6; ++v) {
    CHECK(max_abs(o.degree_block(v) - g.degree(v) * Matrix::Identity(3, 3)) < 1e-12);
    CHECK(max_abs(o.normalized_diagonal_block(v) - Matrix::Identity(3, 3)) < 1e-12);
  }
  CHECK_THROWS_AS(SheafOperators::assemble(Graph::from_edges(3, {{0, 1}}),
                                           RestrictionMapSet::identity(Graph::from_edges(3, {{0, 1}}), 1)),
                  DegeneracyError);
}

TEST_CASE("assembled blocks match a dense coboundary oracle") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 7, d = 1 + trial % 3;
    const Graph g = random_connected_graph(n, n, rng);
    const RestrictionMapSet maps = random_maps(g, d, static_cast<MapClass>(trial % 3), rng);
    const SheafOperators ops = SheafOperators::assemble(g, maps);
    const Matrix delta = dense_coboundary(g, maps);
    CHECK(max_abs(ops.dense_laplacian(false) - delta.transpose() * delta) < 1e-12);
    CHECK(max_abs(ops.dense_laplacian(true) - dense_normalized(g, maps)) < 1e-10);
    for (const Edge& e : g.edges()) {
      CHECK(max_abs(ops.off_diagonal_block(e.v, e.u) - ops.off_diagonal_block(e.u, e.v).transpose()) == 0.0);
    }
    // Sum of the parts reproduces the diagonal blocks.
    for (int v = 0; v < n; ++v) {
      Matrix sum = Matrix::Zero(d, d), nsum = Matrix::Zero(d, d);
      for (int i = 0; i < ops.num_parts(); ++i) {
        sum += ops.part(i, v);
        nsum += ops.normalized_part(i, v);
      }
      CHECK(max_abs(sum - ops.degree_block(v)) < 1e-10);
      CHECK(max_abs(nsum - ops.normalized_diagonal_block(v)) < 1e-10);
    }
    // PSD quadratic forms.
    const Matrix l = ops.dense_laplacian(false);
    for (int k = 0; k < 5; ++k) {
      const Vector x = Vector::Random(n * d);
      CHECK(x.dot(l * x) >= -1e-9);
    }
  }
}

TEST_CASE("apply_mean_laplacian") {
  const Graph p3 = path3();
  const SheafOperators c = SheafOperators::assemble(p3, RestrictionMapSet::identity(p3, 1));
  Matrix x(3, 1);
  x << 1, 0, 0;
  const Matrix y = apply_mean_laplacian(c, x, false);
  CHECK(y(0, 0) == 1.0);
  CHECK(y(1, 0) == -1.0);
  CHECK(y(2, 0) == 0.0);
  CHECK(max_abs(apply_mean_laplacian(c, Matrix::Constant(3, 2, 4.0), false)) == 0.0);
  CHECK(max_abs(apply_mean_laplacian(c, Matrix::Zero(3, 2), true)) == 0.0);
  CHECK_THROWS_AS(apply_mean_laplacian(c, Matrix::Zero(4, 1), false), ShapeError);

  Rng rng(9);
  const Graph g = random_connected_graph(7, 6, rng);
  const SheafOperators ops = SheafOperators::assemble(g, random_maps(g, 2, MapClass::general, rng));
  const Matrix xs = Matrix::Random(14, 3);
  CHECK(max_abs(apply_mean_laplacian(ops, xs, true) - ops.dense_laplacian(true) * xs) < 1e-12);
  CHECK(max_abs(apply_mean_laplacian(ops, xs, false) - ops.dense_laplacian(false) * xs) < 1e-12);
}

TEST_CASE("coboundary_cov examples") {
  const Graph edge = Graph::from_edges(2, {{0, 1}});
  const SheafOperators id = SheafOperators::assemble(edge, RestrictionMapSet::identity(edge, 2));
  const CovField eye{PsdMatrix::identity(2), PsdMatrix::identity(2)};
  const CovCoboundary cb = coboundary_cov(id, Orientation::canonical(edge), eye);
  CHECK(max_abs(cb.edge[0].matrix() - 2.0 * Matrix::Identity(2, 2)) == 0.0);

  const RestrictionMapSet scalar(edge, 1, MapClass::general, {Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 1.0)});
  const SheafOperators s = SheafOperators::assemble(edge, scalar);
  const CovField sig{PsdMatrix(Matrix::Constant(1, 1, 1.0)), PsdMatrix(Matrix::Constant(1, 1, 3.0))};
  const CovCoboundary c2 = coboundary_cov(s, Orientation::canonical(edge), sig);
  CHECK(c2.edge[0].matrix()(0, 0) == 7.0);
  CHECK(c2.plus[0].matrix()(0, 0) == 4.0);
  CHECK(c2.minus[0].matrix()(0, 0) == 3.0);
  Orientation flipped = Orientation::canonical(edge);
  flipped.flip(0);
  const CovCoboundary c3 = coboundary_cov(s, flipped, sig);
  CHECK(c3.plus[0].matrix()(0, 0) == 3.0);
  CHECK(c3.edge[0].matrix()(0, 0) == 7.0);

  const CovField zero{PsdMatrix::zero(1), PsdMatrix::zero(1)};
  CHECK(coboundary_cov(s, Orientation::canonical(edge), zero).edge[0].matrix()(0, 0) == 0.0);
}

TEST_CASE("covariance Laplacian examples and routes") {
  const Graph edge = Graph::from_edges(2, {{0, 1}});
  const SheafOperators c = SheafOperators::assemble(edge, RestrictionMapSet::identity(edge, 1));
  const CovField sig{PsdMatrix(Matrix::Constant(1, 1, 1.0)), PsdMatrix(Matrix::Constant(1, 1, 2.0))};
  const CovField out = apply_cov_laplacian(c, sig, false);
  CHECK(out[0].matrix()(0, 0) == 3.0);
  CHECK(out[1].matrix()(0, 0) == 3.0);

  Rng rng(10);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 7, d = 1 + trial % 3;
    const Graph g = random_connected_graph(n, n, rng);
    const SheafOperators ops = SheafOperators::assemble(g, random_maps(g, d, static_cast<MapClass>(trial % 3), rng));
    GaussianField f = random_field(n, d, rng);
    // Rank-deficient inputs as well.
    f[0] = Gaussian(f[0].mean, random_psd(d, 1, rng));
    const CovField per_node = apply_cov_laplacian(ops, covs(f), false);
    const CovField split = cov_laplacian_decomposed(ops, covs(f), false);
    for (int v = 0; v < n; ++v) {
      CHECK(max_abs(per_node[v].matrix() - split[v].matrix()) < 1e-10 * std::max(1.0, max_abs(split[v].matrix())));
      CHECK(per_node[v].min_eigenvalue() >= -1e-9);
    }
    for (const PsdMatrix& m : apply_cov_laplacian(ops, covs(f), true)) CHECK(m.min_eigenvalue() >= -1e-9);
  }
}

TEST_CASE("Gaussian Laplacian against the distribution route") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 7, d = 1 + trial % 3;
    const Graph g = random_connected_graph(n, n, rng);
    const SheafOperators ops = SheafOperators::assemble(g, random_maps(g, d, static_cast<MapClass>(trial % 3), rng));
    const GaussianField f = random_field(n, d, rng);
    for (bool normalized : {false, true}) {
      const GaussianField a = apply_gaussian_laplacian(ops, f, normalized);
      const GaussianField b = distribution_laplacian(ops, f, normalized);
      for (int v = 0; v < n; ++v) {
        CHECK(max_abs(a[v].mean - b[v].mean) < 1e-10);
        CHECK(max_abs(a[v].cov.matrix() - b[v].cov.matrix()) < 1e-10);
      }
    }
    // Dirac field: the mean route is the matrix product with L_M and covariances vanish.
    GaussianField dirac;
    for (const Gaussian& x : f) dirac.emplace_back(x.mean, Matrix::Zero(d, d));
    const GaussianField r = distribution_laplacian(ops, dirac);
    Vector stacked(n * d);
    for (int v = 0; v < n; ++v) stacked.segment(v * d, d) = f[v].mean;
    const Vector lm = ops.dense_laplacian(false) * stacked;
    for (int v = 0; v < n; ++v) {
      CHECK(max_abs(r[v].mean - lm.segment(v * d, d)) < 1e-10);
      CHECK(max_abs(r[v].cov.matrix()) < 1e-12);
    }
    GaussianField zero(n, Gaussian(Vector::Zero(d), Matrix::Zero(d, d)));
    for (const Gaussian& z : distribution_laplacian(ops, zero)) CHECK(max_abs(z.mean) + max_abs(z.cov.matrix()) == 0.0);
  }
}

TEST_CASE("constant sheaf with a constant field") {
  Rng rng(12);
  const Graph g = random_connected_graph(9, 8, rng);
  const SheafOperators ops = SheafOperators::assemble(g, RestrictionMapSet::identity(g, 2));
  const Gaussian x = random_field(1, 2, rng)[0];
  const GaussianField f(9, x);
  const GaussianField out = apply_gaussian_laplacian(ops, f, false);
  for (int v = 0; v < 9; ++v) {
    CHECK(max_abs(out[v].mean) < 1e-12);
    CHECK(max_abs(out[v].cov.matrix() - 2.0 * g.degree(v) * x.cov.matrix()) < 1e-12);
  }
}

TEST_CASE("global sections and the equalizer") {
  const Graph tri = Graph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
  const SheafOperators id = SheafOperators::assemble(tri, RestrictionMapSet::identity(tri, 2));
  Rng rng(13);
  const Gaussian x = random_field(1, 2, rng)[0];
  const SectionReport same = is_global_section(id, GaussianField(3, x));
  CHECK(same.is_section);
  CHECK(same.max_residual == 0.0);
  GaussianField two(3, x);
  two[1] = Gaussian(x.mean, x.cov.matrix() + Matrix::Identity(2, 2));
  CHECK_FALSE(is_global_section(id, two).is_section);

  int non_sections = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + trial % 8, d = 1 + trial % 3;
    const Graph tree = random_connected_graph(n, 0, rng);
    const RestrictionMapSet maps = random_maps(tree, d, static_cast<MapClass>(trial % 3), rng);
    const SheafOperators ops = SheafOperators::assemble(tree, maps);
    const GaussianField s = propagate_section(tree, maps, trial % n, random_field(1, d, rng)[0]);
    const SectionReport r = is_global_section(ops, s, 1e-10);
    CHECK(r.is_section);
    CHECK(r.equalizer_residual <= 1e-8);

    // Random fields on graphs with cycles and invertible maps.
    const Graph g = random_connected_graph(n, n, rng);
    const SheafOperators o2 = SheafOperators::assemble(g, random_maps(g, d, static_cast<MapClass>(trial % 3), rng));
    const SectionReport bad = is_global_section(o2, random_field(n, d, rng));
    if (bad.cov_residual > 1e-3) {
      ++non_sections;
      CHECK(bad.equalizer_residual > 1e-6);
    }
  }
  CHECK(non_sections > 50);
}

TEST_CASE("transport and holonomy") {
  Rng rng(14);
  const Graph tri = Graph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
  const Gaussian x = random_field(1, 3, rng)[0];
  const RestrictionMapSet orth = random_maps(tri, 3, MapClass::orthogonal, rng);
  const Gaussian same = transport(tri, orth, {}, x);
  CHECK(max_abs(same.mean - x.mean) == 0.0);
  const Gaussian moved = transport(tri, orth, {0, 1}, x);
  CHECK(std::abs(moved.mean.norm() - x.mean.norm()) < 1e-9);
  Eigen::SelfAdjointEigenSolver<Matrix> a(x.cov.matrix()), b(moved.cov.matrix());
  CHECK(max_abs(a.eigenvalues() - b.eigenvalues()) < 1e-9);
  CHECK_THROWS_AS(transport(Graph::from_edges(3, {{0, 1}, {1, 2}}), RestrictionMapSet::identity(Graph::from_edges(3, {{0, 1}, {1, 2}}), 3), {0, 2}, x), PathError);

  const RestrictionMapSet id = RestrictionMapSet::identity(tri, 3);
  CHECK(holonomy(tri, id, {0, 1, 2, 0}) == Matrix::Identity(3, 3));
  const Gaussian back = transport(tri, id, {0, 1, 2, 0}, x);
  CHECK(max_abs(back.mean - x.mean) == 0.0);
  CHECK(max_abs(holonomy(tri, orth, {0, 1, 0}) - Matrix::Identity(3, 3)) < 1e-12);
  CHECK_THROWS_AS(holonomy(tri, orth, {0, 1, 2}), PathError);

  int nontrivial = 0;
  for (int i = 0; i < 20; ++i) {
    const RestrictionMapSet gen = random_maps(tri, 3, MapClass::general, rng);
    if ((holonomy(tri, gen, {0, 1, 2, 0}) - Matrix::Identity(3, 3)).norm() > 1e-6) ++nontrivial;
  }
  CHECK(nontrivial == 20);
}

TEST_CASE("Dirichlet energy") {
  Rng rng(15);
  const Graph g = random_connected_graph(10, 12, rng);
  const SheafOperators c = SheafOperators::assemble(g, RestrictionMapSet::identity(g, 1));
  CHECK(dirichlet_energy(c, Vector(Vector::Zero(10))) == 0.0);
  // D^{1/2} 1 spans the kernel of the normalized graph Laplacian.
  Vector harmonic(10);
  for (int v = 0; v < 10; ++v) harmonic(v) = 3.0 * std::sqrt(g.degree(v));
  CHECK(std::abs(dirichlet_energy(c, harmonic)) < 1e-10);
  const SheafOperators ops = SheafOperators::assemble(g, random_maps(g, 2, MapClass::general, rng));
  const Vector x = Vector::Random(20);
  const double e = dirichlet_energy(ops, x);
  CHECK(e >= 0.0);
  CHECK(dirichlet_energy(ops, Vector(2.5 * x)) == doctest::Approx(6.25 * e).epsilon(1e-12));
  CHECK(e == doctest::Approx(x.dot(ops.dense_laplacian(true) * x)).epsilon(1e-12));
  CHECK_THROWS_AS(dirichlet_energy(ops, Vector(Vector::Zero(3))), ShapeError);
}

TEST_CASE("Lyapunov energy") {
  const Graph edge = Graph::from_edges(2, {{0, 1}});
  const SheafOperators id = SheafOperators::assemble(edge, RestrictionMapSet::identity(edge, 1));
  const GaussianField f{Gaussian(Vector::Zero(1), Matrix::Constant(1, 1, 1.0)),
                        Gaussian(Vector::Zero(1), Matrix::Constant(1, 1, 4.0))};
  CHECK(lyapunov_energy(id, f) == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    // Regular graphs: the degree normalization is a common scalar.
    const Graph g = cycle(4 + trial % 5);
    const int d = 1 + trial % 3;
    const GaugeSheaf s = gauge_sheaf(g, d, rng);
    const SheafOperators ops = SheafOperators::assemble(g, s.maps);
    const Gaussian x = random_field(1, d, rng)[0];
    GaussianField section;
    for (const Matrix& q : s.q) section.push_back(pushforward(q.transpose(), x));
    CHECK(is_global_section(ops, section).is_section);
    CHECK(lyapunov_energy(ops, section) <= 1e-8);
    const GaussianField other = random_field(g.num_nodes(), d, rng);
    CHECK(is_global_section(ops, other).is_section == (lyapunov_energy(ops, other) <= 1e-8));

    GaussianField iso;
    for (int v = 0; v < g.num_nodes(); ++v) iso.emplace_back(other[v].mean, Matrix(Matrix::Identity(d, d) * (0.5 + v)));
    GaussianField scaled;
    for (const Gaussian& y : iso) scaled.push_back(pushforward(2.0 * Matrix::Identity(d, d), y));
    CHECK(lyapunov_energy(ops, scaled) == doctest::Approx(4.0 * lyapunov_energy(ops, iso)).epsilon(1e-8));
  }
}

TEST_CASE("orbit invariants") {
  Rng rng(17);
  const Gaussian x = random_field(1, 3, rng)[0];
  const OrbitReport id = orbit_invariants(Matrix::Identity(3, 3), x);
  CHECK(id.orthogonal);
  CHECK(id.stabilizes);
  CHECK(id.consistent);
  const OrbitReport rot = orbit_invariants(random_orthogonal(3, rng), x);
  CHECK(rot.norm_preserved);
  CHECK(rot.spectrum_preserved);
  CHECK_FALSE(rot.stabilizes);
  CHECK(rot.mean_norm_residual < 1e-9);

  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 2.0, 3.0;
  const Gaussian g(Vector::Ones(2), Matrix::Identity(2, 2));
  const Gaussian moved = pushforward(d, g);
  CHECK(moved.mean(0) == 2.0);
  CHECK(moved.mean(1) == 3.0);
  const OrbitReport diag = orbit_invariants(d, g);
  CHECK(diag.diagonal);
  CHECK_FALSE(diag.stabilizes);
  CHECK(diag.consistent);
}
