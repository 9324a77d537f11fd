#include "gsheaf/sheaf.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "gsheaf/error.hpp"

namespace gsheaf {

std::string to_string(MapClass c) {
  switch (c) {
    case MapClass::diagonal:
      return "diagonal";
    case MapClass::orthogonal:
      return "orthogonal";
    case MapClass::general:
      return "general";
  }
  return "general";
}

MapClass map_class_from_string(const std::string& s) {
  if (s == "diagonal" || s == "diag") return MapClass::diagonal;
  if (s == "orthogonal" || s == "orth") return MapClass::orthogonal;
  if (s == "general" || s == "gen") return MapClass::general;
  throw ParameterError("unknown map class '" + s + "'");
}

RestrictionMapSet::RestrictionMapSet(const Graph& g, int d, MapClass cls, std::vector<Matrix> maps)
    : d_(d), cls_(cls), edges_(g.edges()), maps_(std::move(maps)) {
  if (d < 1) throw ParameterError("restriction maps: stalk dimension must be >= 1");
  if (maps_.size() != 2 * edges_.size()) {
    throw ShapeError("restriction maps: expected " + std::to_string(2 * edges_.size()) +
                     " incidence maps, got " + std::to_string(maps_.size()));
  }
  const Matrix eye = Matrix::Identity(d, d);
  for (const Matrix& f : maps_) {
    if (f.rows() != d || f.cols() != d) throw ShapeError("restriction maps: map is not d x d");
    if (cls == MapClass::diagonal) {
      Matrix off = f;
      off.diagonal().setZero();
      if (off.cwiseAbs().maxCoeff() != 0.0) {
        throw ParameterError("restriction maps: diagonal class map has off-diagonal entries");
      }
    } else if (cls == MapClass::orthogonal) {
      if ((f.transpose() * f - eye).norm() >= kOrthogonalTol) {
        throw ParameterError("restriction maps: orthogonal class map is not orthogonal");
      }
    }
  }
}

RestrictionMapSet RestrictionMapSet::identity(const Graph& g, int d) {
  std::vector<Matrix> maps(2 * static_cast<std::size_t>(g.num_edges()), Matrix::Identity(d, d));
  return RestrictionMapSet(g, d, MapClass::orthogonal, std::move(maps));
}

const Matrix& RestrictionMapSet::map(int e, int node) const {
  const Edge& ed = edges_.at(e);
  if (node == ed.u) return maps_[2 * e];
  if (node == ed.v) return maps_[2 * e + 1];
  throw ShapeError("restriction maps: node " + std::to_string(node) + " is not on edge " +
                   std::to_string(e));
}

namespace {

Matrix inv_sqrt_psd(const Matrix& m, double cutoff) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  Vector f(eig.eigenvalues().size());
  for (int i = 0; i < f.size(); ++i) {
    const double lambda = eig.eigenvalues()[i];
    f[i] = lambda > cutoff ? 1.0 / std::sqrt(lambda) : 0.0;
  }
  return eig.eigenvectors() * f.asDiagonal() * eig.eigenvectors().transpose();
}

int edge_or_throw(const Graph& g, int a, int b) {
  auto e = g.edge_index(a, b);
  if (!e) {
    throw PathError("no edge between " + std::to_string(a) + " and " + std::to_string(b));
  }
  return *e;
}

// out += A S A^T
void add_congruence(Matrix& out, const Matrix& a, const Matrix& s) {
  out.noalias() += a * s * a.transpose();
}

Matrix symmetric(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void check_cov_field(const SheafOperators& ops, const CovField& sigma) {
  if (static_cast<int>(sigma.size()) != ops.num_nodes()) {
    throw ShapeError("covariance field has " + std::to_string(sigma.size()) + " blocks, expected " +
                     std::to_string(ops.num_nodes()));
  }
  for (const auto& s : sigma) {
    if (s.dim() != ops.dim()) throw ShapeError("covariance block dimension mismatch");
  }
}

CovField covariances(const GaussianField& field) {
  CovField out;
  out.reserve(field.size());
  for (const auto& g : field) out.push_back(g.cov);
  return out;
}

Vector stacked_means(const GaussianField& field) {
  const int d = field.empty() ? 0 : field.front().dim();
  Vector mu(static_cast<Eigen::Index>(field.size()) * d);
  for (std::size_t v = 0; v < field.size(); ++v) mu.segment(v * d, d) = field[v].mean;
  return mu;
}

}  // namespace

SheafOperators SheafOperators::assemble(const Graph& g, const RestrictionMapSet& maps) {
  if (maps.num_edges() != g.num_edges()) {
    throw ShapeError("assemble: restriction maps do not match the graph");
  }
  const int n = g.num_nodes();
  const int d = maps.dim();
  SheafOperators ops;
  ops.graph_ = g;
  ops.maps_ = maps;
  ops.degree_.assign(n, Matrix::Zero(d, d));
  for (int v = 0; v < n; ++v) {
    if (g.degree(v) == 0) {
      throw DegeneracyError("assemble: node " + std::to_string(v) + " is isolated");
    }
    for (int e : g.incident_edges(v)) {
      const Matrix& f = maps.map(e, v);
      ops.degree_[v].noalias() += f.transpose() * f;
    }
  }
  ops.degree_inv_sqrt_.resize(n);
  ops.normalized_diag_.resize(n);
  for (int v = 0; v < n; ++v) {
    ops.degree_inv_sqrt_[v] = inv_sqrt_psd(ops.degree_[v], kDegreeCutoff);
    ops.normalized_diag_[v] = ops.degree_inv_sqrt_[v] * ops.degree_[v] * ops.degree_inv_sqrt_[v];
  }
  ops.edge_block_.resize(g.num_edges());
  ops.normalized_edge_block_.resize(g.num_edges());
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    ops.edge_block_[e] = -maps.map(e, ed.u).transpose() * maps.map(e, ed.v);
    ops.normalized_edge_block_[e] =
        ops.degree_inv_sqrt_[ed.u] * ops.edge_block_[e] * ops.degree_inv_sqrt_[ed.v];
  }
  const int k = g.max_degree();
  ops.parts_.assign(k, std::vector<Matrix>(n, Matrix::Zero(d, d)));
  ops.normalized_parts_.assign(k, std::vector<Matrix>(n, Matrix::Zero(d, d)));
  for (int v = 0; v < n; ++v) {
    auto incident = g.incident_edges(v);
    for (std::size_t i = 0; i < incident.size(); ++i) {
      const Matrix& f = maps.map(incident[i], v);
      ops.parts_[i][v] = f.transpose() * f;
      ops.normalized_parts_[i][v] =
          ops.degree_inv_sqrt_[v] * ops.parts_[i][v] * ops.degree_inv_sqrt_[v];
    }
  }
  return ops;
}

Matrix SheafOperators::off_diagonal_block(int v, int u) const {
  const int e = edge_or_throw(graph_, v, u);
  return v < u ? edge_block_[e] : Matrix(edge_block_[e].transpose());
}

Matrix SheafOperators::normalized_off_diagonal_block(int v, int u) const {
  const int e = edge_or_throw(graph_, v, u);
  return v < u ? normalized_edge_block_[e] : Matrix(normalized_edge_block_[e].transpose());
}

Matrix SheafOperators::dense_laplacian(bool normalized) const {
  const int n = num_nodes();
  const int d = dim();
  Matrix l = Matrix::Zero(n * d, n * d);
  for (int v = 0; v < n; ++v) {
    l.block(v * d, v * d, d, d) = normalized ? normalized_diag_[v] : degree_[v];
  }
  for (int e = 0; e < graph_.num_edges(); ++e) {
    const Edge& ed = graph_.edge(e);
    const Matrix& b = normalized ? normalized_edge_block_[e] : edge_block_[e];
    l.block(ed.u * d, ed.v * d, d, d) = b;
    l.block(ed.v * d, ed.u * d, d, d) = b.transpose();
  }
  return l;
}

Matrix apply_mean_laplacian(const SheafOperators& ops, const Matrix& x, bool normalized) {
  const int n = ops.num_nodes();
  const int d = ops.dim();
  if (x.rows() != static_cast<Eigen::Index>(n) * d) {
    throw ShapeError("apply_mean_laplacian: expected " + std::to_string(n * d) + " rows, got " +
                     std::to_string(x.rows()));
  }
  Matrix out(x.rows(), x.cols());
  for (int v = 0; v < n; ++v) {
    const Matrix& diag = normalized ? ops.normalized_diagonal_block(v) : ops.degree_block(v);
    out.middleRows(v * d, d).noalias() = diag * x.middleRows(v * d, d);
  }
  const Graph& g = ops.graph();
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    const Matrix b = normalized ? ops.normalized_off_diagonal_block(ed.u, ed.v)
                                : ops.off_diagonal_block(ed.u, ed.v);
    out.middleRows(ed.u * d, d).noalias() += b * x.middleRows(ed.v * d, d);
    out.middleRows(ed.v * d, d).noalias() += b.transpose() * x.middleRows(ed.u * d, d);
  }
  return out;
}

CovCoboundary coboundary_cov(const SheafOperators& ops, const Orientation& orientation,
                             const CovField& sigma) {
  check_cov_field(ops, sigma);
  const Graph& g = ops.graph();
  if (static_cast<int>(orientation.arcs.size()) != g.num_edges()) {
    throw ShapeError("coboundary_cov: orientation does not match the graph");
  }
  CovCoboundary out;
  out.edge.reserve(g.num_edges());
  out.plus.reserve(g.num_edges());
  out.minus.reserve(g.num_edges());
  for (int e = 0; e < g.num_edges(); ++e) {
    const int s = orientation.source(e);
    const int t = orientation.target(e);
    const Matrix& fs = ops.maps().map(e, s);
    const Matrix& ft = ops.maps().map(e, t);
    Matrix plus = fs * sigma[s].matrix() * fs.transpose();
    Matrix minus = ft * sigma[t].matrix() * ft.transpose();
    out.edge.emplace_back(symmetric(plus + minus));
    out.plus.emplace_back(symmetric(plus));
    out.minus.emplace_back(symmetric(minus));
  }
  return out;
}

namespace {

// Per-node formula evaluated directly on the restriction maps.
CovField cov_laplacian_per_node(const SheafOperators& ops, const CovField& sigma,
                                bool normalized) {
  const Graph& g = ops.graph();
  const int d = ops.dim();
  const int n = g.num_nodes();
  CovField out;
  out.reserve(n);
  for (int v = 0; v < n; ++v) {
    Matrix acc = Matrix::Zero(d, d);
    for (int e : g.incident_edges(v)) {
      const Edge& ed = g.edge(e);
      const int u = ed.u == v ? ed.v : ed.u;
      Matrix fv = ops.maps().map(e, v);
      Matrix fu = ops.maps().map(e, u);
      if (normalized) {
        fv = fv * ops.degree_inv_sqrt(v);
        fu = fu * ops.degree_inv_sqrt(u);
      }
      // F_v^T (F_v S_v F_v^T + F_u S_u F_u^T) F_v
      const Matrix stalk = fv * sigma[v].matrix() * fv.transpose() +
                           fu * sigma[u].matrix() * fu.transpose();
      add_congruence(acc, fv.transpose(), stalk);
    }
    out.emplace_back(symmetric(acc));
  }
  return out;
}

}  // namespace

CovField cov_laplacian_decomposed(const SheafOperators& ops, const CovField& sigma,
                                  bool normalized) {
  check_cov_field(ops, sigma);
  const Graph& g = ops.graph();
  const int d = ops.dim();
  const int n = g.num_nodes();
  std::vector<Matrix> acc(n, Matrix::Zero(d, d));
  for (int i = 0; i < ops.num_parts(); ++i) {
    for (int v = 0; v < n; ++v) {
      const Matrix& p = normalized ? ops.normalized_part(i, v) : ops.part(i, v);
      add_congruence(acc[v], p, sigma[v].matrix());
    }
  }
  // B_j selects the j-th diagonal block of L' Sigma L'^T.
  for (int j = 0; j < n; ++j) {
    for (int u : g.neighbors(j)) {
      const Matrix b = normalized ? ops.normalized_off_diagonal_block(j, u)
                                  : ops.off_diagonal_block(j, u);
      add_congruence(acc[j], b, sigma[u].matrix());
    }
  }
  CovField out;
  out.reserve(n);
  for (auto& m : acc) out.emplace_back(symmetric(m));
  return out;
}

CovField apply_cov_laplacian(const SheafOperators& ops, const CovField& sigma, bool normalized) {
  check_cov_field(ops, sigma);
  if (normalized) return cov_laplacian_decomposed(ops, sigma, true);
  return cov_laplacian_per_node(ops, sigma, false);
}

CovLaplacianPair cov_laplacian_pair(const SheafOperators& ops, const Orientation& orientation,
                                    const CovField& sigma) {
  check_cov_field(ops, sigma);
  const Graph& g = ops.graph();
  const int d = ops.dim();
  const int n = g.num_nodes();
  std::vector<Matrix> plus(n, Matrix::Zero(d, d));
  std::vector<Matrix> minus(n, Matrix::Zero(d, d));
  for (int e = 0; e < g.num_edges(); ++e) {
    const int s = orientation.source(e);
    const int t = orientation.target(e);
    const Matrix& fs = ops.maps().map(e, s);
    const Matrix& ft = ops.maps().map(e, t);
    // (delta+)^T A_e delta+ and (delta-)^T A_e delta- live on the diagonal.
    add_congruence(plus[s], fs.transpose() * fs, sigma[s].matrix());
    add_congruence(plus[t], ft.transpose() * ft, sigma[t].matrix());
    // Mixed terms couple source and target.
    add_congruence(minus[s], fs.transpose() * ft, sigma[t].matrix());
    add_congruence(minus[t], ft.transpose() * fs, sigma[s].matrix());
  }
  CovLaplacianPair out;
  for (int v = 0; v < n; ++v) {
    out.plus.emplace_back(symmetric(plus[v]));
    out.minus.emplace_back(symmetric(minus[v]));
  }
  return out;
}

GaussianField apply_gaussian_laplacian(const SheafOperators& ops, const GaussianField& field,
                                       bool normalized) {
  const int n = ops.num_nodes();
  const int d = ops.dim();
  if (check_field(field, n) != d && n > 0) {
    throw ShapeError("apply_gaussian_laplacian: field dimension does not match the stalks");
  }
  const Vector mu = apply_mean_laplacian(ops, stacked_means(field), normalized);
  const CovField sigma = apply_cov_laplacian(ops, covariances(field), normalized);
  GaussianField out;
  out.reserve(n);
  for (int v = 0; v < n; ++v) out.emplace_back(mu.segment(v * d, d), sigma[v]);
  return out;
}

GaussianField distribution_laplacian(const SheafOperators& ops, const GaussianField& field,
                                     bool normalized) {
  const Graph& g = ops.graph();
  const int n = g.num_nodes();
  const int d = ops.dim();
  const int m = g.num_edges();
  if (check_field(field, n) != d && n > 0) {
    throw ShapeError("distribution_laplacian: field dimension does not match the stalks");
  }
  // The 0-cochain as one product Gaussian on R^{nd}.
  Matrix big_cov = Matrix::Zero(n * d, n * d);
  for (int v = 0; v < n; ++v) big_cov.block(v * d, v * d, d, d) = field[v].cov.matrix();
  const Gaussian nu(stacked_means(field), PsdMatrix(big_cov));

  auto node_selector = [&](int j) {
    Matrix b = Matrix::Zero(n * d, n * d);
    b.block(j * d, j * d, d, d).setIdentity();
    return b;
  };
  auto split_nodes = [&](const Gaussian& big) {
    GaussianField out;
    out.reserve(n);
    for (int v = 0; v < n; ++v) {
      out.emplace_back(big.mean.segment(v * d, d),
                       PsdMatrix(symmetric(big.cov.matrix().block(v * d, v * d, d, d))));
    }
    return out;
  };

  if (normalized) {
    std::vector<Gaussian> terms;
    for (int i = 0; i < ops.num_parts(); ++i) {
      Matrix part = Matrix::Zero(n * d, n * d);
      for (int v = 0; v < n; ++v) part.block(v * d, v * d, d, d) = ops.normalized_part(i, v);
      terms.push_back(pushforward(part, nu));
    }
    Matrix off = Matrix::Zero(n * d, n * d);
    for (int e = 0; e < m; ++e) {
      const Edge& ed = g.edge(e);
      off.block(ed.u * d, ed.v * d, d, d) = ops.normalized_off_diagonal_block(ed.u, ed.v);
      off.block(ed.v * d, ed.u * d, d, d) = ops.normalized_off_diagonal_block(ed.v, ed.u);
    }
    const Gaussian mixed = pushforward(off, nu);
    for (int j = 0; j < n; ++j) terms.push_back(pushforward(node_selector(j), mixed));
    return split_nodes(convolve(terms));
  }

  // Coboundary parts for the canonical orientation: source = lower endpoint.
  Matrix dplus = Matrix::Zero(m * d, n * d);
  Matrix dminus = Matrix::Zero(m * d, n * d);
  for (int e = 0; e < m; ++e) {
    const Edge& ed = g.edge(e);
    dplus.block(e * d, ed.u * d, d, d) = ops.maps().map(e, ed.u);
    dminus.block(e * d, ed.v * d, d, d) = ops.maps().map(e, ed.v);
  }
  const Gaussian per_edge_pair =
      convolve({pushforward_linear(dplus, nu), pushforward_linear(-dminus, nu)});
  std::vector<Gaussian> edge_terms;
  edge_terms.reserve(m);
  for (int i = 0; i < m; ++i) {
    Matrix a = Matrix::Zero(m * d, m * d);
    a.block(i * d, i * d, d, d).setIdentity();
    edge_terms.push_back(pushforward(a, per_edge_pair));
  }
  const Gaussian coboundary = convolve(edge_terms);
  const Gaussian back = convolve({pushforward_linear(dplus.transpose(), coboundary),
                                  pushforward_linear(-dminus.transpose(), coboundary)});
  std::vector<Gaussian> node_terms;
  node_terms.reserve(n);
  for (int j = 0; j < n; ++j) node_terms.push_back(pushforward(node_selector(j), back));
  return split_nodes(convolve(node_terms));
}

SectionReport is_global_section(const SheafOperators& ops, const GaussianField& field,
                                double tol) {
  const Graph& g = ops.graph();
  const int n = g.num_nodes();
  if (check_field(field, n) != ops.dim() && n > 0) {
    throw ShapeError("is_global_section: field dimension does not match the stalks");
  }
  SectionReport r;
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    const Matrix& fu = ops.maps().map(e, ed.u);
    const Matrix& fv = ops.maps().map(e, ed.v);
    r.mean_residual =
        std::max(r.mean_residual, (fu * field[ed.u].mean - fv * field[ed.v].mean).norm());
    const Matrix cu = fu * field[ed.u].cov.matrix() * fu.transpose();
    const Matrix cv = fv * field[ed.v].cov.matrix() * fv.transpose();
    r.cov_residual = std::max(r.cov_residual, (cu - cv).norm());
  }
  r.max_residual = std::max(r.mean_residual, r.cov_residual);
  r.is_section = r.max_residual <= tol;
  const auto pair = cov_laplacian_pair(ops, Orientation::canonical(g), covariances(field));
  for (int v = 0; v < n; ++v) {
    r.equalizer_residual =
        std::max(r.equalizer_residual, (pair.plus[v].matrix() - pair.minus[v].matrix()).norm());
  }
  return r;
}

Gaussian transport(const Graph& g, const RestrictionMapSet& maps, const std::vector<int>& path,
                   const Gaussian& start) {
  if (start.dim() != maps.dim()) throw ShapeError("transport: dimension mismatch");
  Gaussian cur = start;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const int a = path[i - 1];
    const int b = path[i];
    const int e = edge_or_throw(g, a, b);
    cur = pushforward(maps.map(e, b).transpose() * maps.map(e, a), cur);
  }
  return cur;
}

Matrix holonomy(const Graph& g, const RestrictionMapSet& maps, const std::vector<int>& cycle) {
  if (cycle.empty() || cycle.front() != cycle.back()) {
    throw PathError("holonomy: walk is not closed");
  }
  Matrix h = Matrix::Identity(maps.dim(), maps.dim());
  for (std::size_t i = 1; i < cycle.size(); ++i) {
    const int e = edge_or_throw(g, cycle[i - 1], cycle[i]);
    h = maps.map(e, cycle[i]).transpose() * maps.map(e, cycle[i - 1]) * h;
  }
  return h;
}

GaussianField propagate_section(const Graph& g, const RestrictionMapSet& maps, int root,
                                const Gaussian& seed) {
  const int n = g.num_nodes();
  if (root < 0 || root >= n) throw ParameterError("propagate_section: root out of range");
  if (seed.dim() != maps.dim()) throw ShapeError("propagate_section: dimension mismatch");
  GaussianField field(n);
  std::vector<char> seen(n, 0);
  std::queue<int> frontier;
  field[root] = seed;
  seen[root] = 1;
  frontier.push(root);
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    for (int e : g.incident_edges(v)) {
      const Edge& ed = g.edge(e);
      const int u = ed.u == v ? ed.v : ed.u;
      if (seen[u]) continue;
      const Matrix& fu = maps.map(e, u);
      Matrix step;
      if (maps.map_class() == MapClass::orthogonal) {
        step = fu.transpose() * maps.map(e, v);
      } else {
        Eigen::FullPivLU<Matrix> lu(fu);
        if (!lu.isInvertible()) throw SingularityError("propagate_section: map is not invertible");
        step = lu.solve(maps.map(e, v));
      }
      field[u] = pushforward(step, field[v]);
      seen[u] = 1;
      frontier.push(u);
    }
  }
  for (int v = 0; v < n; ++v) {
    if (!seen[v]) throw DegeneracyError("propagate_section: graph is disconnected");
  }
  return field;
}

double dirichlet_energy(const SheafOperators& ops, const Vector& x) {
  const Matrix lx = apply_mean_laplacian(ops, x, true);
  return x.dot(lx.col(0));
}

double dirichlet_energy(const SheafOperators& ops, const Matrix& x) {
  const Matrix lx = apply_mean_laplacian(ops, x, true);
  return x.cwiseProduct(lx).sum();
}

double lyapunov_energy(const SheafOperators& ops, const GaussianField& field) {
  const Graph& g = ops.graph();
  if (check_field(field, g.num_nodes()) != ops.dim() && g.num_nodes() > 0) {
    throw ShapeError("lyapunov_energy: field dimension does not match the stalks");
  }
  double total = 0.0;
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    const Matrix au = ops.maps().map(e, ed.u) * ops.degree_inv_sqrt(ed.u);
    const Matrix av = ops.maps().map(e, ed.v) * ops.degree_inv_sqrt(ed.v);
    total += w2_squared(pushforward(au, field[ed.u]), pushforward(av, field[ed.v]));
  }
  return total;
}

OrbitReport orbit_invariants(const Matrix& q, const Gaussian& g, double tol) {
  if (q.rows() != q.cols() || q.cols() != g.dim()) throw ShapeError("orbit_invariants: shape");
  const int d = g.dim();
  OrbitReport r;
  r.orthogonality_residual = (q.transpose() * q - Matrix::Identity(d, d)).norm();
  r.orthogonal = r.orthogonality_residual < RestrictionMapSet::kOrthogonalTol;
  Matrix off = q;
  off.diagonal().setZero();
  r.diagonal = off.cwiseAbs().maxCoeff() == 0.0;

  const Gaussian moved = pushforward(q, g);
  r.mean_norm_residual = std::abs(moved.mean.norm() - g.mean.norm());
  Eigen::SelfAdjointEigenSolver<Matrix> before(g.cov.matrix(), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> after(moved.cov.matrix(), Eigen::EigenvaluesOnly);
  r.spectrum_residual = (before.eigenvalues() - after.eigenvalues()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, g.cov.matrix().norm());
  r.norm_preserved = r.mean_norm_residual <= tol * std::max(1.0, g.mean.norm());
  r.spectrum_preserved = r.spectrum_residual <= tol * scale;
  r.stabilizes = (moved.mean - g.mean).norm() <= tol * std::max(1.0, g.mean.norm()) &&
                 (moved.cov.matrix() - g.cov.matrix()).norm() <= tol * scale;
  r.displacement = bures_w2(moved, g);

  r.consistent = true;
  if (r.orthogonal) r.consistent = r.norm_preserved && r.spectrum_preserved;
  if (r.diagonal) {
    bool moves_every_axis = true;
    for (int i = 0; i < d; ++i) {
      if (std::abs(q(i, i) - 1.0) <= tol || std::abs(g.mean[i]) <= tol) moves_every_axis = false;
    }
    if (moves_every_axis) r.consistent = r.consistent && !r.stabilizes;
  }
  return r;
}

}  // namespace gsheaf
