#pragma once

#include <string>
#include <vector>

#include "gsheaf/gaussian.hpp"
#include "gsheaf/graph.hpp"

namespace gsheaf {

enum class MapClass { diagonal, orthogonal, general };

std::string to_string(MapClass c);
MapClass map_class_from_string(const std::string& s);

/// One d x d restriction map per incidence (v ⊴ e).
///
/// Incidence 2e addresses the lower endpoint of edge e, 2e + 1 the upper
/// one. Covariance restriction maps are never stored: they are the
/// congruences Sigma -> F Sigma F^T of the stored matrices.
class RestrictionMapSet {
 public:
  static constexpr double kOrthogonalTol = 1e-6;

  RestrictionMapSet() = default;
  RestrictionMapSet(const Graph& g, int d, MapClass cls, std::vector<Matrix> maps);

  static RestrictionMapSet identity(const Graph& g, int d);

  int dim() const { return d_; }
  MapClass map_class() const { return cls_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  /// F_{node ⊴ e}; throws ShapeError if node is not an endpoint of e.
  const Matrix& map(int e, int node) const;
  const Matrix& incidence(int k) const { return maps_[k]; }
  const std::vector<Matrix>& incidences() const { return maps_; }

 private:
  int d_ = 0;
  MapClass cls_ = MapClass::general;
  std::vector<Edge> edges_;
  std::vector<Matrix> maps_;
};

using CovField = std::vector<PsdMatrix>;

/// Assembled mean-sheaf Laplacian in block-sparse form plus the pieces the
/// covariance Laplacian is built from.
class SheafOperators {
 public:
  /// Pseudo-inverse cutoff for the degree blocks.
  static constexpr double kDegreeCutoff = 1e-10;

  /// Throws DegeneracyError if some node has no incident edge.
  static SheafOperators assemble(const Graph& g, const RestrictionMapSet& maps);

  const Graph& graph() const { return graph_; }
  const RestrictionMapSet& maps() const { return maps_; }
  int dim() const { return maps_.dim(); }
  int num_nodes() const { return graph_.num_nodes(); }

  /// L_vv = D_v = sum_{v ⊴ e} F^T F.
  const Matrix& degree_block(int v) const { return degree_[v]; }
  const Matrix& degree_inv_sqrt(int v) const { return degree_inv_sqrt_[v]; }
  /// L_vu = -F_{v⊴e}^T F_{u⊴e}. Throws PathError for a non-edge.
  Matrix off_diagonal_block(int v, int u) const;
  /// Blocks of the normalized Laplacian D^-1/2 L D^-1/2.
  const Matrix& normalized_diagonal_block(int v) const { return normalized_diag_[v]; }
  Matrix normalized_off_diagonal_block(int v, int u) const;

  /// k = max degree block-diagonal parts L_i / Delta_i; part(i, v) is the
  /// contribution of v's i-th neighbor (zero when v has fewer neighbors).
  int num_parts() const { return static_cast<int>(parts_.size()); }
  const Matrix& part(int i, int v) const { return parts_[i][v]; }
  const Matrix& normalized_part(int i, int v) const { return normalized_parts_[i][v]; }

  Matrix dense_laplacian(bool normalized) const;

 private:
  Graph graph_;
  RestrictionMapSet maps_;
  std::vector<Matrix> degree_;
  std::vector<Matrix> degree_inv_sqrt_;
  std::vector<Matrix> normalized_diag_;
  std::vector<Matrix> edge_block_;             // L_uv for edge (u < v)
  std::vector<Matrix> normalized_edge_block_;  // D_u^-1/2 L_uv D_v^-1/2
  std::vector<std::vector<Matrix>> parts_;
  std::vector<std::vector<Matrix>> normalized_parts_;
};

/// Blockwise L X (or Delta X) for X with n*d rows.
Matrix apply_mean_laplacian(const SheafOperators& ops, const Matrix& x, bool normalized);

struct CovCoboundary {
  CovField edge;   // delta_C(Sigma)_e = plus + minus
  CovField plus;   // source-side congruence
  CovField minus;  // target-side congruence
};

CovCoboundary coboundary_cov(const SheafOperators& ops, const Orientation& orientation,
                             const CovField& sigma);

/// Covariance Laplacian. The unnormalized route evaluates the per-node
/// formula on the restriction maps; the normalized route assembles it from
/// the Delta_i parts and the off-diagonal Delta'.
CovField apply_cov_laplacian(const SheafOperators& ops, const CovField& sigma, bool normalized);

/// sum_i phi_{L_i}(Sigma) + sum_j phi_{B_j}(phi_{L'}(Sigma)) from the stored
/// parts (Delta_i / Delta' when normalized).
CovField cov_laplacian_decomposed(const SheafOperators& ops, const CovField& sigma,
                                  bool normalized);

struct CovLaplacianPair {
  CovField plus;
  CovField minus;
};

/// Positive and negative parts L_C^+ and L_C^- under an orientation.
CovLaplacianPair cov_laplacian_pair(const SheafOperators& ops, const Orientation& orientation,
                                    const CovField& sigma);

GaussianField apply_gaussian_laplacian(const SheafOperators& ops, const GaussianField& field,
                                       bool normalized);

/// Laplacian computed on distributions: pushforwards by the coboundary
/// parts, convolved per edge / per node through the block selectors. Dense;
/// intended as an independent check of apply_gaussian_laplacian.
GaussianField distribution_laplacian(const SheafOperators& ops, const GaussianField& field,
                                     bool normalized = false);

struct SectionReport {
  bool is_section = false;
  double max_residual = 0.0;        // worst edge disagreement (mean or cov)
  double mean_residual = 0.0;
  double cov_residual = 0.0;
  double equalizer_residual = 0.0;  // max_v ||L_C^+(Sigma)_v - L_C^-(Sigma)_v||_F
};

SectionReport is_global_section(const SheafOperators& ops, const GaussianField& field,
                                double tol = 1e-8);

/// Composed pushforwards F_next^T F_cur along consecutive path nodes.
Gaussian transport(const Graph& g, const RestrictionMapSet& maps, const std::vector<int>& path,
                   const Gaussian& start);

/// Composed transport matrix around a closed walk (first == last).
Matrix holonomy(const Graph& g, const RestrictionMapSet& maps, const std::vector<int>& cycle);

/// Extends `seed` at `root` along a BFS tree using F_child^{-1} F_parent
/// (F^T for orthogonal maps). On a tree the result is a global section.
GaussianField propagate_section(const Graph& g, const RestrictionMapSet& maps, int root,
                                const Gaussian& seed);

/// x^T Delta x for the normalized mean Laplacian.
double dirichlet_energy(const SheafOperators& ops, const Vector& x);
/// Sum of column energies.
double dirichlet_energy(const SheafOperators& ops, const Matrix& x);

/// Sum over edges of W2^2 between (F_v D_v^-1/2)#nu_v and (F_u D_u^-1/2)#nu_u.
double lyapunov_energy(const SheafOperators& ops, const GaussianField& field);

struct OrbitReport {
  bool orthogonal = false;
  bool diagonal = false;
  double orthogonality_residual = 0.0;  // ||Q^T Q - I||_F
  double mean_norm_residual = 0.0;      // | ||Q mu|| - ||mu|| |
  double spectrum_residual = 0.0;       // max |lambda_i(Q S Q^T) - lambda_i(S)|
  double displacement = 0.0;            // W2(Q#g, g)
  bool norm_preserved = false;
  bool spectrum_preserved = false;
  bool stabilizes = false;              // Q#g == g
  /// The implications of the orbit results hold: orthogonal maps preserve
  /// mean norm and spectrum; diagonal maps with all entries != 1 acting on a
  /// nowhere-zero mean do not stabilize g.
  bool consistent = false;
};

OrbitReport orbit_invariants(const Matrix& q, const Gaussian& g, double tol = 1e-9);

}  // namespace gsheaf
