#pragma once

#include <vector>

#include "gsheaf/autodiff/ops.hpp"
#include "gsheaf/graph.hpp"

namespace gsheaf::ad {

/// Index tables for differentiable sheaf diffusion over a fixed graph.
///
/// Incidence k = 2e is the lower endpoint of edge e and k = 2e + 1 the upper
/// one, matching RestrictionMapSet.
struct IncidencePlan {
  int num_nodes = 0;
  int num_incidences = 0;
  int channels = 1;
  std::vector<int> node;          // node of incidence k
  std::vector<int> partner_node;  // other endpoint of k's edge
  // bmm_indexed tables for (n, d, c) features.
  std::vector<int> mean_a, mean_x, mean_o;
  // congruence_indexed tables for (n * channels, d, d) covariances.
  std::vector<int> cov_a, cov_s, cov_o;

  /// Throws DegeneracyError if some node is isolated.
  static IncidencePlan build(const Graph& g, int channels);
};

/// Normalized blocks from maps (2E, d, d): rows [0, 2E) hold
/// Delta_k = D_v^-1/2 F_k^T F_k D_v^-1/2 and rows [2E, 4E) hold
/// N_k = -D_v^-1/2 F_k^T F_partner D_u^-1/2, where v, u are k's node and partner.
Var sheaf_blocks(Var maps, const IncidencePlan& plan, double cutoff = 1e-10);

/// Delta_M X for X (n, d, c).
Var apply_normalized_mean(Var blocks, Var x, const IncidencePlan& plan);
/// Delta_C(Sigma) for Sigma (n * channels, d, d), channel-major per node.
Var apply_normalized_cov(Var blocks, Var sigma, const IncidencePlan& plan);

/// X - Delta_M X.
Var mean_diffusion_step(Var blocks, Var x, const IncidencePlan& plan);
/// Sigma + Delta_C(Sigma).
Var cov_diffusion_step(Var blocks, Var sigma, const IncidencePlan& plan);

}  // namespace gsheaf::ad
