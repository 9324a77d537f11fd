#pragma once

#include <string>
#include <vector>

#include "gsheaf/autodiff/ops.hpp"
#include "gsheaf/autodiff/optim.hpp"
#include "gsheaf/gaussian.hpp"
#include "gsheaf/graph.hpp"

namespace gsheaf {

/// Dense layer x W + b with parameters registered in a ParameterSet.
struct Linear {
  int w = -1;
  int b = -1;
  int in = 0;
  int out = 0;

  static Linear create(ad::ParameterSet& params, const std::string& name, int in, int out,
                       Rng& rng, bool sheaf = false);
  ad::Var operator()(const std::vector<ad::Var>& p, ad::Var x) const;
};

/// D~^-1/2 (A + I) D~^-1/2.
ad::SparseRowMatrix gcn_propagation(const Graph& g);

/// sum_c x_c^T (I - D~^-1/2 (A + I) D~^-1/2) x_c for node features x (n, c), the
/// energy of the smoothing operator used by gcn_propagation.
double graph_dirichlet_energy(const Graph& g, const Matrix& x);

}  // namespace gsheaf
