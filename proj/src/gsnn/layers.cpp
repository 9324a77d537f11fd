#include "gsheaf/gsnn/layers.hpp"

#include <cmath>

#include "gsheaf/error.hpp"

namespace gsheaf {

Linear Linear::create(ad::ParameterSet& params, const std::string& name, int in, int out, Rng& rng,
                      bool sheaf) {
  if (in < 1 || out < 1) throw ParameterError("linear layer '" + name + "' needs positive widths");
  Linear l;
  l.in = in;
  l.out = out;
  l.w = params.add(name + ".w", ad::glorot({in, out}, in, out, rng), sheaf);
  l.b = params.add(name + ".b", ad::Tensor({out}, 0.0), sheaf);
  return l;
}

ad::Var Linear::operator()(const std::vector<ad::Var>& p, ad::Var x) const {
  return ad::add_bias(ad::matmul(x, p[w]), p[b]);
}

ad::SparseRowMatrix gcn_propagation(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<double> scale(n);
  for (int v = 0; v < n; ++v) scale[v] = 1.0 / std::sqrt(g.degree(v) + 1.0);
  std::vector<Eigen::Triplet<double>> entries;
  for (int v = 0; v < n; ++v) {
    entries.emplace_back(v, v, scale[v] * scale[v]);
    for (int u : g.neighbors(v)) entries.emplace_back(v, u, scale[v] * scale[u]);
  }
  ad::SparseRowMatrix a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

double graph_dirichlet_energy(const Graph& g, const Matrix& x) {
  if (x.rows() != g.num_nodes()) throw ShapeError("graph_dirichlet_energy: one row per node");
  double total = 0.0;
  for (const Edge& e : g.edges()) {
    const double su = 1.0 / std::sqrt(static_cast<double>(g.degree(e.u) + 1));
    const double sv = 1.0 / std::sqrt(static_cast<double>(g.degree(e.v) + 1));
    total += (su * x.row(e.u) - sv * x.row(e.v)).squaredNorm();
  }
  return total;
}

}  // namespace gsheaf
