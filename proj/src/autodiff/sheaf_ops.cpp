#include "gsheaf/autodiff/sheaf_ops.hpp"

#include "gsheaf/error.hpp"

namespace gsheaf::ad {

IncidencePlan IncidencePlan::build(const Graph& g, int channels) {
  if (channels < 1) throw ParameterError("incidence plan: channels must be >= 1");
  IncidencePlan p;
  p.num_nodes = g.num_nodes();
  p.num_incidences = 2 * g.num_edges();
  p.channels = channels;
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (g.degree(v) == 0) throw DegeneracyError("node " + std::to_string(v) + " is isolated");
  }
  p.node.resize(p.num_incidences);
  p.partner_node.resize(p.num_incidences);
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    p.node[2 * e] = ed.u;
    p.partner_node[2 * e] = ed.v;
    p.node[2 * e + 1] = ed.v;
    p.partner_node[2 * e + 1] = ed.u;
  }
  const int m = p.num_incidences;
  for (int k = 0; k < m; ++k) {
    p.mean_a.push_back(k);
    p.mean_x.push_back(p.node[k]);
    p.mean_o.push_back(p.node[k]);
    p.mean_a.push_back(m + k);
    p.mean_x.push_back(p.partner_node[k]);
    p.mean_o.push_back(p.node[k]);
  }
  for (int k = 0; k < m; ++k) {
    for (int c = 0; c < channels; ++c) {
      p.cov_a.push_back(k);
      p.cov_s.push_back(p.node[k] * channels + c);
      p.cov_o.push_back(p.node[k] * channels + c);
      p.cov_a.push_back(m + k);
      p.cov_s.push_back(p.partner_node[k] * channels + c);
      p.cov_o.push_back(p.node[k] * channels + c);
    }
  }
  return p;
}

Var sheaf_blocks(Var maps, const IncidencePlan& plan, double cutoff) {
  if (maps.value().rank() != 3 || maps.dim(0) != plan.num_incidences) {
    throw ShapeError("sheaf_blocks: expected one map per incidence");
  }
  std::vector<int> partner(plan.num_incidences);
  for (int k = 0; k < plan.num_incidences; ++k) partner[k] = k ^ 1;
  const Var ftf = bmm(maps, maps, true, false);
  const Var degree = scatter_add(ftf, plan.node, plan.num_nodes);
  const Var dis = sym_inv_sqrt(degree, cutoff);
  const Var left = gather(dis, plan.node);
  const Var right = gather(dis, plan.partner_node);
  const Var diag_parts = bmm(bmm(left, ftf), left);
  const Var cross = bmm(maps, gather(maps, partner), true, false);
  const Var off = scale(bmm(bmm(left, cross), right), -1.0);
  return concat({diag_parts, off});
}

Var apply_normalized_mean(Var blocks, Var x, const IncidencePlan& plan) {
  if (x.value().rank() != 3 || x.dim(0) != plan.num_nodes) {
    throw ShapeError("apply_normalized_mean: expected (n,d,c) features");
  }
  return bmm_indexed(blocks, x, plan.mean_a, plan.mean_x, plan.mean_o, plan.num_nodes);
}

Var apply_normalized_cov(Var blocks, Var sigma, const IncidencePlan& plan) {
  if (sigma.value().rank() != 3 || sigma.dim(0) != plan.num_nodes * plan.channels) {
    throw ShapeError("apply_normalized_cov: expected (n*h,d,d) covariances");
  }
  return congruence_indexed(blocks, sigma, plan.cov_a, plan.cov_s, plan.cov_o,
                            plan.num_nodes * plan.channels);
}

Var mean_diffusion_step(Var blocks, Var x, const IncidencePlan& plan) {
  return sub(x, apply_normalized_mean(blocks, x, plan));
}

Var cov_diffusion_step(Var blocks, Var sigma, const IncidencePlan& plan) {
  return add(sigma, apply_normalized_cov(blocks, sigma, plan));
}

}  // namespace gsheaf::ad
