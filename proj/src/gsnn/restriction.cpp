#include "gsheaf/gsnn/restriction.hpp"

#include <cmath>

#include "gsheaf/error.hpp"
#include "gsheaf/gsnn/layers.hpp"

namespace gsheaf {

int map_output_width(MapClass cls, int d) {
  switch (cls) {
    case MapClass::diagonal:
      return d;
    case MapClass::orthogonal:
      return d * (d - 1) / 2;
    case MapClass::general:
      return d * d;
  }
  return d * d;
}

namespace {

ad::Tensor identity_batch(int rows, int d, double scale) {
  ad::Tensor t({rows, d, d});
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < d; ++i) t[(r * d + i) * d + i] = scale;
  }
  return t;
}

}  // namespace

ad::Var project_maps(ad::Var raw, MapClass cls, int d) {
  if (raw.value().rank() != 2 || raw.dim(1) != map_output_width(cls, d)) {
    throw ShapeError("project_maps: expected (rows, " + std::to_string(map_output_width(cls, d)) +
                     ") values");
  }
  const int rows = raw.dim(0);
  switch (cls) {
    case MapClass::diagonal:
      return ad::diag_embed(raw);
    case MapClass::orthogonal:
      if (d == 1) return raw.tape->constant(identity_batch(rows, 1, 1.0));
      return ad::cayley(ad::skew_from_vec(raw, d));
    case MapClass::general:
      return ad::add(ad::reshape(raw, {rows, d, d}),
                     raw.tape->constant(identity_batch(rows, d, RestrictionNetwork::kGeneralRidge)));
  }
  throw ParameterError("project_maps: unknown class");
}

RestrictionNetwork::RestrictionNetwork(ad::ParameterSet& params, const std::string& prefix,
                                       int in_dim, int hidden, int d, MapClass cls, Rng& rng)
    : d_(d), in_dim_(in_dim), cls_(cls) {
  if (d < 1 || in_dim < 1 || hidden < 1) throw ParameterError("restriction network: bad widths");
  const Linear first = Linear::create(params, prefix + ".l1", in_dim, hidden, rng, true);
  w1_ = first.w;
  b1_ = first.b;
  const int width = map_output_width(cls, d);
  if (width > 0) {
    const Linear second = Linear::create(params, prefix + ".l2", hidden, width, rng, true);
    w2_ = second.w;
    b2_ = second.b;
    // Diagonal and general maps start near 0.76 I (tanh(1)) instead of at 0,
    // which would leave every degree block singular.
    ad::Tensor& bias = params[b2_].value;
    if (cls == MapClass::diagonal) bias.fill(1.0);
    if (cls == MapClass::general) {
      for (int i = 0; i < d; ++i) bias[i * d + i] = 1.0;
    }
  }
}

ad::Var RestrictionNetwork::maps(const std::vector<ad::Var>& params, ad::Var features) const {
  if (features.value().rank() != 2 || features.dim(1) != in_dim_) {
    throw ShapeError("restriction network: expected (rows, " + std::to_string(in_dim_) + ") features");
  }
  const int rows = features.dim(0);
  if (w2_ < 0) return features.tape->constant(identity_batch(rows, d_, 1.0));
  const ad::Var hidden = ad::elu(ad::add_bias(ad::matmul(features, params[w1_]), params[b1_]));
  const ad::Var raw = ad::tanh(ad::add_bias(ad::matmul(hidden, params[w2_]), params[b2_]));
  return project_maps(raw, cls_, d_);
}

ad::Tensor incidence_features(const Graph& g, const GaussianField& field) {
  const int s = check_field(field, g.num_nodes());
  const int width = 2 * s + 2;
  const int rows = 2 * g.num_edges();
  ad::Tensor t({rows, width});
  std::vector<double> det(field.size());
  for (std::size_t v = 0; v < field.size(); ++v) det[v] = field[v].cov.matrix().determinant();
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    const int ends[2][2] = {{ed.u, ed.v}, {ed.v, ed.u}};
    for (int k = 0; k < 2; ++k) {
      double* row = t.data() + static_cast<std::size_t>(2 * e + k) * width;
      const int a = ends[k][0], b = ends[k][1];
      for (int i = 0; i < s; ++i) {
        row[i] = field[a].mean[i];
        row[s + i] = field[b].mean[i];
      }
      row[2 * s] = det[a];
      row[2 * s + 1] = det[b];
    }
  }
  if (rows > 0) {
    auto m = t.as_matrix(rows, width);
    for (int c = 0; c < width; ++c) {
      const double mu = m.col(c).mean();
      const double sd = std::sqrt((m.col(c).array() - mu).square().mean());
      m.col(c).array() -= mu;
      if (sd > 1e-12) m.col(c) /= sd;
    }
  }
  return t;
}

RestrictionMapSet learn_restriction_maps(const RestrictionNetwork& psi,
                                         const ad::ParameterSet& params,
                                         const GaussianField& field, const Graph& g) {
  ad::Tape tape;
  std::vector<ad::Var> leaves;
  for (const auto& p : params) leaves.push_back(tape.constant(p.value));
  const ad::Var maps = psi.maps(leaves, tape.constant(incidence_features(g, field)));
  const int d = psi.dim();
  std::vector<Matrix> out;
  out.reserve(maps.dim(0));
  const ad::Tensor& v = maps.value();
  for (int k = 0; k < maps.dim(0); ++k) {
    out.push_back(v.as_matrix(maps.dim(0) * d, d).block(k * d, 0, d, d));
  }
  return RestrictionMapSet(g, d, psi.map_class(), std::move(out));
}

}  // namespace gsheaf
