#include <cmath>

#include "gsheaf/autodiff/sheaf_ops.hpp"
#include "gsheaf/error.hpp"
#include "gsheaf/gsnn/baselines.hpp"
#include "gsheaf/gsnn/layers.hpp"
#include "gsheaf/gsnn/model.hpp"
#include "gsheaf/gsnn/restriction.hpp"

namespace gsheaf {

ad::Var nsd_update(ad::Var x, ad::Var blocks, ad::Var w1, ad::Var w2, ad::Var eps,
                   const ad::IncidencePlan& plan) {
  using namespace ad;
  const int n = x.dim(0), d = x.dim(1), h = x.dim(2);
  Var y = bmm(reshape(w1, {1, d, d}), x);
  y = reshape(matmul(reshape(y, {n * d, h}), w2), {n, d, h});
  const Var diffused = elu(apply_normalized_mean(blocks, y, plan));
  const Var kept = scale_rows(reshape(x, {n * d, h}), add_scalar(clamp(eps, -1.0, 1.0), 1.0));
  return sub(reshape(kept, {n, d, h}), diffused);
}

namespace {

int sample_count(const Dataset& ds) {
  if (ds.input_samples.empty()) throw ShapeError("dataset has no input samples");
  const int t = ds.input_samples.front().count();
  for (const SampleSet& s : ds.input_samples) {
    if (s.count() != t) throw ShapeError("input sample counts differ across nodes");
  }
  return t;
}

// (n * T, s) stacked input draws.
ad::Tensor stacked_inputs(const Dataset& ds) {
  const int n = ds.num_nodes(), t = sample_count(ds), s = ds.input_dim();
  ad::Tensor x({n * t, s});
  for (int v = 0; v < n; ++v) {
    for (int r = 0; r < t; ++r) {
      for (int j = 0; j < s; ++j) x[(v * t + r) * s + j] = ds.input_samples[v].rows(r, j);
    }
  }
  return x;
}

// Node means over T consecutive rows of (n * T, c).
Matrix node_means(const ad::Tensor& x, int n, int t) {
  const int c = x.dim(1);
  const auto m = x.as_matrix(n * t, c);
  Matrix out(n, c);
  for (int v = 0; v < n; ++v) out.row(v) = m.middleRows(v * t, t).colwise().mean();
  return out;
}

class MlpModel final : public Model {
 public:
  MlpModel(const ModelConfig& cfg, const Dataset& ds) : Model(cfg), graph_(ds.graph) {
    n_ = ds.num_nodes();
    t_ = sample_count(ds);
    x_ = stacked_inputs(ds);
    Rng rng(cfg.seed);
    int width = ds.input_dim();
    for (int l = 0; l < cfg.layers; ++l) {
      hidden_.push_back(Linear::create(params_, "hidden" + std::to_string(l), width, cfg.hidden, rng));
      width = cfg.hidden;
    }
    out_ = Linear::create(params_, "out", width, ds.target_dim(), rng);
  }

  ForwardResult forward(ad::Tape& tape, const std::vector<ad::Var>& p, Rng&,
                        bool energies) const override {
    ForwardResult res;
    ad::Var h = tape.constant(x_);
    for (const Linear& lin : hidden_) {
      h = ad::elu(lin(p, h));
      if (energies) res.layer_energies.push_back(graph_dirichlet_energy(graph_, node_means(h.value(), n_, t_)));
    }
    res.samples = out_(p, h);
    res.per_node = t_;
    return res;
  }

 private:
  Graph graph_;
  int n_ = 0, t_ = 0;
  ad::Tensor x_;
  std::vector<Linear> hidden_;
  Linear out_;
};

class GcnModel final : public Model {
 public:
  GcnModel(const ModelConfig& cfg, const Dataset& ds)
      : Model(cfg), graph_(ds.graph), prop_(gcn_propagation(ds.graph)) {
    n_ = ds.num_nodes();
    t_ = sample_count(ds);
    x_ = stacked_inputs(ds);
    Rng rng(cfg.seed);
    int width = ds.input_dim();
    for (int l = 0; l < cfg.layers; ++l) {
      layers_.push_back(Linear::create(params_, "gcn" + std::to_string(l), width, cfg.hidden, rng));
      width = cfg.hidden;
    }
    out_ = Linear::create(params_, "out", width, ds.target_dim(), rng);
  }

  ForwardResult forward(ad::Tape& tape, const std::vector<ad::Var>& p, Rng&,
                        bool energies) const override {
    using namespace ad;
    ForwardResult res;
    Var h = tape.constant(x_);
    for (const Linear& lin : layers_) {
      // Each draw index is propagated as its own feature channel; the bias
      // is added after propagation.
      const Var z = reshape(matmul(h, p[lin.w]), {n_, t_ * lin.out});
      h = elu(add_bias(reshape(sparse_matmul(prop_, z), {n_ * t_, lin.out}), p[lin.b]));
      if (energies) res.layer_energies.push_back(graph_dirichlet_energy(graph_, node_means(h.value(), n_, t_)));
    }
    res.samples = out_(p, h);
    res.per_node = t_;
    return res;
  }

 private:
  Graph graph_;
  ad::SparseRowMatrix prop_;
  int n_ = 0, t_ = 0;
  ad::Tensor x_;
  std::vector<Linear> layers_;
  Linear out_;
};

class GaussianGcnModel final : public Model {
 public:
  GaussianGcnModel(const ModelConfig& cfg, const Dataset& ds)
      : Model(cfg), graph_(ds.graph), prop_(gcn_propagation(ds.graph)) {
    n_ = ds.num_nodes();
    const int s = ds.input_dim();
    out_dim_ = ds.target_dim();
    const int width_in = s + s * (s + 1) / 2;
    x_ = ad::Tensor({n_, width_in});
    for (int v = 0; v < n_; ++v) {
      const Gaussian& g = ds.inputs[v];
      int c = 0;
      for (int i = 0; i < s; ++i) x_[v * width_in + c++] = g.mean[i];
      for (int i = 0; i < s; ++i) {
        for (int j = i; j < s; ++j) x_[v * width_in + c++] = g.cov.matrix()(i, j);
      }
    }
    Rng rng(cfg.seed);
    int width = width_in;
    for (int l = 0; l < cfg.layers; ++l) {
      layers_.push_back(Linear::create(params_, "gcn" + std::to_string(l), width, cfg.hidden, rng));
      width = cfg.hidden;
    }
    const int q = out_dim_ * (out_dim_ + 1) / 2;
    mean_head_ = Linear::create(params_, "mean_head", width, out_dim_, rng);
    cov_head_ = Linear::create(params_, "cov_head", width, q, rng);
    var_map_ = Linear::create(params_, "var_map", q, out_dim_, rng);
  }

  ForwardResult forward(ad::Tape& tape, const std::vector<ad::Var>& p, Rng& noise,
                        bool energies) const override {
    using namespace ad;
    ForwardResult res;
    Var h = tape.constant(x_);
    for (const Linear& lin : layers_) {
      h = elu(add_bias(sparse_matmul(prop_, matmul(h, p[lin.w])), p[lin.b]));
      if (energies) res.layer_energies.push_back(graph_dirichlet_energy(graph_, h.value().to_matrix()));
    }
    const Var mu = mean_head_(p, h);
    // Standard deviations exp(v / 2) of a diagonal covariance exp(v).
    const Var sd = exp(scale(var_map_(p, cov_head_(p, h)), 0.5));
    const int t = cfg_.samples;
    Tensor z({n_, t, out_dim_});
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& x : z.values()) x = normal(noise);
    res.samples = sample_affine(mu, diag_embed(sd), z);
    res.per_node = t;
    return res;
  }

 private:
  Graph graph_;
  ad::SparseRowMatrix prop_;
  int n_ = 0, out_dim_ = 0;
  ad::Tensor x_;
  std::vector<Linear> layers_;
  Linear mean_head_, cov_head_, var_map_;
};

MapClass nsd_map_class(ModelKind k) {
  switch (k) {
    case ModelKind::nsd_diag:
      return MapClass::diagonal;
    case ModelKind::nsd_gen:
      return MapClass::general;
    default:
      return MapClass::orthogonal;
  }
}

class NsdModel final : public Model {
 public:
  NsdModel(const ModelConfig& cfg, const Dataset& ds) : Model(cfg) {
    n_ = ds.num_nodes();
    t_ = sample_count(ds);
    d_ = cfg.stalk_dim;
    h_ = cfg.hidden;
    out_dim_ = ds.target_dim();
    plan_ = ad::IncidencePlan::build(ds.graph, h_);
    const ad::Tensor stacked = stacked_inputs(ds);
    x_ = stacked.reshaped({n_, t_ * ds.input_dim()});
    Rng rng(cfg.seed);
    encoder_ = Linear::create(params_, "encoder", t_ * ds.input_dim(), d_ * h_, rng);
    for (int l = 0; l < cfg.layers; ++l) {
      const std::string name = "layer" + std::to_string(l);
      Layer layer;
      layer.phi = RestrictionNetwork(params_, name + ".phi", 2 * d_ * h_, cfg.map_hidden, d_,
                                     nsd_map_class(cfg.kind), rng);
      layer.w1 = params_.add(name + ".w1", ad::glorot({d_, d_}, d_, d_, rng));
      layer.w2 = params_.add(name + ".w2", ad::glorot({h_, h_}, h_, h_, rng));
      layer.eps = params_.add(name + ".eps", ad::Tensor({n_ * d_}, 0.0));
      layers_.push_back(layer);
    }
    decoder_ = Linear::create(params_, "decoder", d_ * h_, t_ * out_dim_, rng);
  }

  ForwardResult forward(ad::Tape& tape, const std::vector<ad::Var>& p, Rng&,
                        bool energies) const override {
    using namespace ad;
    ForwardResult res;
    Var x = reshape(encoder_(p, tape.constant(x_)), {n_, d_, h_});
    for (const Layer& layer : layers_) {
      const Var flat = reshape(x, {n_, d_ * h_});
      const Var features = concat_cols({gather(flat, plan_.node), gather(flat, plan_.partner_node)});
      const Var blocks = sheaf_blocks(layer.phi.maps(p, features), plan_);
      x = nsd_update(x, blocks, p[layer.w1], p[layer.w2], p[layer.eps], plan_);
      if (energies) {
        Tape scratch;
        const Var lx = apply_normalized_mean(scratch.constant(blocks.value()),
                                             scratch.constant(x.value()), plan_);
        double e = 0.0;
        for (std::size_t i = 0; i < x.value().size(); ++i) e += x.value()[i] * lx.value()[i];
        res.layer_energies.push_back(e);
      }
    }
    res.samples = reshape(decoder_(p, reshape(x, {n_, d_ * h_})), {n_ * t_, out_dim_});
    res.per_node = t_;
    return res;
  }

 private:
  struct Layer {
    RestrictionNetwork phi;
    int w1 = -1, w2 = -1, eps = -1;
  };

  int n_ = 0, t_ = 0, d_ = 0, h_ = 0, out_dim_ = 0;
  ad::IncidencePlan plan_;
  ad::Tensor x_;
  Linear encoder_, decoder_;
  std::vector<Layer> layers_;
};

}  // namespace

std::unique_ptr<Model> make_baseline(const ModelConfig& cfg, const Dataset& ds) {
  switch (cfg.kind) {
    case ModelKind::mlp:
      return std::make_unique<MlpModel>(cfg, ds);
    case ModelKind::gcn:
      return std::make_unique<GcnModel>(cfg, ds);
    case ModelKind::gaussian_gcn:
      return std::make_unique<GaussianGcnModel>(cfg, ds);
    case ModelKind::nsd_diag:
    case ModelKind::nsd_orth:
    case ModelKind::nsd_gen:
      return std::make_unique<NsdModel>(cfg, ds);
    default:
      throw ParameterError("not a baseline model: " + to_string(cfg.kind));
  }
}

}  // namespace gsheaf
