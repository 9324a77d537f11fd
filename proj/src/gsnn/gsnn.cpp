#include <cmath>

#include "gsheaf/autodiff/sheaf_ops.hpp"
#include "gsheaf/error.hpp"
#include "gsheaf/gsnn/layers.hpp"
#include "gsheaf/gsnn/model.hpp"
#include "gsheaf/gsnn/restriction.hpp"

namespace gsheaf {

std::unique_ptr<Model> make_baseline(const ModelConfig& cfg, const Dataset& ds);

namespace {

const std::vector<std::pair<ModelKind, const char*>>& kind_names() {
  static const std::vector<std::pair<ModelKind, const char*>> names = {
      {ModelKind::mlp, "mlp"},
      {ModelKind::gcn, "gcn"},
      {ModelKind::gaussian_gcn, "gaussian_gcn"},
      {ModelKind::nsd_diag, "nsd_diag"},
      {ModelKind::nsd_orth, "nsd_orth"},
      {ModelKind::nsd_gen, "nsd_gen"},
      {ModelKind::gsnn_diag, "gsnn_diag"},
      {ModelKind::gsnn_orth, "gsnn_orth"},
      {ModelKind::gsnn_gen, "gsnn_gen"},
      {ModelKind::gsnn_graphlap, "gsnn_graphlap"},
  };
  return names;
}

MapClass gsnn_map_class(ModelKind k) {
  switch (k) {
    case ModelKind::gsnn_diag:
      return MapClass::diagonal;
    case ModelKind::gsnn_gen:
      return MapClass::general;
    default:
      return MapClass::orthogonal;
  }
}

// softplus(x) = 1 on the diagonal, ~0.018 elsewhere.
constexpr double kCovMixDiag = 0.5413248546129181;
constexpr double kCovMixOff = -4.0;

class GsnnModel final : public Model {
 public:
  GsnnModel(const ModelConfig& cfg, const Dataset& ds) : Model(cfg) {
    graph_ = ds.graph;
    n_ = ds.num_nodes();
    s_ = ds.input_dim();
    d_ = cfg.stalk_dim;
    h_ = cfg.hidden;
    out_ = ds.target_dim();
    graphlap_ = cfg.kind == ModelKind::gsnn_graphlap;
    plan_ = ad::IncidencePlan::build(graph_, h_);

    mu_ = ad::Tensor({n_, s_});
    sigma_ = ad::Tensor({n_, s_, s_});
    for (int v = 0; v < n_; ++v) {
      for (int i = 0; i < s_; ++i) {
        mu_[v * s_ + i] = ds.inputs[v].mean[i];
        for (int j = 0; j < s_; ++j) sigma_[(v * s_ + i) * s_ + j] = ds.inputs[v].cov.matrix()(i, j);
      }
    }
    for (int v = 0; v < n_; ++v) {
      for (int c = 0; c < h_; ++c) {
        embed_a_.push_back(c);
        embed_s_.push_back(v);
        embed_o_.push_back(v * h_ + c);
      }
    }

    Rng rng(cfg.seed);
    embed_ = params_.add("embed", ad::glorot({h_, d_, s_}, s_, d_, rng));
    stalk_mix_ = params_.add("stalk_mix", ad::Tensor::from_matrix(Matrix::Identity(d_, d_)));
    mean_mix_ = params_.add("mean_mix", ad::Tensor::from_matrix(Matrix::Identity(h_, h_)));
    Matrix cov_raw = Matrix::Constant(h_, h_, kCovMixOff);
    cov_raw.diagonal().setConstant(kCovMixDiag);
    cov_mix_ = params_.add("cov_mix", ad::Tensor::from_matrix(cov_raw));
    if (graphlap_) {
      identity_maps_ = ad::Tensor({plan_.num_incidences, d_, d_});
      for (int k = 0; k < plan_.num_incidences; ++k) {
        for (int i = 0; i < d_; ++i) identity_maps_[(k * d_ + i) * d_ + i] = 1.0;
      }
    } else {
      features_ = incidence_features(graph_, ds.inputs);
      psi_ = RestrictionNetwork(params_, "psi", 2 * s_ + 2, cfg.map_hidden, d_,
                                gsnn_map_class(cfg.kind), rng);
    }
    read1_ = Linear::create(params_, "readout1", d_, cfg.readout_hidden, rng);
    read2_ = Linear::create(params_, "readout2", cfg.readout_hidden, out_, rng);
  }

  ForwardResult forward(ad::Tape& tape, const std::vector<ad::Var>& p, Rng& noise,
                        bool energies) const override {
    using namespace ad;
    ForwardResult res;
    const Var mu_in = tape.constant(mu_);
    const Var sigma_in = tape.constant(sigma_);

    // Step 1: per-channel embedding into the stalks.
    const Var wo = p[embed_];
    Var mu = transpose_batched(
        reshape(matmul(mu_in, reshape(wo, {h_ * d_, s_}), false, true), {n_, h_, d_}));
    Var sigma = congruence_indexed(wo, sigma_in, embed_a_, embed_s_, embed_o_, n_ * h_);
    res.covariances.push_back(sigma);

    // Step 2: stalk mixing (W1) and channel mixing (W2; nonnegative for covariances).
    const Var w1 = reshape(p[stalk_mix_], {1, d_, d_});
    mu = reshape(matmul(reshape(bmm(w1, mu), {n_ * d_, h_}), p[mean_mix_]), {n_, d_, h_});
    sigma = congruence(w1, sigma);
    sigma = reshape(channel_mix(reshape(sigma, {n_, h_, d_ * d_}), softplus(p[cov_mix_])),
                    {n_ * h_, d_, d_});
    res.covariances.push_back(sigma);

    // Step 3: l-th power diffusion with maps learned once from the inputs.
    const Var maps = graphlap_ ? tape.constant(identity_maps_)
                               : psi_.maps(p, tape.constant(features_));
    const Var blocks = sheaf_blocks(maps, plan_);
    for (int layer = 0; layer < cfg_.layers; ++layer) {
      mu = mean_diffusion_step(blocks, mu, plan_);
      sigma = cov_diffusion_step(blocks, sigma, plan_);
      res.covariances.push_back(sigma);
      if (energies) res.layer_energies.push_back(energy(blocks.value(), mu.value()));
    }

    // Step 4: channel average, reparameterized draws, per-sample readout.
    Tensor avg({h_, 1}, 1.0 / h_);
    const Var mu_bar = reshape(matmul(reshape(mu, {n_ * d_, h_}), tape.constant(avg)), {n_, d_});
    const Var sigma_bar =
        reshape(scale(sum_middle(reshape(sigma, {n_, h_, d_ * d_})), 1.0 / h_), {n_, d_, d_});
    res.covariances.push_back(sigma_bar);
    const int t = cfg_.samples;
    Tensor z({n_, t, d_});
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& x : z.values()) x = normal(noise);
    const Var draws = sample_affine(mu_bar, cholesky(sigma_bar), z);
    res.samples = read2_(p, elu(read1_(p, draws)));
    res.per_node = t;
    return res;
  }

 private:
  double energy(const ad::Tensor& blocks, const ad::Tensor& mu) const {
    ad::Tape scratch;
    const ad::Var x = scratch.constant(mu);
    const ad::Var lx = ad::apply_normalized_mean(scratch.constant(blocks), x, plan_);
    double e = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) e += mu[i] * lx.value()[i];
    return e;
  }

  Graph graph_;
  ad::IncidencePlan plan_;
  int n_ = 0, s_ = 0, d_ = 0, h_ = 0, out_ = 0;
  bool graphlap_ = false;
  ad::Tensor mu_, sigma_, features_, identity_maps_;
  std::vector<int> embed_a_, embed_s_, embed_o_;
  int embed_ = -1, stalk_mix_ = -1, mean_mix_ = -1, cov_mix_ = -1;
  RestrictionNetwork psi_;
  Linear read1_, read2_;
};

}  // namespace

std::string to_string(ModelKind k) {
  for (const auto& [kind, name] : kind_names()) {
    if (kind == k) return name;
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
  for (const auto& [kind, name] : kind_names()) {
    if (s == name) return kind;
  }
  throw ParameterError("unknown model '" + s + "'");
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds = [] {
    std::vector<ModelKind> out;
    for (const auto& [kind, name] : kind_names()) out.push_back(kind);
    return out;
  }();
  return kinds;
}

bool is_gsnn(ModelKind k) {
  return k == ModelKind::gsnn_diag || k == ModelKind::gsnn_orth || k == ModelKind::gsnn_gen ||
         k == ModelKind::gsnn_graphlap;
}

void ModelConfig::validate() const {
  if (stalk_dim < 1 || hidden < 1 || map_hidden < 1 || readout_hidden < 1 || samples < 1) {
    throw ParameterError("model config: widths and sample counts must be >= 1");
  }
  if (layers < 0) throw ParameterError("model config: layers must be >= 0");
  if (epochs < 0) throw ParameterError("model config: epochs must be >= 0");
  if (patience < 1 || lr_patience < 1) throw ParameterError("model config: patience must be >= 1");
  if (!(lr > 0.0)) throw ParameterError("model config: learning rate must be positive");
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw ParameterError("model config: lr factor in (0,1)");
  if (weight_decay < 0.0 || sheaf_decay < 0.0) throw ParameterError("model config: negative decay");
  if (sinkhorn.iters < 1) throw ParameterError("model config: sinkhorn iterations must be >= 1");
}

std::vector<ad::Var> Model::load(ad::Tape& tape, bool trainable) const {
  std::vector<ad::Var> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(trainable ? tape.parameter(p.value) : tape.constant(p.value));
  return out;
}

std::unique_ptr<Model> make_model(const ModelConfig& cfg, const Dataset& ds) {
  cfg.validate();
  ds.validate();
  if (is_gsnn(cfg.kind)) return std::make_unique<GsnnModel>(cfg, ds);
  return make_baseline(cfg, ds);
}

std::vector<SampleSet> sample_nodes(const Model& model, Rng& noise) {
  ad::Tape tape;
  const ForwardResult r = model.forward(tape, model.load(tape, false), noise, false);
  const int per = r.per_node;
  const int k = r.samples.dim(1);
  const int n = r.samples.dim(0) / per;
  const auto all = r.samples.value().as_matrix(n * per, k);
  std::vector<SampleSet> out;
  for (int v = 0; v < n; ++v) out.push_back(SampleSet{Matrix(all.middleRows(v * per, per))});
  return out;
}

}  // namespace gsheaf
