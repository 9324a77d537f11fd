#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gsheaf/autodiff/ops.hpp"
#include "gsheaf/autodiff/optim.hpp"
#include "gsheaf/autodiff/sinkhorn.hpp"
#include "gsheaf/data.hpp"

namespace gsheaf {

enum class ModelKind {
  mlp,
  gcn,
  gaussian_gcn,
  nsd_diag,
  nsd_orth,
  nsd_gen,
  gsnn_diag,
  gsnn_orth,
  gsnn_gen,
  gsnn_graphlap,
};

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);
const std::vector<ModelKind>& all_model_kinds();
bool is_gsnn(ModelKind k);

struct ModelConfig {
  ModelKind kind = ModelKind::gsnn_orth;
  int stalk_dim = 2;
  int hidden = 16;  // channels for GSNN / NSD, feature width for the baselines
  int layers = 2;
  int map_hidden = 32;
  int readout_hidden = 32;
  int samples = 30;  // draws per node for models that sample a Gaussian
  double lr = 5e-3;
  int epochs = 1500;
  int patience = 100;
  int lr_patience = 20;
  double lr_factor = 0.5;
  double weight_decay = 5e-3;
  double sheaf_decay = 5e-3;
  ad::SinkhornOptions sinkhorn;
  std::uint64_t seed = 0;

  /// Throws ParameterError on invalid counts.
  void validate() const;
};

struct ForwardResult {
  ad::Var samples;  // (n * per_node, out)
  int per_node = 0;
  /// Dirichlet energy of the mean features after each layer (empty unless requested).
  std::vector<double> layer_energies;
  /// Intermediate covariance tensors (B, d, d), GSNN only.
  std::vector<ad::Var> covariances;
};

/// A trainable model bound to one dataset's graph and inputs.
class Model {
 public:
  virtual ~Model() = default;

  ModelKind kind() const { return cfg_.kind; }
  const ModelConfig& config() const { return cfg_; }
  ad::ParameterSet& parameters() { return params_; }
  const ad::ParameterSet& parameters() const { return params_; }

  /// `params` are leaves for parameters(), in order. `noise` feeds the
  /// sampling step.
  virtual ForwardResult forward(ad::Tape& tape, const std::vector<ad::Var>& params, Rng& noise,
                                bool energies) const = 0;

  /// Leaves for the current parameter values (trainable or constant).
  std::vector<ad::Var> load(ad::Tape& tape, bool trainable) const;

 protected:
  explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) {}

  ModelConfig cfg_;
  ad::ParameterSet params_;
};

/// Throws ParameterError / ShapeError when the config does not fit the dataset.
std::unique_ptr<Model> make_model(const ModelConfig& cfg, const Dataset& ds);

/// One forward pass split into per-node sample sets.
std::vector<SampleSet> sample_nodes(const Model& model, Rng& noise);

}  // namespace gsheaf
