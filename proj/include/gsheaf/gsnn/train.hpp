#pragma once

#include <string>
#include <vector>

#include "gsheaf/gsnn/model.hpp"

namespace gsheaf {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;  // -1: initial parameters kept
  double best_val = 0.0;
  double initial_val = 0.0;
  bool aborted = false;
  std::string abort_reason;
  double seconds = 0.0;
};

/// Full-graph Adam training on the mean Sinkhorn loss of the training nodes,
/// with plateau learning-rate reduction, early stopping and restoration of
/// the best-validation parameters.
TrainResult train(Model& model, const Dataset& ds);

struct EvalResult {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  std::vector<double> per_node;
};

/// Per-node sqrt(max(0, Sinkhorn estimate)) between model draws and targets.
EvalResult evaluate(const Model& model, const Dataset& ds, SplitName split);

/// Same metric for externally supplied draws, (n * per_node, k) rows.
EvalResult evaluate_samples(const ad::RowMatrix& samples, int per_node, const Dataset& ds,
                            SplitName split, const ad::SinkhornOptions& opts);

/// Mean Sinkhorn loss over `split` for fixed evaluation noise.
double split_loss(const Model& model, const Dataset& ds, SplitName split);

/// Per-layer Dirichlet energies for fixed evaluation noise.
std::vector<double> layer_energies(const Model& model);

/// Noise seed used for validation and evaluation draws.
std::uint64_t evaluation_seed(const ModelConfig& cfg);

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path);

}  // namespace gsheaf
