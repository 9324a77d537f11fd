#include "gsheaf/gsnn/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "gsheaf/error.hpp"

namespace gsheaf {

namespace {

std::vector<ad::RowMatrix> target_matrices(const Dataset& ds) {
  std::vector<ad::RowMatrix> out;
  out.reserve(ds.targets.size());
  for (const SampleSet& s : ds.targets) out.emplace_back(s.rows);
  return out;
}

bool all_finite(const ad::Tensor& t) {
  for (double x : t.values()) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::vector<ad::Tensor> snapshot(const ad::ParameterSet& params) {
  std::vector<ad::Tensor> out;
  for (const auto& p : params) out.push_back(p.value);
  return out;
}

void restore(ad::ParameterSet& params, const std::vector<ad::Tensor>& values) {
  for (int i = 0; i < params.size(); ++i) params[i].value = values[i];
}

// Draws (n * per_node, k) for fixed evaluation noise.
ad::RowMatrix eval_draws(const Model& model, int& per_node) {
  Rng noise(evaluation_seed(model.config()));
  ad::Tape tape;
  const ForwardResult r = model.forward(tape, model.load(tape, false), noise, false);
  per_node = r.per_node;
  return r.samples.value().to_matrix();
}

std::vector<double> per_node_costs(const ad::RowMatrix& samples, int per_node, const Dataset& ds,
                                   const std::vector<int>& nodes,
                                   const ad::SinkhornOptions& opts) {
  std::vector<double> out;
  out.reserve(nodes.size());
  for (int v : nodes) {
    const ad::RowMatrix x = samples.middleRows(static_cast<Eigen::Index>(v) * per_node, per_node);
    const ad::RowMatrix y = ds.targets[v].rows;
    out.push_back(ad::sinkhorn(x, y, opts, false).value);
  }
  return out;
}

}  // namespace

std::uint64_t evaluation_seed(const ModelConfig& cfg) { return cfg.seed ^ 0x5DEECE66DULL; }

TrainResult train(Model& model, const Dataset& ds) {
  const auto start = std::chrono::steady_clock::now();
  const ModelConfig& cfg = model.config();
  const std::vector<ad::RowMatrix> targets = target_matrices(ds);
  const std::vector<int>& train_nodes = ds.nodes(SplitName::train);
  if (train_nodes.empty()) throw ParameterError("training split is empty");
  const bool has_val = !ds.nodes(SplitName::val).empty();

  ad::AdamOptions opts;
  opts.lr = cfg.lr;
  opts.weight_decay = cfg.weight_decay;
  opts.sheaf_decay = cfg.sheaf_decay;
  ad::Adam adam(opts);

  TrainResult res;
  const auto monitor = [&](double train_loss) {
    return has_val ? split_loss(model, ds, SplitName::val) : train_loss;
  };
  res.initial_val = has_val ? split_loss(model, ds, SplitName::val)
                            : std::numeric_limits<double>::infinity();
  res.best_val = res.initial_val;
  std::vector<ad::Tensor> best = snapshot(model.parameters());
  int since_best = 0;
  int since_lr_change = 0;
  double plateau_ref = res.best_val;

  Rng noise(cfg.seed + 1);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    ad::Tape tape;
    const std::vector<ad::Var> leaves = model.load(tape, true);
    double loss_value = 0.0;
    std::vector<ad::Tensor> grads;
    try {
      const ForwardResult r = model.forward(tape, leaves, noise, false);
      const ad::Var loss = ad::sinkhorn_loss(r.samples, r.per_node, targets, train_nodes, cfg.sinkhorn);
      loss_value = loss.value().item();
      if (!std::isfinite(loss_value)) throw NumericError("non-finite training loss");
      tape.backward(loss);
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        const ad::Tensor& g = leaves[i].grad();
        grads.push_back(g.size() == 0 ? ad::Tensor(leaves[i].shape(), 0.0) : g);
        if (!all_finite(grads.back())) throw NumericError("non-finite gradient for " + model.parameters()[i].name);
      }
    } catch (const Error& e) {
      res.aborted = true;
      res.abort_reason = "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }
    adam.step(model.parameters(), grads);

    const double val = monitor(loss_value);
    res.history.push_back({epoch, loss_value, val, adam.lr()});
    if (!std::isfinite(val)) {
      res.aborted = true;
      res.abort_reason = "epoch " + std::to_string(epoch) + ": non-finite validation loss";
      break;
    }
    if (val < res.best_val) {
      res.best_val = val;
      res.best_epoch = epoch;
      best = snapshot(model.parameters());
      since_best = 0;
    } else {
      ++since_best;
    }
    if (val < plateau_ref) {
      plateau_ref = val;
      since_lr_change = 0;
    } else if (++since_lr_change >= cfg.lr_patience) {
      adam.set_lr(adam.lr() * cfg.lr_factor);
      since_lr_change = 0;
    }
    if (since_best >= cfg.patience) break;
  }
  restore(model.parameters(), best);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

double split_loss(const Model& model, const Dataset& ds, SplitName split) {
  const std::vector<int>& nodes = ds.nodes(split);
  if (nodes.empty()) throw ParameterError("split is empty");
  int per_node = 0;
  const ad::RowMatrix draws = eval_draws(model, per_node);
  double total = 0.0;
  for (double c : per_node_costs(draws, per_node, ds, nodes, model.config().sinkhorn)) total += c;
  return total / static_cast<double>(nodes.size());
}

EvalResult evaluate_samples(const ad::RowMatrix& samples, int per_node, const Dataset& ds,
                            SplitName split, const ad::SinkhornOptions& opts) {
  const std::vector<int>& nodes = ds.nodes(split);
  if (nodes.empty()) throw ParameterError("split is empty");
  if (samples.rows() != static_cast<Eigen::Index>(ds.num_nodes()) * per_node) {
    throw ShapeError("evaluate: sample rows do not match nodes * per_node");
  }
  EvalResult res;
  for (double c : per_node_costs(samples, per_node, ds, nodes, opts)) {
    res.per_node.push_back(std::sqrt(std::max(0.0, c)));
  }
  const double n = static_cast<double>(res.per_node.size());
  for (double x : res.per_node) res.mean += x;
  res.mean /= n;
  if (res.per_node.size() > 1) {
    double ss = 0.0;
    for (double x : res.per_node) ss += (x - res.mean) * (x - res.mean);
    res.sd = std::sqrt(ss / (n - 1.0));
  }
  return res;
}

EvalResult evaluate(const Model& model, const Dataset& ds, SplitName split) {
  int per_node = 0;
  const ad::RowMatrix draws = eval_draws(model, per_node);
  return evaluate_samples(draws, per_node, ds, split, model.config().sinkhorn);
}

std::vector<double> layer_energies(const Model& model) {
  Rng noise(evaluation_seed(model.config()));
  ad::Tape tape;
  return model.forward(tape, model.load(tape, false), noise, true).layer_energies;
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw PathError("cannot write " + path);
  out << "epoch,train_loss,val_loss,lr\n" << std::setprecision(17);
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.lr << '\n';
  }
}

}  // namespace gsheaf
