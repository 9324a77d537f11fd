#pragma once

#include <functional>
#include <vector>

#include "gsheaf/autodiff/tensor.hpp"

namespace gsheaf::ad {

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  const std::vector<int>& shape() const { return value().shape(); }
  int dim(int axis) const { return value().dim(axis); }
  bool requires_grad() const;
  /// Gradient after Tape::backward; empty for nodes that do not require grad.
  const Tensor& grad() const;
};

/// Records values and local backward rules; confined to one thread.
///
/// Nodes are appended in creation order, which is a topological order, so
/// backward() visits them once each in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Var constant(Tensor value);
  Var parameter(Tensor value);
  /// Appends an op result. It requires grad iff some parent does; the rule
  /// is dropped otherwise.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward);
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn backward);

  /// Seeds d(out)/d(out) = 1 for a scalar output and runs the rules.
  void backward(Var out);

  const Tensor& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  const Tensor& grad(int id) const { return nodes_[id].grad; }
  /// Gradient buffer of a node that requires grad (allocated by backward()).
  Tensor& grad_mut(int id) { return nodes_[id].grad; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(Tensor value, bool requires_grad, BackwardFn backward);

  std::vector<Node> nodes_;
};

}  // namespace gsheaf::ad
