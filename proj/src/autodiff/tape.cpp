#include "gsheaf/autodiff/tape.hpp"

#include "gsheaf/error.hpp"

namespace gsheaf::ad {

const Tensor& Var::value() const { return tape->value(id); }
bool Var::requires_grad() const { return tape->requires_grad(id); }
const Tensor& Var::grad() const { return tape->grad(id); }

Var Tape::push(Tensor value, bool requires_grad, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(Tensor value) { return push(std::move(value), true, nullptr); }

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
  bool rg = false;
  for (const Var& p : parents) rg = rg || requires_grad(p.id);
  return push(std::move(value), rg, std::move(backward));
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackwardFn backward) {
  bool rg = false;
  for (const Var& p : parents) rg = rg || requires_grad(p.id);
  return push(std::move(value), rg, std::move(backward));
}

void Tape::backward(Var out) {
  if (out.tape != this) throw ParameterError("backward: variable belongs to another tape");
  if (value(out.id).size() != 1) throw ShapeError("backward: output is not a scalar");
  for (auto& node : nodes_) {
    node.grad = node.requires_grad ? Tensor(node.value.shape(), 0.0) : Tensor();
  }
  if (!nodes_[out.id].requires_grad) return;
  nodes_[out.id].grad[0] = 1.0;
  for (int i = out.id; i >= 0; --i) {
    if (nodes_[i].requires_grad && nodes_[i].backward) nodes_[i].backward(*this, i);
  }
}

}  // namespace gsheaf::ad
