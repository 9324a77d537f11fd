#include "gsheaf/autodiff/optim.hpp"

#include <cmath>

#include "gsheaf/error.hpp"

namespace gsheaf::ad {

int ParameterSet::add(std::string name, Tensor value, bool sheaf) {
  if (find(name) >= 0) throw ParameterError("duplicate parameter '" + name + "'");
  params_.push_back({std::move(name), std::move(value), sheaf});
  return size() - 1;
}

int ParameterSet::find(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return -1;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void Adam::step(ParameterSet& params, const std::vector<Tensor>& grads) {
  if (static_cast<int>(grads.size()) != params.size()) {
    throw ShapeError("adam: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value.shape(), 0.0);
      v_.emplace_back(p.value.shape(), 0.0);
    }
  }
  if (static_cast<int>(m_.size()) != params.size()) throw ShapeError("adam: parameter set changed");
  ++steps_;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(steps_));
  for (int k = 0; k < params.size(); ++k) {
    Tensor& p = params[k].value;
    const Tensor& g = grads[k];
    if (!g.same_shape(p) || !m_[k].same_shape(p)) {
      throw ShapeError("adam: gradient shape mismatch for '" + params[k].name + "'");
    }
    const double decay = params[k].sheaf ? opts_.sheaf_decay : opts_.weight_decay;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[k][i] = opts_.beta1 * m_[k][i] + (1.0 - opts_.beta1) * g[i];
      v_[k][i] = opts_.beta2 * v_[k][i] + (1.0 - opts_.beta2) * g[i] * g[i];
      const double mhat = m_[k][i] / c1;
      const double vhat = v_[k][i] / c2;
      p[i] -= opts_.lr * decay * p[i] + opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
    }
  }
}

}  // namespace gsheaf::ad
