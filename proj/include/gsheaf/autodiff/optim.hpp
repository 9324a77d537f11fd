#pragma once

#include <string>
#include <vector>

#include "gsheaf/autodiff/tensor.hpp"

namespace gsheaf::ad {

struct Parameter {
  std::string name;
  Tensor value;
  bool sheaf = false;  // restriction-map learner; uses the sheaf decay
};

/// Ordered, named parameter tensors of one model.
class ParameterSet {
 public:
  int add(std::string name, Tensor value, bool sheaf = false);
  int size() const { return static_cast<int>(params_.size()); }
  Parameter& operator[](int i) { return params_[i]; }
  const Parameter& operator[](int i) const { return params_[i]; }
  int find(const std::string& name) const;  // -1 if absent
  std::size_t scalar_count() const;
  std::vector<Parameter>::const_iterator begin() const { return params_.begin(); }
  std::vector<Parameter>::const_iterator end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
};

struct AdamOptions {
  double lr = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-3;
  double sheaf_decay = 5e-3;
};

/// Adam with decoupled weight decay:
///   p <- p - lr * decay * p - lr * m_hat / (sqrt(v_hat) + eps).
class Adam {
 public:
  explicit Adam(AdamOptions opts) : opts_(opts) {}

  void step(ParameterSet& params, const std::vector<Tensor>& grads);

  double lr() const { return opts_.lr; }
  void set_lr(double lr) { opts_.lr = lr; }
  long steps() const { return steps_; }
  const AdamOptions& options() const { return opts_; }

 private:
  AdamOptions opts_;
  long steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace gsheaf::ad
