#include "gsheaf/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace gsheaf::ad {

namespace {

double evaluate(const ScalarFn& fn, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> leaves;
  for (const auto& p : params) leaves.push_back(tape.parameter(p));
  return fn(tape, leaves).value().item();
}

}  // namespace

double grad_check(const ScalarFn& fn, const std::vector<Tensor>& params, double step) {
  std::vector<double> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const auto& p : params) leaves.push_back(tape.parameter(p));
    Var out = fn(tape, leaves);
    tape.backward(out);
    for (const Var& v : leaves) {
      const auto& g = v.grad().values();
      analytic.insert(analytic.end(), g.begin(), g.end());
    }
  }
  std::vector<double> numeric;
  std::vector<Tensor> probe = params;
  for (auto& p : probe) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double keep = p[i];
      p[i] = keep + step;
      const double up = evaluate(fn, probe);
      p[i] = keep - step;
      const double down = evaluate(fn, probe);
      p[i] = keep;
      numeric.push_back((up - down) / (2.0 * step));
    }
  }
  double diff = 0.0, na = 0.0, nf = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    na = std::max(na, std::abs(analytic[i]));
    nf = std::max(nf, std::abs(numeric[i]));
  }
  return diff / std::max({na, nf, 1e-12});
}

}  // namespace gsheaf::ad
