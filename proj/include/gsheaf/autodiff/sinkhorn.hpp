#pragma once

#include <vector>

#include "gsheaf/autodiff/tape.hpp"

namespace gsheaf::ad {

struct SinkhornOptions {
  /// Absolute regularization; <= 0 selects median_fraction * median cost.
  double epsilon = 0.0;
  int iters = 100;
  double median_fraction = 0.1;
};

struct SinkhornResult {
  double value = 0.0;    // <P, C>, an estimate of W2^2
  double epsilon = 0.0;  // regularization actually used
  RowMatrix grad_x;      // d value / d X (empty unless requested)
  RowMatrix grad_y;
};

/// Median of the squared Euclidean cost matrix between the rows of x and y.
double median_cost(const RowMatrix& x, const RowMatrix& y);

/// Log-domain Sinkhorn between uniform empirical measures on the rows of x
/// and y with squared Euclidean cost, run for a fixed number of iterations.
/// The gradient, when requested, is exact for the unrolled iterations with
/// epsilon held fixed.
SinkhornResult sinkhorn(const RowMatrix& x, const RowMatrix& y, const SinkhornOptions& opts,
                        bool with_grad);

/// Differentiable scalar sinkhorn(x, y).value for x (T,d), y (S,d).
Var sinkhorn_w2(Var x, Var y, const SinkhornOptions& opts);

/// Mean over `nodes` of sinkhorn(samples of node v, targets[v]).value, where
/// `samples` is (n*per_node, k) with node v owning rows [v*per_node, (v+1)*per_node).
Var sinkhorn_loss(Var samples, int per_node, const std::vector<RowMatrix>& targets,
                  const std::vector<int>& nodes, const SinkhornOptions& opts);

}  // namespace gsheaf::ad
