#include "gsheaf/autodiff/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "gsheaf/error.hpp"
#include "sinkhorn_kernels.hpp"

namespace gsheaf::ad {

namespace {

RowMatrix cost_matrix(const RowMatrix& x, const RowMatrix& y) {
  RowMatrix c(x.rows(), y.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) c(i, j) = (x.row(i) - y.row(j)).squaredNorm();
  }
  if (!c.allFinite()) throw NumericError("sinkhorn: non-finite cost matrix");
  return c;
}

double median_of(const RowMatrix& c) {
  std::vector<double> v(c.data(), c.data() + c.size());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  }
  return m;
}

}  // namespace

double median_cost(const RowMatrix& x, const RowMatrix& y) {
  return median_of(cost_matrix(x, y));
}

SinkhornResult sinkhorn(const RowMatrix& x, const RowMatrix& y, const SinkhornOptions& opts,
                        bool with_grad) {
  const int t = static_cast<int>(x.rows());
  const int s = static_cast<int>(y.rows());
  if (t < 1 || s < 1) throw ParameterError("sinkhorn: empty sample set");
  if (x.cols() != y.cols()) throw ShapeError("sinkhorn: sample dimensions differ");
  if (opts.iters < 1) throw ParameterError("sinkhorn: iters must be >= 1");
  if (!x.allFinite() || !y.allFinite()) throw NumericError("sinkhorn: non-finite samples");
  const RowMatrix c = cost_matrix(x, y);
  SinkhornResult r;
  r.epsilon = opts.epsilon > 0.0 ? opts.epsilon : opts.median_fraction * median_of(c);
  // Identical point clouds give a zero median; any positive value is exact then.
  if (!(r.epsilon > 1e-12)) r.epsilon = 1e-12;
  const double eps = r.epsilon;
  const double log_a = -std::log(static_cast<double>(t));
  const double log_b = -std::log(static_cast<double>(s));
  const RowMatrix ct = c.transpose();
  const std::vector<double> wa(t, log_a), wb(s, log_b);

  // History of potentials: g[0] = 0, then (f[k], g[k]) for k = 1..iters.
  const int iters = opts.iters;
  std::vector<double> f_hist(static_cast<std::size_t>(iters + 1) * t, 0.0);
  std::vector<double> g_hist(static_cast<std::size_t>(iters + 1) * s, 0.0);
  for (int k = 1; k <= iters; ++k) {
    double* fk = f_hist.data() + static_cast<std::size_t>(k) * t;
    double* gk = g_hist.data() + static_cast<std::size_t>(k) * s;
    const double* g_prev = g_hist.data() + static_cast<std::size_t>(k - 1) * s;
    detail::softmin_rows(c.data(), t, s, g_prev, wb.data(), eps, fk);
    detail::softmin_rows(ct.data(), s, t, fk, wa.data(), eps, gk);
  }
  const double* f = f_hist.data() + static_cast<std::size_t>(iters) * t;
  const double* g = g_hist.data() + static_cast<std::size_t>(iters) * s;
  RowMatrix p(t, s);
  r.value = detail::transport_cost(c.data(), t, s, f, g, log_a, log_b, eps, p.data());
  if (!std::isfinite(r.value)) throw NumericError("sinkhorn: non-finite transport cost");
  if (!with_grad) return r;

  // Direct dependence of <P, C> on C, f and g.
  RowMatrix c_bar = p.cwiseProduct((1.0 - c.array() / eps).matrix());
  std::vector<double> f_bar(t), g_bar(s);
  const RowMatrix pc = p.cwiseProduct(c) / eps;
  for (int i = 0; i < t; ++i) f_bar[i] = pc.row(i).sum();
  for (int j = 0; j < s; ++j) g_bar[j] = pc.col(j).sum();
  for (int k = iters; k >= 1; --k) {
    detail::sinkhorn_backward_step(c.data(), t, s, f_hist.data() + static_cast<std::size_t>(k) * t,
                                   g_hist.data() + static_cast<std::size_t>(k) * s,
                                   g_hist.data() + static_cast<std::size_t>(k - 1) * s, log_a,
                                   log_b, eps, f_bar.data(), g_bar.data(), c_bar.data());
  }
  // C_ij = |x_i - y_j|^2
  const Eigen::VectorXd row_sum = c_bar.rowwise().sum();
  const Eigen::VectorXd col_sum = c_bar.colwise().sum().transpose();
  r.grad_x = 2.0 * (row_sum.asDiagonal() * x - c_bar * y);
  r.grad_y = 2.0 * (col_sum.asDiagonal() * y - c_bar.transpose() * x);
  return r;
}

Var sinkhorn_w2(Var x, Var y, const SinkhornOptions& opts) {
  if (x.value().rank() != 2 || y.value().rank() != 2) {
    throw ShapeError("sinkhorn_w2: expected sample matrices");
  }
  const int t = x.dim(0), s = y.dim(0), d = x.dim(1);
  const RowMatrix xm = x.value().as_matrix(t, d);
  const RowMatrix ym = y.value().as_matrix(s, y.dim(1));
  const bool need = x.requires_grad() || y.requires_grad();
  auto res = std::make_shared<SinkhornResult>(sinkhorn(xm, ym, opts, need));
  return x.tape->record(Tensor::scalar(res->value), {x, y}, [=](Tape& tp, int self) {
    const double g = tp.grad(self)[0];
    if (tp.requires_grad(x.id)) tp.grad_mut(x.id).as_matrix(t, d) += g * res->grad_x;
    if (tp.requires_grad(y.id)) tp.grad_mut(y.id).as_matrix(s, d) += g * res->grad_y;
  });
}

Var sinkhorn_loss(Var samples, int per_node, const std::vector<RowMatrix>& targets,
                  const std::vector<int>& nodes, const SinkhornOptions& opts) {
  if (samples.value().rank() != 2) throw ShapeError("sinkhorn_loss: samples must be rank 2");
  if (nodes.empty()) throw ParameterError("sinkhorn_loss: no nodes");
  const int k = samples.dim(1);
  if (per_node < 1 || samples.dim(0) % per_node != 0) {
    throw ShapeError("sinkhorn_loss: rows are not a multiple of the per-node count");
  }
  const int n = samples.dim(0) / per_node;
  if (static_cast<int>(targets.size()) != n) throw ShapeError("sinkhorn_loss: one target per node");
  const auto all = samples.value().as_matrix(n * per_node, k);
  const bool need = samples.requires_grad();
  auto grad = std::make_shared<RowMatrix>();
  if (need) *grad = RowMatrix::Zero(n * per_node, k);
  double total = 0.0;
  const double w = 1.0 / static_cast<double>(nodes.size());
  for (int v : nodes) {
    if (v < 0 || v >= n) throw ShapeError("sinkhorn_loss: node out of range");
    const RowMatrix xv = all.middleRows(static_cast<Eigen::Index>(v) * per_node, per_node);
    const SinkhornResult r = sinkhorn(xv, targets[v], opts, need);
    total += w * r.value;
    if (need) grad->middleRows(static_cast<Eigen::Index>(v) * per_node, per_node) += w * r.grad_x;
  }
  return samples.tape->record(Tensor::scalar(total), {samples}, [=](Tape& tp, int self) {
    tp.grad_mut(samples.id).as_matrix(n * per_node, k) += tp.grad(self)[0] * (*grad);
  });
}

}  // namespace gsheaf::ad
