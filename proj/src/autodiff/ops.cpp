#include "gsheaf/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gsheaf/error.hpp"
#include "kernels.hpp"

namespace gsheaf::ad {

using detail::gemm;

namespace {

void require_same(const Var& a, const Var& b, const char* op) {
  if (a.tape != b.tape) throw ParameterError(std::string(op) + ": operands on different tapes");
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

void require_rank(const Var& a, int rank, const char* op) {
  if (a.value().rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(a.shape()));
  }
}

void check_indices(const std::vector<int>& idx, int bound, const char* op) {
  for (int i : idx) {
    if (i < 0 || i >= bound) throw ShapeError(std::string(op) + ": index out of range");
  }
}

std::vector<int> trailing(const std::vector<int>& shape) {
  return std::vector<int>(shape.begin() + 1, shape.end());
}

}  // namespace

Var add(Var a, Var b) {
  require_same(a, b, "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    for (int id : {a.id, b.id}) {
      if (!t.requires_grad(id)) continue;
      Tensor& ga = t.grad_mut(id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same(a, b, "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a.id)) {
      Tensor& ga = t.grad_mut(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(b.id)) {
      Tensor& gb = t.grad_mut(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same(a, b, "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(a.id);
    const Tensor& bv = t.value(b.id);
    if (t.requires_grad(a.id)) {
      Tensor& ga = t.grad_mut(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b.id)) {
      Tensor& gb = t.grad_mut(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double c) {
  Tensor out = a.value();
  for (double& x : out.values()) x *= c;
  return a.tape->record(std::move(out), {a}, [a, c](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_mut(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Var add_scalar(Var a, double c) {
  Tensor out = a.value();
  for (double& x : out.values()) x += c;
  return a.tape->record(std::move(out), {a}, [a](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_mut(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

namespace {

double apply_act(Activation act, double x) {
  switch (act) {
    case Activation::identity:
      return x;
    case Activation::elu:
      return x > 0.0 ? x : std::expm1(x);
    case Activation::tanh:
      return std::tanh(x);
    case Activation::softplus:
      return x > 30.0 ? x : std::log1p(std::exp(x));
    case Activation::exp:
      return std::exp(x);
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
  }
  return x;
}

// Derivative from the input x and output y.
double act_slope(Activation act, double x, double y) {
  switch (act) {
    case Activation::identity:
      return 1.0;
    case Activation::elu:
      return x > 0.0 ? 1.0 : y + 1.0;
    case Activation::tanh:
      return 1.0 - y * y;
    case Activation::softplus:
      return 1.0 / (1.0 + std::exp(-x));
    case Activation::exp:
      return y;
    case Activation::relu:
      return x > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

}  // namespace

Var activate(Var a, Activation act) {
  Tensor out = a.value();
  for (double& x : out.values()) x = apply_act(act, x);
  return a.tape->record(std::move(out), {a}, [a, act](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(a.id);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad_mut(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * act_slope(act, x[i], y[i]);
  });
}

Var clamp(Var a, double lo, double hi) {
  Tensor out = a.value();
  for (double& x : out.values()) x = std::clamp(x, lo, hi);
  return a.tape->record(std::move(out), {a}, [a, lo, hi](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(a.id);
    Tensor& ga = t.grad_mut(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] >= lo && x[i] <= hi) ga[i] += g[i];
    }
  });
}

Var sum(Var a) {
  const auto& v = a.value().values();
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  return a.tape->record(Tensor::scalar(s), {a}, [a](Tape& t, int self) {
    const double g = t.grad(self)[0];
    for (double& x : t.grad_mut(a.id).values()) x += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var reshape(Var a, std::vector<int> shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape->record(std::move(out), {a}, [a](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_mut(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  const std::vector<int> tail = trailing(parts.front().shape());
  int rows = 0;
  for (const Var& p : parts) {
    if (p.value().rank() < 1 || trailing(p.shape()) != tail) {
      throw ShapeError("concat: trailing shapes differ");
    }
    rows += p.dim(0);
  }
  std::vector<int> shape = tail;
  shape.insert(shape.begin(), rows);
  Tensor out(shape);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy(p.value().values().begin(), p.value().values().end(), out.data() + offset);
    offset += p.value().size();
  }
  return parts.front().tape->record(std::move(out), parts, [parts](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    std::size_t offset = 0;
    for (const Var& p : parts) {
      const std::size_t n = t.value(p.id).size();
      if (t.requires_grad(p.id)) {
        Tensor& gp = t.grad_mut(p.id);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
      }
      offset += n;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  std::vector<Var> transposed;
  for (const Var& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.dim(0) != parts.front().dim(0)) throw ShapeError("concat_cols: row counts differ");
    transposed.push_back(transpose(p));
  }
  return transpose(concat(transposed));
}

Var gather(Var a, std::vector<int> idx) {
  if (a.value().rank() < 1) throw ShapeError("gather: scalar operand");
  check_indices(idx, a.dim(0), "gather");
  std::vector<int> shape = a.shape();
  const std::size_t row = a.value().size() / std::max(1, shape[0]);
  shape[0] = static_cast<int>(idx.size());
  Tensor out(shape);
  const double* src = a.value().data();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::copy(src + idx[k] * row, src + (idx[k] + 1) * row, out.data() + k * row);
  }
  return a.tape->record(std::move(out), {a}, [a, idx = std::move(idx), row](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    double* ga = t.grad_mut(a.id).data();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      for (std::size_t j = 0; j < row; ++j) ga[idx[k] * row + j] += g[k * row + j];
    }
  });
}

Var scatter_add(Var a, std::vector<int> idx, int rows) {
  if (a.value().rank() < 1 || static_cast<int>(idx.size()) != a.dim(0)) {
    throw ShapeError("scatter_add: index count does not match rows");
  }
  check_indices(idx, rows, "scatter_add");
  std::vector<int> shape = a.shape();
  const std::size_t row = a.value().size() / std::max(1, shape[0]);
  shape[0] = rows;
  Tensor out(shape);
  const double* src = a.value().data();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    for (std::size_t j = 0; j < row; ++j) out[idx[k] * row + j] += src[k * row + j];
  }
  return a.tape->record(std::move(out), {a}, [a, idx = std::move(idx), row](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    double* ga = t.grad_mut(a.id).data();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      for (std::size_t j = 0; j < row; ++j) ga[k * row + j] += g[idx[k] * row + j];
    }
  });
}

Var matmul(Var a, Var b, bool trans_a, bool trans_b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const int ar = a.dim(0), ac = a.dim(1), br = b.dim(0), bc = b.dim(1);
  const int m = trans_a ? ac : ar;
  const int k = trans_a ? ar : ac;
  const int kb = trans_b ? bc : br;
  const int n = trans_b ? br : bc;
  if (k != kb) {
    throw ShapeError("matmul: inner dimensions " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  Tensor out({m, n});
  {
    const auto am = a.value().as_matrix(ar, ac);
    const auto bm = b.value().as_matrix(br, bc);
    auto om = out.as_matrix(m, n);
    if (!trans_a && !trans_b) om.noalias() = am * bm;
    if (trans_a && !trans_b) om.noalias() = am.transpose() * bm;
    if (!trans_a && trans_b) om.noalias() = am * bm.transpose();
    if (trans_a && trans_b) om.noalias() = am.transpose() * bm.transpose();
  }
  return a.tape->record(std::move(out), {a, b}, [=](Tape& t, int self) {
    const auto g = t.grad(self).as_matrix(m, n);
    const auto am = t.value(a.id).as_matrix(ar, ac);
    const auto bm = t.value(b.id).as_matrix(br, bc);
    if (t.requires_grad(a.id)) {
      auto ga = t.grad_mut(a.id).as_matrix(ar, ac);
      // d op(A) = G op(B)^T
      if (!trans_a && !trans_b) ga.noalias() += g * bm.transpose();
      if (!trans_a && trans_b) ga.noalias() += g * bm;
      if (trans_a && !trans_b) ga.noalias() += bm * g.transpose();
      if (trans_a && trans_b) ga.noalias() += bm.transpose() * g.transpose();
    }
    if (t.requires_grad(b.id)) {
      auto gb = t.grad_mut(b.id).as_matrix(br, bc);
      // d op(B) = op(A)^T G
      if (!trans_a && !trans_b) gb.noalias() += am.transpose() * g;
      if (trans_a && !trans_b) gb.noalias() += am * g;
      if (!trans_a && trans_b) gb.noalias() += g.transpose() * am;
      if (trans_a && trans_b) gb.noalias() += g.transpose() * am.transpose();
    }
  });
}

Var add_bias(Var x, Var b) {
  require_rank(x, 2, "add_bias");
  if (b.value().size() != static_cast<std::size_t>(x.dim(1))) {
    throw ShapeError("add_bias: bias length does not match columns");
  }
  const int rows = x.dim(0), cols = x.dim(1);
  Tensor out = x.value();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out[r * cols + c] += b.value()[c];
  }
  return x.tape->record(std::move(out), {x, b}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(x.id)) {
      Tensor& gx = t.grad_mut(x.id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.requires_grad(b.id)) {
      Tensor& gb = t.grad_mut(b.id);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
      }
    }
  });
}

Var transpose(Var a) {
  require_rank(a, 2, "transpose");
  return reshape(transpose_batched(reshape(a, {1, a.dim(0), a.dim(1)})), {a.dim(1), a.dim(0)});
}

Var transpose_batched(Var a) {
  require_rank(a, 3, "transpose_batched");
  const int bsz = a.dim(0), r = a.dim(1), c = a.dim(2);
  Tensor out({bsz, c, r});
  const Tensor& av = a.value();
  for (int b = 0; b < bsz; ++b) {
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) out[(b * c + j) * r + i] = av[(b * r + i) * c + j];
    }
  }
  return a.tape->record(std::move(out), {a}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_mut(a.id);
    for (int b = 0; b < bsz; ++b) {
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) ga[(b * r + i) * c + j] += g[(b * c + j) * r + i];
      }
    }
  });
}

Var bmm(Var a, Var b, bool trans_a, bool trans_b) {
  require_rank(a, 3, "bmm");
  require_rank(b, 3, "bmm");
  const int ba = a.dim(0), bb = b.dim(0);
  const int batch = std::max(ba, bb);
  if ((ba != batch && ba != 1) || (bb != batch && bb != 1)) {
    throw ShapeError("bmm: batch sizes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " do not broadcast");
  }
  const int ar = a.dim(1), ac = a.dim(2), br = b.dim(1), bc = b.dim(2);
  const int m = trans_a ? ac : ar;
  const int k = trans_a ? ar : ac;
  const int n = trans_b ? br : bc;
  if ((trans_b ? bc : br) != k) throw ShapeError("bmm: inner dimensions differ");
  std::vector<int> ai(batch), bi(batch), oi(batch);
  for (int i = 0; i < batch; ++i) {
    ai[i] = ba == 1 ? 0 : i;
    bi[i] = bb == 1 ? 0 : i;
    oi[i] = i;
  }
  Tensor out({batch, m, n});
  const std::size_t sa = static_cast<std::size_t>(ar) * ac, sb = static_cast<std::size_t>(br) * bc,
                    so = static_cast<std::size_t>(m) * n;
  for (int i = 0; i < batch; ++i) {
    gemm(a.value().data() + ai[i] * sa, trans_a, b.value().data() + bi[i] * sb, trans_b,
         out.data() + i * so, m, n, k, false);
  }
  return a.tape->record(std::move(out), {a, b}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(a.id);
    const Tensor& bv = t.value(b.id);
    for (int i = 0; i < batch; ++i) {
      const double* gi = g.data() + i * so;
      if (t.requires_grad(a.id)) {
        double* ga = t.grad_mut(a.id).data() + ai[i] * sa;
        if (!trans_a) {
          gemm(gi, false, bv.data() + bi[i] * sb, !trans_b, ga, m, k, n, true);
        } else {
          gemm(bv.data() + bi[i] * sb, trans_b, gi, true, ga, k, m, n, true);
        }
      }
      if (t.requires_grad(b.id)) {
        double* gb = t.grad_mut(b.id).data() + bi[i] * sb;
        if (!trans_b) {
          gemm(av.data() + ai[i] * sa, !trans_a, gi, false, gb, k, n, m, true);
        } else {
          gemm(gi, true, av.data() + ai[i] * sa, trans_a, gb, n, k, m, true);
        }
      }
    }
  });
}

Var bmm_indexed(Var a, Var x, std::vector<int> ai, std::vector<int> xi, std::vector<int> oi,
                int rows) {
  require_rank(a, 3, "bmm_indexed");
  require_rank(x, 3, "bmm_indexed");
  if (ai.size() != xi.size() || ai.size() != oi.size()) {
    throw ShapeError("bmm_indexed: index lists differ in length");
  }
  const int m = a.dim(1), p = a.dim(2), c = x.dim(2);
  if (x.dim(1) != p) throw ShapeError("bmm_indexed: inner dimensions differ");
  check_indices(ai, a.dim(0), "bmm_indexed");
  check_indices(xi, x.dim(0), "bmm_indexed");
  check_indices(oi, rows, "bmm_indexed");
  const std::size_t sa = static_cast<std::size_t>(m) * p, sx = static_cast<std::size_t>(p) * c,
                    so = static_cast<std::size_t>(m) * c;
  Tensor out({rows, m, c});
  for (std::size_t k = 0; k < ai.size(); ++k) {
    gemm(a.value().data() + ai[k] * sa, false, x.value().data() + xi[k] * sx, false,
         out.data() + oi[k] * so, m, c, p, true);
  }
  return a.tape->record(
      std::move(out), {a, x},
      [=, ai = std::move(ai), xi = std::move(xi), oi = std::move(oi)](Tape& t, int self) {
        const Tensor& g = t.grad(self);
        const Tensor& av = t.value(a.id);
        const Tensor& xv = t.value(x.id);
        const bool ga_on = t.requires_grad(a.id);
        const bool gx_on = t.requires_grad(x.id);
        for (std::size_t k = 0; k < ai.size(); ++k) {
          const double* gk = g.data() + oi[k] * so;
          if (ga_on) {
            gemm(gk, false, xv.data() + xi[k] * sx, true, t.grad_mut(a.id).data() + ai[k] * sa, m,
                 p, c, true);
          }
          if (gx_on) {
            gemm(av.data() + ai[k] * sa, true, gk, false, t.grad_mut(x.id).data() + xi[k] * sx, p,
                 c, m, true);
          }
        }
      });
}

Var congruence_indexed(Var a, Var s, std::vector<int> ai, std::vector<int> si,
                       std::vector<int> oi, int rows) {
  require_rank(a, 3, "congruence_indexed");
  require_rank(s, 3, "congruence_indexed");
  if (ai.size() != si.size() || ai.size() != oi.size()) {
    throw ShapeError("congruence_indexed: index lists differ in length");
  }
  const int m = a.dim(1), p = a.dim(2);
  if (s.dim(1) != p || s.dim(2) != p) throw ShapeError("congruence_indexed: S is not p x p");
  check_indices(ai, a.dim(0), "congruence_indexed");
  check_indices(si, s.dim(0), "congruence_indexed");
  check_indices(oi, rows, "congruence_indexed");
  const std::size_t sa = static_cast<std::size_t>(m) * p, ss = static_cast<std::size_t>(p) * p,
                    so = static_cast<std::size_t>(m) * m;
  Tensor out({rows, m, m});
  std::vector<double> as(sa);
  for (std::size_t k = 0; k < ai.size(); ++k) {
    const double* ak = a.value().data() + ai[k] * sa;
    gemm(ak, false, s.value().data() + si[k] * ss, false, as.data(), m, p, p, false);
    gemm(as.data(), false, ak, true, out.data() + oi[k] * so, m, m, p, true);
  }
  return a.tape->record(
      std::move(out), {a, s},
      [=, ai = std::move(ai), si = std::move(si), oi = std::move(oi)](Tape& t, int self) {
        const Tensor& g = t.grad(self);
        const Tensor& av = t.value(a.id);
        const Tensor& sv = t.value(s.id);
        const bool ga_on = t.requires_grad(a.id);
        const bool gs_on = t.requires_grad(s.id);
        std::vector<double> ga_tmp(sa), gs_tmp(sa);
        for (std::size_t k = 0; k < ai.size(); ++k) {
          const double* gk = g.data() + oi[k] * so;
          const double* ak = av.data() + ai[k] * sa;
          const double* sk = sv.data() + si[k] * ss;
          if (ga_on) {
            // dA = G A S^T + G^T A S
            double* ga = t.grad_mut(a.id).data() + ai[k] * sa;
            gemm(gk, false, ak, false, ga_tmp.data(), m, p, m, false);
            gemm(ga_tmp.data(), false, sk, true, ga, m, p, p, true);
            gemm(gk, true, ak, false, ga_tmp.data(), m, p, m, false);
            gemm(ga_tmp.data(), false, sk, false, ga, m, p, p, true);
          }
          if (gs_on) {
            // dS = A^T G A
            gemm(gk, false, ak, false, gs_tmp.data(), m, p, m, false);
            gemm(ak, true, gs_tmp.data(), false, t.grad_mut(s.id).data() + si[k] * ss, p, p, m,
                 true);
          }
        }
      });
}

Var congruence(Var a, Var s) {
  require_rank(a, 3, "congruence");
  require_rank(s, 3, "congruence");
  const int batch = s.dim(0);
  if (a.dim(0) != batch && a.dim(0) != 1) throw ShapeError("congruence: batch sizes differ");
  std::vector<int> ai(batch), idx(batch);
  for (int i = 0; i < batch; ++i) {
    ai[i] = a.dim(0) == 1 ? 0 : i;
    idx[i] = i;
  }
  return congruence_indexed(a, s, std::move(ai), idx, idx, batch);
}

Var kron_identity_apply(Var w, Var x) {
  require_rank(w, 2, "kron_identity_apply");
  require_rank(x, 2, "kron_identity_apply");
  const int d = w.dim(1);
  if (w.dim(0) != d || x.dim(0) % d != 0) throw ShapeError("kron_identity_apply: shapes");
  const int n = x.dim(0) / d, c = x.dim(1);
  Var out = bmm(reshape(w, {1, d, d}), reshape(x, {n, d, c}));
  return reshape(out, {n * d, c});
}

Var channel_mix(Var x, Var w) {
  require_rank(x, 3, "channel_mix");
  require_rank(w, 2, "channel_mix");
  const int h = x.dim(1);
  if (w.dim(0) != h || w.dim(1) != h) throw ShapeError("channel_mix: W is not h x h");
  return bmm(reshape(w, {1, h, h}), x, true, false);
}

Var sparse_matmul(const SparseRowMatrix& a, Var x) {
  require_rank(x, 2, "sparse_matmul");
  if (a.cols() != x.dim(0)) throw ShapeError("sparse_matmul: inner dimensions differ");
  const int rows = static_cast<int>(a.rows()), n = x.dim(0), c = x.dim(1);
  Tensor out({rows, c});
  out.as_matrix(rows, c).noalias() = a * x.value().as_matrix(n, c);
  return x.tape->record(std::move(out), {x}, [=](Tape& t, int self) {
    t.grad_mut(x.id).as_matrix(n, c).noalias() += a.transpose() * t.grad(self).as_matrix(rows, c);
  });
}

Var sum_middle(Var x) {
  require_rank(x, 3, "sum_middle");
  const int a = x.dim(0), b = x.dim(1), c = x.dim(2);
  Tensor out({a, c});
  const Tensor& xv = x.value();
  for (int i = 0; i < a; ++i) {
    for (int j = 0; j < b; ++j) {
      for (int k = 0; k < c; ++k) out[i * c + k] += xv[(i * b + j) * c + k];
    }
  }
  return x.tape->record(std::move(out), {x}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_mut(x.id);
    for (int i = 0; i < a; ++i) {
      for (int j = 0; j < b; ++j) {
        for (int k = 0; k < c; ++k) gx[(i * b + j) * c + k] += g[i * c + k];
      }
    }
  });
}

Var scale_rows(Var x, Var e) {
  require_rank(x, 2, "scale_rows");
  const int rows = x.dim(0), cols = x.dim(1);
  if (e.value().size() != static_cast<std::size_t>(rows)) {
    throw ShapeError("scale_rows: one factor per row expected");
  }
  Tensor out = x.value();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out[r * cols + c] *= e.value()[r];
  }
  return x.tape->record(std::move(out), {x, e}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(x.id);
    const Tensor& ev = t.value(e.id);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double gi = g[r * cols + c];
        if (t.requires_grad(x.id)) t.grad_mut(x.id)[r * cols + c] += gi * ev[r];
        if (t.requires_grad(e.id)) t.grad_mut(e.id)[r] += gi * xv[r * cols + c];
      }
    }
  });
}

Tensor glorot(std::vector<int> shape, int fan_in, int fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(std::max(1, fan_in + fan_out)));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor t(std::move(shape));
  for (double& x : t.values()) x = u(rng);
  return t;
}

}  // namespace gsheaf::ad
