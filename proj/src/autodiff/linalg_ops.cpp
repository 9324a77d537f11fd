#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <memory>

#include "gsheaf/autodiff/ops.hpp"
#include "gsheaf/error.hpp"

namespace gsheaf::ad {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

constexpr double kGapFloor = 1e-8;

void require_square_batch(const Var& s, const char* op) {
  if (s.value().rank() != 3 || s.dim(1) != s.dim(2)) {
    throw ShapeError(std::string(op) + ": expected (B,d,d), got " + shape_string(s.shape()));
  }
}

Mat block(const Tensor& t, int b, int d) {
  return t.as_matrix(t.dim(0) * d, d).block(b * d, 0, d, d);
}

void put_block(Tensor& t, int b, int d, const Mat& m) {
  t.as_matrix(t.dim(0) * d, d).block(b * d, 0, d, d) = m;
}

void add_block(Tensor& t, int b, int d, const Mat& m) {
  t.as_matrix(t.dim(0) * d, d).block(b * d, 0, d, d) += m;
}

struct SpectralFn {
  double (*f)(double, double);
  double (*df)(double, double);
  double param;
};

double sqrt_f(double x, double) { return std::sqrt(std::max(x, 0.0)); }
double sqrt_df(double x, double) { return 0.5 / std::sqrt(std::max(x, kGapFloor)); }
double isqrt_f(double x, double cut) { return x > cut ? 1.0 / std::sqrt(x) : 0.0; }
double isqrt_df(double x, double cut) { return x > cut ? -0.5 / (x * std::sqrt(x)) : 0.0; }

// Y = U f(Lambda) U^T with the divided-difference backward rule.
Var spectral(Var s, SpectralFn fn, const char* name) {
  require_square_batch(s, name);
  const int batch = s.dim(0), d = s.dim(1);
  auto vecs = std::make_shared<std::vector<Mat>>(batch);
  auto vals = std::make_shared<std::vector<Vec>>(batch);
  Tensor out(s.shape());
  for (int b = 0; b < batch; ++b) {
    const Mat m = block(s.value(), b, d);
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (m + m.transpose()));
    if (eig.info() != Eigen::Success) throw NumericError(std::string(name) + ": eigensolver failed");
    (*vecs)[b] = eig.eigenvectors();
    (*vals)[b] = eig.eigenvalues();
    Vec fl(d);
    for (int i = 0; i < d; ++i) fl[i] = fn.f(eig.eigenvalues()[i], fn.param);
    put_block(out, b, d, eig.eigenvectors() * fl.asDiagonal() * eig.eigenvectors().transpose());
  }
  return s.tape->record(std::move(out), {s}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor& gs = t.grad_mut(s.id);
    for (int b = 0; b < batch; ++b) {
      const Mat& u = (*vecs)[b];
      const Vec& lam = (*vals)[b];
      Mat k(d, d);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          const double gap = lam[i] - lam[j];
          if (std::abs(gap) > kGapFloor) {
            k(i, j) = (fn.f(lam[i], fn.param) - fn.f(lam[j], fn.param)) / gap;
          } else {
            k(i, j) = fn.df(0.5 * (lam[i] + lam[j]), fn.param);
          }
        }
      }
      const Mat inner = k.cwiseProduct(u.transpose() * block(g, b, d) * u);
      const Mat full = u * inner * u.transpose();
      add_block(gs, b, d, 0.5 * (full + full.transpose()));
    }
  });
}

}  // namespace

Var sym_sqrt(Var s) { return spectral(s, {sqrt_f, sqrt_df, 0.0}, "sym_sqrt"); }

Var sym_inv_sqrt(Var s, double cutoff) {
  return spectral(s, {isqrt_f, isqrt_df, cutoff}, "sym_inv_sqrt");
}

const std::vector<double>& cholesky_jitter_schedule() {
  static const std::vector<double> levels = {0.0, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3};
  return levels;
}

Var cholesky(Var s) {
  require_square_batch(s, "cholesky");
  const int batch = s.dim(0), d = s.dim(1);
  Tensor out(s.shape());
  for (int b = 0; b < batch; ++b) {
    Mat m = block(s.value(), b, d);
    m = 0.5 * (m + m.transpose());
    if (!m.allFinite()) throw NumericError("cholesky: non-finite input");
    bool ok = false;
    for (double jitter : cholesky_jitter_schedule()) {
      Eigen::LLT<Mat> llt(m + jitter * Mat::Identity(d, d));
      if (llt.info() == Eigen::Success) {
        const Mat l = llt.matrixL();
        if (l.diagonal().minCoeff() > 0.0) {
          put_block(out, b, d, l);
          ok = true;
          break;
        }
      }
    }
    if (!ok) {
      throw FactorizationError("cholesky: block " + std::to_string(b) +
                               " is not positive definite after jitter 1e-3");
    }
  }
  return s.tape->record(std::move(out), {s}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& lv = t.value(self);
    Tensor& gs = t.grad_mut(s.id);
    for (int b = 0; b < batch; ++b) {
      const Mat l = block(lv, b, d);
      const Mat lbar = block(g, b, d).triangularView<Eigen::Lower>();
      Mat p = l.transpose() * lbar;
      p = p.triangularView<Eigen::Lower>();
      p.diagonal() *= 0.5;
      // L^{-T} P L^{-1}
      const Mat y = l.transpose().triangularView<Eigen::Upper>().solve(p);
      const Mat x = l.transpose().triangularView<Eigen::Upper>().solve(y.transpose()).transpose();
      add_block(gs, b, d, 0.5 * (x + x.transpose()));
    }
  });
}

Var cayley(Var s) {
  require_square_batch(s, "cayley");
  const int batch = s.dim(0), d = s.dim(1);
  const Mat eye = Mat::Identity(d, d);
  auto use_exp = std::make_shared<std::vector<char>>(batch, 0);
  Tensor out(s.shape());
  for (int b = 0; b < batch; ++b) {
    const Mat sm = block(s.value(), b, d);
    Eigen::PartialPivLU<Mat> lu(eye - sm);
    if (lu.rcond() > 1e-12) {
      put_block(out, b, d, lu.solve(eye + sm));
    } else {
      (*use_exp)[b] = 1;
      put_block(out, b, d, sm.exp());
    }
  }
  return s.tape->record(std::move(out), {s}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& qv = t.value(self);
    Tensor& gs = t.grad_mut(s.id);
    for (int b = 0; b < batch; ++b) {
      const Mat sm = block(t.value(s.id), b, d);
      const Mat qbar = block(g, b, d);
      if (!(*use_exp)[b]) {
        // dQ = (I - S)^{-1} dS (Q + I)
        const Mat q = block(qv, b, d);
        Eigen::PartialPivLU<Mat> lu((eye - sm).transpose());
        add_block(gs, b, d, lu.solve(qbar * (q + eye).transpose()));
      } else {
        // Adjoint of the Frechet derivative of exp via the block-triangular trick.
        Mat big = Mat::Zero(2 * d, 2 * d);
        big.topLeftCorner(d, d) = sm.transpose();
        big.bottomRightCorner(d, d) = sm.transpose();
        big.topRightCorner(d, d) = qbar;
        const Mat e = big.exp();
        add_block(gs, b, d, e.topRightCorner(d, d));
      }
    }
  });
}

Var skew_from_vec(Var v, int d) {
  const int k = d * (d - 1) / 2;
  if (v.value().rank() != 2 || v.dim(1) != k) {
    throw ShapeError("skew_from_vec: expected (B," + std::to_string(k) + ")");
  }
  const int batch = v.dim(0);
  Tensor out({batch, d, d});
  const Tensor& vv = v.value();
  for (int b = 0; b < batch; ++b) {
    int idx = 0;
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j, ++idx) {
        out[(b * d + i) * d + j] = vv[b * k + idx];
        out[(b * d + j) * d + i] = -vv[b * k + idx];
      }
    }
  }
  return v.tape->record(std::move(out), {v}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor& gv = t.grad_mut(v.id);
    for (int b = 0; b < batch; ++b) {
      int idx = 0;
      for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j, ++idx) {
          gv[b * k + idx] += g[(b * d + i) * d + j] - g[(b * d + j) * d + i];
        }
      }
    }
  });
}

Var diag_embed(Var v) {
  if (v.value().rank() != 2) throw ShapeError("diag_embed: expected (B,d)");
  const int batch = v.dim(0), d = v.dim(1);
  Tensor out({batch, d, d});
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < d; ++i) out[(b * d + i) * d + i] = v.value()[b * d + i];
  }
  return v.tape->record(std::move(out), {v}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor& gv = t.grad_mut(v.id);
    for (int b = 0; b < batch; ++b) {
      for (int i = 0; i < d; ++i) gv[b * d + i] += g[(b * d + i) * d + i];
    }
  });
}

Var sample_affine(Var mu, Var l, const Tensor& z) {
  if (mu.value().rank() != 2 || l.value().rank() != 3 || z.rank() != 3) {
    throw ShapeError("sample_affine: expected mu (n,d), L (n,d,d), z (n,T,d)");
  }
  const int n = mu.dim(0), d = mu.dim(1), tcount = z.dim(1);
  if (l.dim(0) != n || l.dim(1) != d || l.dim(2) != d || z.dim(0) != n || z.dim(2) != d) {
    throw ShapeError("sample_affine: inconsistent shapes");
  }
  Tensor out({n * tcount, d});
  const Tensor& mv = mu.value();
  const Tensor& lv = l.value();
  for (int v = 0; v < n; ++v) {
    for (int s = 0; s < tcount; ++s) {
      for (int i = 0; i < d; ++i) {
        double acc = mv[v * d + i];
        for (int j = 0; j < d; ++j) acc += lv[(v * d + i) * d + j] * z[(v * tcount + s) * d + j];
        out[(v * tcount + s) * d + i] = acc;
      }
    }
  }
  return mu.tape->record(std::move(out), {mu, l}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    for (int v = 0; v < n; ++v) {
      for (int s = 0; s < tcount; ++s) {
        for (int i = 0; i < d; ++i) {
          const double gi = g[(v * tcount + s) * d + i];
          if (t.requires_grad(mu.id)) t.grad_mut(mu.id)[v * d + i] += gi;
          if (t.requires_grad(l.id)) {
            Tensor& gl = t.grad_mut(l.id);
            for (int j = 0; j < d; ++j) gl[(v * d + i) * d + j] += gi * z[(v * tcount + s) * d + j];
          }
        }
      }
    }
  });
}

}  // namespace gsheaf::ad
