#pragma once

// Small row-major kernels shared by the op implementations.

namespace gsheaf::ad::detail {

/// C (m x n) (+)= op(A) op(B) with op(A) m x k. Row-major, contiguous.
inline void gemm(const double* a, bool ta, const double* b, bool tb, double* c, int m, int n,
                 int k, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int l = 0; l < k; ++l) {
        const double x = ta ? a[l * m + i] : a[i * k + l];
        const double y = tb ? b[j * k + l] : b[l * n + j];
        s += x * y;
      }
      if (accumulate) {
        c[i * n + j] += s;
      } else {
        c[i * n + j] = s;
      }
    }
  }
}

}  // namespace gsheaf::ad::detail
