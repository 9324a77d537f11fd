// Compiled with relaxed floating-point flags so the exp loops vectorize;
// nothing here relies on infinities or NaNs.
#include "sinkhorn_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gsheaf::ad::detail {

void softmin_rows(const double* c, int rows, int cols, const double* pot, const double* logw,
                  double eps, double* out) {
  const double inv = 1.0 / eps;
  std::vector<double> z(cols);
  for (int i = 0; i < rows; ++i) {
    const double* ci = c + static_cast<long>(i) * cols;
    double m = -1e300;
    for (int j = 0; j < cols; ++j) {
      z[j] = logw[j] + (pot[j] - ci[j]) * inv;
      m = std::max(m, z[j]);
    }
    double s = 0.0;
    for (int j = 0; j < cols; ++j) s += std::exp(z[j] - m);
    out[i] = -eps * (m + std::log(s));
  }
}

void sinkhorn_backward_step(const double* c, int rows, int cols, const double* f,
                            const double* g, const double* g_prev, double log_a, double log_b,
                            double eps, double* f_bar, double* g_bar, double* c_bar) {
  const double inv = 1.0 / eps;
  std::vector<double> rho(cols);
  std::vector<double> g_prev_bar(cols, 0.0);
  for (int i = 0; i < rows; ++i) {
    const double* ci = c + static_cast<long>(i) * cols;
    double* cbi = c_bar + static_cast<long>(i) * cols;
    // g = G(f): column softmax weights rho_ij = a exp((f_i + g_j - C_ij) / eps).
    double acc = 0.0;
    for (int j = 0; j < cols; ++j) {
      rho[j] = std::exp(log_a + (f[i] + g[j] - ci[j]) * inv);
      acc += g_bar[j] * rho[j];
      cbi[j] += g_bar[j] * rho[j];
    }
    const double fb = f_bar[i] - acc;
    // f = F(g_prev): row softmax weights pi_ij = b exp((f_i + g_prev_j - C_ij) / eps).
    for (int j = 0; j < cols; ++j) {
      const double pi = std::exp(log_b + (f[i] + g_prev[j] - ci[j]) * inv);
      g_prev_bar[j] -= fb * pi;
      cbi[j] += fb * pi;
    }
    f_bar[i] = 0.0;
  }
  std::copy(g_prev_bar.begin(), g_prev_bar.end(), g_bar);
}

double transport_cost(const double* c, int rows, int cols, const double* f, const double* g,
                      double log_a, double log_b, double eps, double* p) {
  const double inv = 1.0 / eps;
  double total = 0.0;
  for (int i = 0; i < rows; ++i) {
    const double* ci = c + static_cast<long>(i) * cols;
    double row = 0.0;
    for (int j = 0; j < cols; ++j) {
      const double pij = std::exp(log_a + log_b + (f[i] + g[j] - ci[j]) * inv);
      if (p) p[static_cast<long>(i) * cols + j] = pij;
      row += pij * ci[j];
    }
    total += row;
  }
  return total;
}

}  // namespace gsheaf::ad::detail
