#pragma once

namespace gsheaf::ad::detail {

// Row-wise soft-min: out[i] = -eps * log sum_j exp(logw[j] + (pot[j] - c[i*cols+j]) / eps).
void softmin_rows(const double* c, int rows, int cols, const double* pot, const double* logw,
                  double eps, double* out);

// One unrolled backward step of a (g-update, f-update) pair, see sinkhorn.cpp.
void sinkhorn_backward_step(const double* c, int rows, int cols, const double* f,
                            const double* g, const double* g_prev, double log_a, double log_b,
                            double eps, double* f_bar, double* g_bar, double* c_bar);

// sum_ij P_ij C_ij with P_ij = exp(log_a + log_b + (f_i + g_j - C_ij) / eps); fills p if given.
double transport_cost(const double* c, int rows, int cols, const double* f, const double* g,
                      double log_a, double log_b, double eps, double* p);

}  // namespace gsheaf::ad::detail
