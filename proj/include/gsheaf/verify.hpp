#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gsheaf/gaussian.hpp"
#include "gsheaf/graph.hpp"
#include "gsheaf/sheaf.hpp"

namespace gsheaf {

/// Outcome of one property check. A check passes only if its numeric
/// condition holds and it finishes within its time budget.
struct CheckResult {
  int id = 0;
  std::string name;
  bool numeric_pass = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::string detail;

  bool pass() const { return numeric_pass && seconds < budget_seconds; }
};

/// "[PASS] 3 name: detail (0.12 s / 5 s)".
std::string format_check(const CheckResult& r);

// Random instances shared by the checks and the tests.
/// Spanning tree on n nodes (random Pruefer-like attachment) plus `extra` random edges.
Graph random_connected_graph(int n, int extra, Rng& rng);
Matrix random_orthogonal(int d, Rng& rng);
/// Diagonal entries with |x| in [0.5, 1.5] (orthogonal: Haar; general: I + 0.4 * N(0,1) / sqrt(d)).
RestrictionMapSet random_maps(const Graph& g, int d, MapClass cls, Rng& rng);
/// Random PSD matrix A A^T / d with A (d x rank).
Matrix random_psd(int d, int rank, Rng& rng);
GaussianField random_field(int n, int d, Rng& rng);

/// The property checks of the library, numbered 1 to 8.
CheckResult check_constant_sheaf();
CheckResult check_laplacian_routes();
CheckResult check_sections();
CheckResult check_psd_closure();
CheckResult check_orbit_invariants();
CheckResult check_lyapunov_scaling();
CheckResult check_gradients();
CheckResult check_sinkhorn_bures();

const std::vector<std::function<CheckResult()>>& property_checks();

/// Runs every property check, printing one line each to `out`.
std::vector<CheckResult> run_verify(std::ostream& out);

}  // namespace gsheaf
