#include "gsheaf/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gsheaf/autodiff/grad_check.hpp"
#include "gsheaf/autodiff/sheaf_ops.hpp"
#include "gsheaf/autodiff/sinkhorn.hpp"
#include "gsheaf/data.hpp"
#include "gsheaf/error.hpp"
#include "gsheaf/gsnn/model.hpp"
#include "gsheaf/gsnn/restriction.hpp"

namespace gsheaf {

namespace {

using Clock = std::chrono::steady_clock;

int uniform_int(int lo, int hi, Rng& rng) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double uniform(double lo, double hi, Rng& rng) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Matrix gaussian_matrix(int r, int c, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = normal(rng);
  }
  return m;
}

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Vector sorted_spectrum(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

CovField covariances_of(const GaussianField& f) {
  CovField out;
  for (const Gaussian& g : f) out.push_back(g.cov);
  return out;
}

double scale_of(const Matrix& m) { return std::max(1.0, m.cwiseAbs().maxCoeff()); }

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

// Runs `body` and fills in the timing fields.
CheckResult timed(int id, std::string name, double budget,
                  const std::function<bool(std::string&)>& body) {
  CheckResult r;
  r.id = id;
  r.name = std::move(name);
  r.budget_seconds = budget;
  const auto start = Clock::now();
  try {
    r.numeric_pass = body(r.detail);
  } catch (const std::exception& e) {
    r.numeric_pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

MapClass class_at(int i) {
  static const MapClass classes[] = {MapClass::diagonal, MapClass::orthogonal, MapClass::general};
  return classes[i % 3];
}

ad::Tensor maps_tensor(const RestrictionMapSet& maps) {
  const int d = maps.dim();
  const int k = static_cast<int>(maps.incidences().size());
  ad::Tensor t({k, d, d});
  for (int i = 0; i < k; ++i) {
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) t[(i * d + r) * d + c] = maps.incidence(i)(r, c);
    }
  }
  return t;
}

}  // namespace

std::string format_check(const CheckResult& r) {
  std::ostringstream os;
  os << (r.pass() ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.name << ": " << r.detail;
  if (r.numeric_pass && !r.pass()) os << " [over time budget]";
  char buf[64];
  std::snprintf(buf, sizeof buf, " (%.2f s / %.0f s)", r.seconds, r.budget_seconds);
  os << buf;
  return os.str();
}

Graph random_connected_graph(int n, int extra, Rng& rng) {
  std::vector<std::pair<int, int>> pairs;
  std::set<std::pair<int, int>> seen;
  for (int v = 1; v < n; ++v) {
    const int u = uniform_int(0, v - 1, rng);
    pairs.emplace_back(u, v);
    seen.insert({u, v});
  }
  const long max_edges = static_cast<long>(n) * (n - 1) / 2;
  for (int attempt = 0; attempt < 4 * extra && static_cast<long>(seen.size()) < max_edges &&
                        static_cast<int>(pairs.size()) < n - 1 + extra;
       ++attempt) {
    int a = uniform_int(0, n - 1, rng), b = uniform_int(0, n - 1, rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (seen.insert({a, b}).second) pairs.emplace_back(a, b);
  }
  return Graph::from_edges(n, pairs);
}

Matrix random_orthogonal(int d, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(d, d, rng));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i) {
    if (r(i, i) < 0) q.col(i) *= -1.0;
  }
  return q;
}

RestrictionMapSet random_maps(const Graph& g, int d, MapClass cls, Rng& rng) {
  std::vector<Matrix> maps;
  for (int k = 0; k < 2 * g.num_edges(); ++k) {
    switch (cls) {
      case MapClass::diagonal: {
        Matrix m = Matrix::Zero(d, d);
        for (int i = 0; i < d; ++i) {
          m(i, i) = uniform(0.5, 1.5, rng) * (uniform(0.0, 1.0, rng) < 0.5 ? -1.0 : 1.0);
        }
        maps.push_back(m);
        break;
      }
      case MapClass::orthogonal:
        maps.push_back(random_orthogonal(d, rng));
        break;
      case MapClass::general:
        maps.push_back(Matrix::Identity(d, d) + 0.4 * gaussian_matrix(d, d, rng) / std::sqrt(d));
        break;
    }
  }
  return RestrictionMapSet(g, d, cls, std::move(maps));
}

Matrix random_psd(int d, int rank, Rng& rng) {
  const Matrix a = gaussian_matrix(d, rank, rng);
  return a * a.transpose() / static_cast<double>(d);
}

GaussianField random_field(int n, int d, Rng& rng) {
  GaussianField f;
  for (int v = 0; v < n; ++v) {
    f.emplace_back(Vector(gaussian_matrix(d, 1, rng)),
                   random_psd(d, d, rng) + 0.1 * Matrix::Identity(d, d));
  }
  return f;
}

CheckResult check_constant_sheaf() {
  return timed(1, "constant-sheaf reduction", 1.0, [](std::string& detail) {
    Rng rng(101);
    bool exact = true;
    double worst_cov = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int n = uniform_int(5, 50, rng);
      const Graph g = random_connected_graph(n, uniform_int(0, 2 * n, rng), rng);
      const SheafOperators ops = SheafOperators::assemble(g, RestrictionMapSet::identity(g, 1));
      Matrix comb = Matrix::Zero(n, n);
      for (const Edge& e : g.edges()) {
        comb(e.u, e.v) = comb(e.v, e.u) = -1.0;
      }
      for (int v = 0; v < n; ++v) comb(v, v) = g.degree(v);
      exact = exact && (ops.dense_laplacian(false) - comb).cwiseAbs().maxCoeff() == 0.0;

      const GaussianField field = random_field(n, 1, rng);
      const CovField lc = apply_cov_laplacian(ops, covariances_of(field), false);
      for (int v = 0; v < n; ++v) {
        double expected = g.degree(v) * field[v].cov.matrix()(0, 0);
        for (int u : g.neighbors(v)) expected += field[u].cov.matrix()(0, 0);
        worst_cov = std::max(worst_cov, std::abs(lc[v].matrix()(0, 0) - expected) /
                                            std::max(1.0, std::abs(expected)));
      }
    }
    detail = std::string("L_M exact: ") + (exact ? "yes" : "no") +
             fmt(", max rel L_C error %.3g (tol 1e-12)", worst_cov);
    return exact && worst_cov <= 1e-12;
  });
}

CheckResult check_laplacian_routes() {
  return timed(2, "Laplacian route equivalence", 5.0, [](std::string& detail) {
    Rng rng(202);
    double worst_route = 0.0, worst_split = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const int n = uniform_int(2, 8, rng);
      const int d = uniform_int(1, 3, rng);
      const Graph g = random_connected_graph(n, uniform_int(0, n, rng), rng);
      const SheafOperators ops = SheafOperators::assemble(g, random_maps(g, d, class_at(trial), rng));
      const GaussianField field = random_field(n, d, rng);
      for (bool normalized : {false, true}) {
        const GaussianField a = apply_gaussian_laplacian(ops, field, normalized);
        const GaussianField b = distribution_laplacian(ops, field, normalized);
        for (int v = 0; v < n; ++v) {
          const double s = std::max(scale_of(b[v].mean), scale_of(b[v].cov.matrix()));
          worst_route = std::max(worst_route, (a[v].mean - b[v].mean).cwiseAbs().maxCoeff() / s);
          worst_route = std::max(
              worst_route, (a[v].cov.matrix() - b[v].cov.matrix()).cwiseAbs().maxCoeff() / s);
        }
      }
      const CovField per_node = apply_cov_laplacian(ops, covariances_of(field), false);
      const CovField split = cov_laplacian_decomposed(ops, covariances_of(field), false);
      for (int v = 0; v < n; ++v) {
        worst_split = std::max(worst_split, (per_node[v].matrix() - split[v].matrix()).cwiseAbs().maxCoeff() /
                                                scale_of(split[v].matrix()));
      }
    }
    detail = fmt("parameter vs distribution route %.3g, per-node vs decomposition %.3g (tol 1e-10)",
                 worst_route, worst_split);
    return worst_route <= 1e-10 && worst_split <= 1e-10;
  });
}

CheckResult check_sections() {
  return timed(3, "equalizer and sections", 5.0, [](std::string& detail) {
    Rng rng(303);
    double worst_section = 0.0;
    double smallest_violation = std::numeric_limits<double>::infinity();
    int sections_ok = 0, rejected = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const int n = uniform_int(3, 12, rng);
      const int d = uniform_int(1, 3, rng);
      const Graph tree = random_connected_graph(n, 0, rng);
      const RestrictionMapSet maps = random_maps(tree, d, class_at(trial), rng);
      const SheafOperators ops = SheafOperators::assemble(tree, maps);
      const GaussianField seed = random_field(1, d, rng);
      const GaussianField field = propagate_section(tree, maps, uniform_int(0, n - 1, rng), seed[0]);
      const SectionReport ok = is_global_section(ops, field);
      worst_section = std::max(worst_section, ok.equalizer_residual);
      if (ok.is_section && ok.equalizer_residual <= 1e-8) ++sections_ok;

      GaussianField bad = field;
      const int v = uniform_int(0, n - 1, rng);
      bad[v] = Gaussian(bad[v].mean, bad[v].cov.matrix() + random_psd(d, d, rng) + 0.05 * Matrix::Identity(d, d));
      const SectionReport no = is_global_section(ops, bad);
      smallest_violation = std::min(smallest_violation, no.equalizer_residual);
      if (!no.is_section && no.equalizer_residual > 1e-6) ++rejected;
    }
    detail = fmt("sections accepted %.0f/100 (max residual %.3g), ", sections_ok, worst_section) +
             fmt("perturbed rejected %.0f/100 (min residual %.3g)", rejected, smallest_violation);
    return sections_ok == 100 && rejected == 100;
  });
}

CheckResult check_psd_closure() {
  return timed(4, "PSD cone closure", 30.0, [](std::string& detail) {
    Rng rng(404);
    double worst = std::numeric_limits<double>::infinity();
    int failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = uniform_int(3, 12, rng);
      const int d = uniform_int(1, 3, rng);
      const int h = uniform_int(1, 3, rng);
      const Graph g = random_connected_graph(n, uniform_int(0, n, rng), rng);
      const RestrictionMapSet maps = random_maps(g, d, class_at(trial), rng);
      const ad::IncidencePlan plan = ad::IncidencePlan::build(g, h);
      ad::Tape tape;
      const ad::Var blocks = ad::sheaf_blocks(tape.constant(maps_tensor(maps)), plan);
      ad::Tensor sigma({n * h, d, d});
      for (int b = 0; b < n * h; ++b) {
        const Matrix s = random_psd(d, uniform_int(1, d, rng), rng);
        for (int i = 0; i < d * d; ++i) sigma[b * d * d + i] = s(i / d, i % d);
      }
      const ad::Var sv = tape.constant(sigma);
      for (const ad::Var& out :
           {ad::apply_normalized_cov(blocks, sv, plan), ad::cov_diffusion_step(blocks, sv, plan)}) {
        const auto m = out.value().as_matrix(n * h * d, d);
        for (int b = 0; b < n * h; ++b) worst = std::min(worst, min_eigenvalue(m.middleRows(b * d, d)));
      }
    }
    for (int trial = 0; trial < 1000; ++trial) {
      SynthConfig sc;
      sc.nodes = uniform_int(5, 9, rng);
      sc.ba_m = 2;
      sc.target_samples = 5;
      sc.seed = 5000 + trial;
      const Dataset ds = synthesize(sc);
      static const ModelKind kinds[] = {ModelKind::gsnn_diag, ModelKind::gsnn_orth,
                                        ModelKind::gsnn_gen, ModelKind::gsnn_graphlap};
      ModelConfig cfg;
      cfg.kind = kinds[trial % 4];
      cfg.stalk_dim = uniform_int(1, 3, rng);
      cfg.hidden = uniform_int(1, 3, rng);
      cfg.layers = uniform_int(0, 3, rng);
      cfg.map_hidden = 4;
      cfg.readout_hidden = 4;
      cfg.samples = 4;
      cfg.seed = trial;
      auto model = make_model(cfg, ds);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int p = 0; p < model->parameters().size(); ++p) {
        for (double& x : model->parameters()[p].value.values()) x += 0.5 * normal(rng);
      }
      try {
        ad::Tape tape;
        const ForwardResult r = model->forward(tape, model->load(tape, false), rng, false);
        for (const ad::Var& c : r.covariances) {
          const int k = c.dim(1);
          const int blocks = c.dim(0);
          const auto m = c.value().as_matrix(blocks * k, k);
          for (int b = 0; b < blocks; ++b) worst = std::min(worst, min_eigenvalue(m.middleRows(b * k, k)));
        }
      } catch (const Error&) {
        ++failures;
      }
    }
    detail = fmt("min eigenvalue %.3g over 1000 Laplacian applications and 1000 forwards (tol -1e-8), "
                 "%.0f forward errors",
                 worst, failures);
    return worst >= -1e-8 && failures == 0;
  });
}

CheckResult check_orbit_invariants() {
  return timed(5, "orbit invariants", 1.0, [](std::string& detail) {
    Rng rng(505);
    double worst_norm = 0.0, worst_spec = 0.0;
    bool reports_ok = true;
    for (int trial = 0; trial < 200; ++trial) {
      const int n = uniform_int(4, 10, rng);
      const int d = uniform_int(2, 4, rng);
      const Graph g = random_connected_graph(n, uniform_int(0, n, rng), rng);
      const RestrictionMapSet maps = random_maps(g, d, MapClass::orthogonal, rng);
      std::vector<int> path{uniform_int(0, n - 1, rng)};
      const int steps = uniform_int(1, 8, rng);
      for (int s = 0; s < steps; ++s) {
        const auto nb = g.neighbors(path.back());
        path.push_back(nb[uniform_int(0, static_cast<int>(nb.size()) - 1, rng)]);
      }
      const Gaussian start = random_field(1, d, rng)[0];
      const Gaussian end = transport(g, maps, path, start);
      worst_norm = std::max(worst_norm, std::abs(end.mean.norm() - start.mean.norm()) /
                                            std::max(1.0, start.mean.norm()));
      const Vector a = sorted_spectrum(start.cov.matrix()), b = sorted_spectrum(end.cov.matrix());
      worst_spec = std::max(worst_spec, (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.maxCoeff()));
      const OrbitReport rep = orbit_invariants(random_orthogonal(d, rng), start);
      reports_ok = reports_ok && rep.orthogonal && rep.norm_preserved && rep.spectrum_preserved && rep.consistent;
    }
    detail = fmt("norm drift %.3g, spectrum drift %.3g (tol 1e-9)", worst_norm, worst_spec) +
             (reports_ok ? "" : ", orbit report inconsistent");
    return worst_norm <= 1e-9 && worst_spec <= 1e-9 && reports_ok;
  });
}

CheckResult check_lyapunov_scaling() {
  return timed(6, "Lyapunov scaling", 1.0, [](std::string& detail) {
    Rng rng(606);
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
      const int n = uniform_int(3, 10, rng);
      const int d = uniform_int(1, 3, rng);
      const Graph g = random_connected_graph(n, uniform_int(0, n, rng), rng);
      const SheafOperators ops = SheafOperators::assemble(g, random_maps(g, d, MapClass::orthogonal, rng));
      GaussianField field;
      for (int v = 0; v < n; ++v) {
        field.emplace_back(Vector(gaussian_matrix(d, 1, rng)),
                           Matrix(uniform(0.1, 2.0, rng) * Matrix::Identity(d, d)));
      }
      const double base = lyapunov_energy(ops, field);
      for (double c : {0.5, 2.0, 3.0}) {
        GaussianField scaled;
        for (const Gaussian& x : field) scaled.push_back(pushforward(c * Matrix::Identity(d, d), x));
        const double v = lyapunov_energy(ops, scaled);
        worst = std::max(worst, std::abs(v - c * c * base) / (c * c * base));
      }
    }
    detail = fmt("max relative deviation from c^2 scaling %.3g (tol 1e-8)", worst);
    return worst <= 1e-8;
  });
}

namespace {

struct GradCase {
  std::string name;
  ad::ScalarFn fn;
  std::vector<ad::Tensor> params;
  bool composite = false;
};

ad::Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  ad::Tensor t(std::move(shape));
  std::normal_distribution<double> normal(0.0, scale);
  for (double& x : t.values()) x = normal(rng);
  return t;
}

// Scalar probe <W, out> with W fixed by `seed`.
ad::Var probe(ad::Var out, std::uint64_t seed) {
  Rng rng(seed);
  const ad::Tensor w = random_tensor(out.shape(), rng);
  return ad::sum(ad::mul(out, out.tape->constant(w)));
}

ad::Var spd(ad::Var a) {
  const int b = a.dim(0), d = a.dim(1);
  ad::Tensor eye({b, d, d});
  for (int k = 0; k < b; ++k) {
    for (int i = 0; i < d; ++i) eye[(k * d + i) * d + i] = 0.5;
  }
  return ad::add(ad::bmm(a, a, false, true), a.tape->constant(eye));
}

std::vector<GradCase> gradient_cases() {
  using namespace ad;
  Rng rng(707);
  std::vector<GradCase> cases;
  const auto unary = [&](std::string name, std::function<Var(Var)> op, std::vector<int> shape,
                         double scale = 1.0) {
    cases.push_back({std::move(name),
                     [op](Tape&, const std::vector<Var>& p) { return probe(op(p[0]), 1); },
                     {random_tensor(std::move(shape), rng, scale)}});
  };
  const auto binary = [&](std::string name, std::function<Var(Var, Var)> op, std::vector<int> sa,
                          std::vector<int> sb) {
    cases.push_back({std::move(name),
                     [op](Tape&, const std::vector<Var>& p) { return probe(op(p[0], p[1]), 2); },
                     {random_tensor(std::move(sa), rng), random_tensor(std::move(sb), rng)}});
  };

  binary("add", [](Var a, Var b) { return add(a, b); }, {3, 4}, {3, 4});
  binary("sub", [](Var a, Var b) { return sub(a, b); }, {3, 4}, {3, 4});
  binary("mul", [](Var a, Var b) { return mul(a, b); }, {3, 4}, {3, 4});
  unary("scale", [](Var a) { return scale(a, 1.7); }, {5});
  unary("add_scalar", [](Var a) { return add_scalar(a, 0.3); }, {5});
  unary("elu", [](Var a) { return elu(a); }, {4, 3});
  unary("tanh", [](Var a) { return ad::tanh(a); }, {4, 3});
  unary("softplus", [](Var a) { return softplus(a); }, {4, 3});
  unary("exp", [](Var a) { return ad::exp(a); }, {4, 3});
  unary("relu", [](Var a) { return activate(a, Activation::relu); }, {4, 3});
  unary("clamp", [](Var a) { return clamp(a, -0.5, 0.5); }, {4, 3});
  unary("sum", [](Var a) { return sum(a); }, {3, 2});
  unary("mean", [](Var a) { return mean(a); }, {3, 2});
  unary("reshape", [](Var a) { return reshape(a, {2, 6}); }, {3, 4});
  binary("concat", [](Var a, Var b) { return concat({a, b}); }, {2, 3}, {4, 3});
  binary("concat_cols", [](Var a, Var b) { return concat_cols({a, b}); }, {3, 2}, {3, 4});
  unary("gather", [](Var a) { return gather(a, {2, 0, 2, 1}); }, {3, 2});
  unary("scatter_add", [](Var a) { return scatter_add(a, {1, 0, 1, 3}, 4); }, {4, 2});
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      binary(std::string("matmul") + (ta ? "_ta" : "") + (tb ? "_tb" : ""),
             [ta, tb](Var a, Var b) { return matmul(a, b, ta, tb); }, ta ? std::vector<int>{4, 3} : std::vector<int>{3, 4},
             tb ? std::vector<int>{2, 4} : std::vector<int>{4, 2});
    }
  }
  binary("add_bias", [](Var a, Var b) { return add_bias(a, b); }, {3, 4}, {4});
  unary("transpose", [](Var a) { return transpose(a); }, {3, 4});
  unary("transpose_batched", [](Var a) { return transpose_batched(a); }, {2, 3, 4});
  binary("bmm", [](Var a, Var b) { return bmm(a, b); }, {3, 2, 4}, {3, 4, 2});
  binary("bmm_broadcast", [](Var a, Var b) { return bmm(a, b); }, {1, 2, 4}, {3, 4, 2});
  binary("bmm_trans", [](Var a, Var b) { return bmm(a, b, true, true); }, {3, 4, 2}, {3, 2, 4});
  binary("bmm_indexed",
         [](Var a, Var x) { return bmm_indexed(a, x, {0, 1, 1, 2}, {0, 0, 1, 1}, {0, 1, 1, 2}, 3); },
         {3, 2, 2}, {2, 2, 3});
  binary("congruence_indexed",
         [](Var a, Var s) { return congruence_indexed(a, s, {0, 1, 2}, {1, 0, 1}, {0, 0, 1}, 2); },
         {3, 2, 3}, {2, 3, 3});
  binary("congruence", [](Var a, Var s) { return congruence(a, s); }, {3, 2, 2}, {3, 2, 2});
  binary("congruence_broadcast", [](Var a, Var s) { return congruence(a, s); }, {1, 2, 2}, {3, 2, 2});
  binary("kron_identity_apply", [](Var w, Var x) { return kron_identity_apply(w, x); }, {2, 2}, {6, 3});
  binary("channel_mix", [](Var x, Var w) { return channel_mix(x, w); }, {2, 3, 4}, {3, 3});
  {
    SparseRowMatrix a(3, 4);
    a.insert(0, 1) = 0.5;
    a.insert(1, 0) = -1.0;
    a.insert(1, 3) = 2.0;
    a.insert(2, 2) = 1.5;
    a.makeCompressed();
    unary("sparse_matmul", [a](Var x) { return sparse_matmul(a, x); }, {4, 2});
  }
  unary("sum_middle", [](Var a) { return sum_middle(a); }, {2, 3, 4});
  binary("scale_rows", [](Var x, Var e) { return scale_rows(x, e); }, {3, 4}, {3});
  unary("sym_sqrt", [](Var a) { return sym_sqrt(spd(a)); }, {2, 3, 3});
  unary("sym_inv_sqrt", [](Var a) { return sym_inv_sqrt(spd(a)); }, {2, 3, 3});
  unary("cholesky", [](Var a) { return cholesky(spd(a)); }, {2, 3, 3});
  unary("cayley", [](Var v) { return cayley(skew_from_vec(v, 3)); }, {2, 3}, 0.5);
  unary("skew_from_vec", [](Var v) { return skew_from_vec(v, 3); }, {2, 3});
  unary("diag_embed", [](Var v) { return diag_embed(v); }, {2, 3});
  {
    const Tensor z = random_tensor({2, 3, 2}, rng);
    binary("sample_affine", [z](Var mu, Var l) { return sample_affine(mu, l, z); }, {2, 2}, {2, 2, 2});
  }
  {
    SinkhornOptions opts;
    opts.epsilon = 0.5;
    opts.iters = 50;
    cases.push_back({"sinkhorn_w2",
                     [opts](Tape&, const std::vector<Var>& p) { return sinkhorn_w2(p[0], p[1], opts); },
                     {random_tensor({6, 2}, rng), random_tensor({5, 2}, rng)}});
  }
  {
    Rng grng(708);
    const Graph g = random_connected_graph(5, 3, grng);
    const IncidencePlan plan = IncidencePlan::build(g, 2);
    const int k = plan.num_incidences;
    Tensor maps0({k, 2, 2});
    for (int i = 0; i < k; ++i) {
      const Matrix m = Matrix::Identity(2, 2) + 0.3 * gaussian_matrix(2, 2, grng);
      for (int j = 0; j < 4; ++j) maps0[i * 4 + j] = m(j / 2, j % 2);
    }
    unary("sheaf_blocks", [plan](Var m) { return sheaf_blocks(m, plan); }, {k, 2, 2});
    cases.back().params[0] = maps0;
    cases.push_back({"apply_normalized_mean",
                     [plan](Tape&, const std::vector<Var>& p) {
                       return probe(apply_normalized_mean(sheaf_blocks(p[0], plan), p[1], plan), 3);
                     },
                     {maps0, random_tensor({5, 2, 2}, rng)}});
    cases.push_back({"apply_normalized_cov",
                     [plan](Tape&, const std::vector<Var>& p) {
                       return probe(apply_normalized_cov(sheaf_blocks(p[0], plan), spd(p[1]), plan), 4);
                     },
                     {maps0, random_tensor({10, 2, 2}, rng)}});
    cases.push_back({"diffusion_steps",
                     [plan](Tape&, const std::vector<Var>& p) {
                       const Var blocks = sheaf_blocks(p[0], plan);
                       return add(probe(mean_diffusion_step(blocks, p[1], plan), 5),
                                  probe(cov_diffusion_step(blocks, spd(p[2]), plan), 6));
                     },
                     {maps0, random_tensor({5, 2, 2}, rng), random_tensor({10, 2, 2}, rng)}});
  }
  for (MapClass cls : {MapClass::diagonal, MapClass::orthogonal, MapClass::general}) {
    const int width = map_output_width(cls, 3);
    unary("project_maps_" + to_string(cls), [cls](Var raw) { return project_maps(raw, cls, 3); },
          {4, width}, 0.4);
  }

  // End-to-end losses on a 4-node instance.
  SynthConfig sc;
  sc.nodes = 4;
  sc.ba_m = 2;
  sc.target_samples = 6;
  sc.seed = 11;
  static const Dataset ds = synthesize(sc);
  for (ModelKind kind : {ModelKind::gsnn_diag, ModelKind::gsnn_orth, ModelKind::gsnn_gen,
                         ModelKind::gsnn_graphlap, ModelKind::gaussian_gcn, ModelKind::nsd_orth}) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.hidden = 2;
    cfg.layers = 2;
    cfg.map_hidden = 4;
    cfg.readout_hidden = 4;
    cfg.samples = 5;
    cfg.sinkhorn.epsilon = 1.0;
    cfg.sinkhorn.iters = 30;
    cfg.seed = 3;
    std::shared_ptr<Model> model = make_model(cfg, ds);
    std::vector<Tensor> params;
    for (const auto& p : model->parameters()) params.push_back(p.value);
    std::vector<RowMatrix> targets;
    for (const SampleSet& s : ds.targets) targets.emplace_back(s.rows);
    const std::vector<int> nodes{0, 1, 2, 3};
    cases.push_back({"end_to_end_" + to_string(kind),
                     [model, targets, nodes, cfg](Tape& tape, const std::vector<Var>& p) {
                       Rng noise(17);
                       const ForwardResult r = model->forward(tape, p, noise, false);
                       return sinkhorn_loss(r.samples, r.per_node, targets, nodes, cfg.sinkhorn);
                     },
                     params, true});
  }
  return cases;
}

}  // namespace

CheckResult check_gradients() {
  return timed(7, "gradient fidelity", 60.0, [](std::string& detail) {
    double worst_op = 0.0, worst_comp = 0.0;
    std::string worst_op_name, worst_comp_name;
    int count = 0;
    for (const GradCase& c : gradient_cases()) {
      const double err = ad::grad_check(c.fn, c.params);
      ++count;
      double& worst = c.composite ? worst_comp : worst_op;
      std::string& name = c.composite ? worst_comp_name : worst_op_name;
      if (!(err <= worst)) {
        worst = err;
        name = c.name;
      }
    }
    detail = fmt("%.0f cases; worst op error %.3g", count, worst_op) + " (" + worst_op_name +
             fmt(", tol 1e-4); worst composite error %.3g", worst_comp) + " (" + worst_comp_name +
             ", tol 1e-3)";
    return worst_op < 1e-4 && worst_comp < 1e-3;
  });
}

CheckResult check_sinkhorn_bures() {
  return timed(8, "Sinkhorn vs Bures", 60.0, [](std::string& detail) {
    Rng rng(808);
    ad::SinkhornOptions opts;
    opts.epsilon = 0.05;
    opts.iters = 200;
    double worst = 0.0;
    int pairs = 0;
    while (pairs < 10) {
      const Gaussian p(Vector(2.0 * gaussian_matrix(2, 1, rng)), random_psd(2, 2, rng) + 0.2 * Matrix::Identity(2, 2));
      const Gaussian q(Vector(2.0 * gaussian_matrix(2, 1, rng)), random_psd(2, 2, rng) + 0.2 * Matrix::Identity(2, 2));
      const double exact = bures_w2(p, q);
      if (exact < 1.0 || exact > 5.0) continue;
      const ad::RowMatrix x = sample(p, 2000, rng).rows;
      const ad::RowMatrix y = sample(q, 2000, rng).rows;
      const double est = std::sqrt(std::max(0.0, ad::sinkhorn(x, y, opts, false).value));
      worst = std::max(worst, std::abs(est - exact) / exact);
      ++pairs;
    }
    detail = fmt("max relative error %.3g over 10 pairs (tol 0.1)", worst);
    return worst <= 0.1;
  });
}

const std::vector<std::function<CheckResult()>>& property_checks() {
  static const std::vector<std::function<CheckResult()>> checks = {
      check_constant_sheaf,   check_laplacian_routes, check_sections,   check_psd_closure,
      check_orbit_invariants, check_lyapunov_scaling, check_gradients, check_sinkhorn_bures};
  return checks;
}

std::vector<CheckResult> run_verify(std::ostream& out) {
  std::vector<CheckResult> results;
  for (const auto& check : property_checks()) {
    results.push_back(check());
    out << format_check(results.back()) << std::endl;
  }
  return results;
}

}  // namespace gsheaf
