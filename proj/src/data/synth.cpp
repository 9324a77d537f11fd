#include <algorithm>
#include <cmath>
#include <numeric>

#include "gsheaf/data.hpp"
#include "gsheaf/error.hpp"

namespace gsheaf {

namespace {

constexpr double kKlFloor = 1e-8;
constexpr double kScaleRidge = 1e-6;

}  // namespace

const std::vector<int>& Dataset::nodes(SplitName s) const {
  switch (s) {
    case SplitName::train:
      return splits.train;
    case SplitName::val:
      return splits.val;
    case SplitName::test:
      return splits.test;
  }
  return splits.test;
}

void Dataset::validate() const {
  const int n = graph.num_nodes();
  check_field(inputs, n);
  if (static_cast<int>(targets.size()) != n) throw ShapeError("dataset: one target set per node");
  for (const auto& t : targets) {
    if (t.count() < 1) throw ShapeError("dataset: empty target set");
    if (t.dim() != target_dim()) throw ShapeError("dataset: target dimensions differ");
  }
  if (!input_samples.empty()) {
    if (static_cast<int>(input_samples.size()) != n) {
      throw ShapeError("dataset: one input sample set per node");
    }
    for (const auto& s : input_samples) {
      if (s.dim() != input_dim() || s.count() != input_samples.front().count()) {
        throw ShapeError("dataset: input sample sets differ in shape");
      }
    }
  }
  std::vector<int> seen(n, 0);
  for (const auto* part : {&splits.train, &splits.val, &splits.test}) {
    for (int v : *part) {
      if (v < 0 || v >= n) throw ShapeError("dataset: split node out of range");
      ++seen[v];
    }
  }
  for (int c : seen) {
    if (c != 1) throw ParameterError("dataset: splits do not partition the nodes");
  }
}

Splits split_nodes(int n, const std::array<double, 3>& ratios, std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ParameterError("split ratios must be nonnegative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw ParameterError("split ratios must sum to 1");
  }
  if (n < 0) throw ParameterError("split: negative node count");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const int n_train = static_cast<int>(std::lround(ratios[0] * n));
  const int n_val = std::min(n - n_train, static_cast<int>(std::lround(ratios[1] * n)));
  Splits s;
  s.train.assign(perm.begin(), perm.begin() + n_train);
  s.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  s.test.assign(perm.begin() + n_train + n_val, perm.end());
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

Matrix sample_inverse_wishart(const Matrix& scale, double df, Rng& rng) {
  const int p = static_cast<int>(scale.rows());
  if (scale.cols() != p || p < 1) throw ShapeError("inverse Wishart: scale must be square");
  if (!(df > p - 1)) throw ParameterError("inverse Wishart: df must exceed dim - 1");
  const Matrix inv_scale = scale.inverse();
  Eigen::LLT<Matrix> llt(0.5 * (inv_scale + inv_scale.transpose()));
  if (llt.info() != Eigen::Success) {
    throw SingularityError("inverse Wishart: scale is not positive definite");
  }
  const Matrix l = llt.matrixL();
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    std::chi_squared_distribution<double> chi2(df - i);
    a(i, i) = std::sqrt(chi2(rng));
    for (int j = 0; j < i; ++j) a(i, j) = normal(rng);
  }
  const Matrix la = l * a;
  const Matrix w = la * la.transpose();
  const Matrix sigma = w.inverse();
  return 0.5 * (sigma + sigma.transpose());
}

std::vector<double> target_weights(const Graph& g, const GaussianField& field, int v) {
  check_field(field, g.num_nodes());
  if (g.degree(v) == 0) throw DegeneracyError("target weights: node " + std::to_string(v) + " is isolated");
  std::vector<double> inv;
  for (int u : g.neighbors(v)) {
    inv.push_back(1.0 / std::max(kl_divergence(field[v], field[u]), kKlFloor));
  }
  const double top = *std::max_element(inv.begin(), inv.end());
  for (double& w : inv) w /= top;
  return inv;
}

GaussianField make_targets(const Graph& g, const GaussianField& field) {
  const int n = g.num_nodes();
  const int d = check_field(field, n);
  GaussianField out;
  out.reserve(n);
  for (int v = 0; v < n; ++v) {
    const std::vector<double> alpha = target_weights(g, field, v);
    std::vector<Gaussian> parts{field[v]};
    const auto nb = g.neighbors(v);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      parts.push_back(pushforward(alpha[i] * Matrix::Identity(d, d), field[nb[i]]));
    }
    out.push_back(convolve(parts));
  }
  return out;
}

Dataset synthesize(const SynthConfig& cfg) {
  const int s = cfg.dim;
  if (s < 1) throw ParameterError("synthesize: dimension must be >= 1");
  if (cfg.target_samples < 1) throw ParameterError("synthesize: target sample count must be >= 1");
  const double df = cfg.df > 0.0 ? cfg.df : s + 3.0;
  if (!(df > s + 1)) throw ParameterError("synthesize: df must exceed dim + 1");

  Dataset ds;
  if (cfg.model == GraphModel::barabasi_albert) {
    ds.graph = barabasi_albert(cfg.nodes, cfg.ba_m, cfg.seed);
    ds.meta["generator"] = "ba";
    ds.meta["m"] = std::to_string(cfg.ba_m);
  } else {
    ds.graph = watts_strogatz(cfg.nodes, cfg.ws_k, cfg.ws_p, cfg.seed);
    ds.meta["generator"] = "ws";
    ds.meta["k"] = std::to_string(cfg.ws_k);
    ds.meta["p"] = std::to_string(cfg.ws_p);
  }
  ds.meta["nodes"] = std::to_string(cfg.nodes);
  ds.meta["dim"] = std::to_string(s);
  ds.meta["df"] = std::to_string(df);
  ds.meta["target_samples"] = std::to_string(cfg.target_samples);
  ds.meta["seed"] = std::to_string(cfg.seed);

  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector u1(s);
  for (int i = 0; i < s; ++i) u1[i] = unit(rng);
  Matrix u2(s, s);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) u2(i, j) = unit(rng);
  }
  const Matrix scale = u2 * u2.transpose() + kScaleRidge * Matrix::Identity(s, s);
  const Gaussian mean_law(u1, PsdMatrix(scale));

  const int n = ds.graph.num_nodes();
  ds.inputs.reserve(n);
  for (int v = 0; v < n; ++v) {
    const SampleSet mu = sample(mean_law, 1, rng);
    const Matrix sigma = sample_inverse_wishart(scale, df, rng);
    ds.inputs.emplace_back(Vector(mu.rows.row(0).transpose()), PsdMatrix(sigma));
  }
  const GaussianField targets = make_targets(ds.graph, ds.inputs);
  for (int v = 0; v < n; ++v) ds.targets.push_back(sample(targets[v], cfg.target_samples, rng));
  for (int v = 0; v < n; ++v) {
    ds.input_samples.push_back(sample(ds.inputs[v], cfg.target_samples, rng));
  }
  ds.splits = split_nodes(n, {0.6, 0.2, 0.2}, cfg.seed);
  return ds;
}

}  // namespace gsheaf
