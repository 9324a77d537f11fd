#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gsheaf/gaussian.hpp"
#include "gsheaf/graph.hpp"

namespace gsheaf {

struct Splits {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

enum class SplitName { train, val, test };

/// Regression instance: an input Gaussian and target draws per node.
struct Dataset {
  Graph graph;
  GaussianField inputs;
  std::vector<SampleSet> targets;
  /// Draws from the inputs, consumed by the sample-based baselines.
  std::vector<SampleSet> input_samples;
  Splits splits;
  std::map<std::string, std::string> meta;

  int num_nodes() const { return graph.num_nodes(); }
  int input_dim() const { return inputs.empty() ? 0 : inputs.front().dim(); }
  int target_dim() const { return targets.empty() ? 0 : targets.front().dim(); }
  const std::vector<int>& nodes(SplitName s) const;
  /// Throws ShapeError / ParameterError when the invariants are broken.
  void validate() const;
};

/// Uniform random permutation split; part sizes are round(r * n) for the
/// first two ratios, the rest goes to test.
Splits split_nodes(int n, const std::array<double, 3>& ratios, std::uint64_t seed);

/// Draw from InverseWishart(scale, df) via a Bartlett-decomposed
/// Wishart(scale^-1, df) draw.
Matrix sample_inverse_wishart(const Matrix& scale, double df, Rng& rng);

/// Neighbor weights alpha_u for node v, aligned with g.neighbors(v).
std::vector<double> target_weights(const Graph& g, const GaussianField& field, int v);

/// y_v = nu_v * (conv over neighbors of (alpha_u I) # nu_u).
GaussianField make_targets(const Graph& g, const GaussianField& field);

enum class GraphModel { barabasi_albert, watts_strogatz };

struct SynthConfig {
  GraphModel model = GraphModel::barabasi_albert;
  int nodes = 200;
  int ba_m = 25;
  int ws_k = 10;
  double ws_p = 0.1;
  int dim = 2;
  int target_samples = 30;
  double df = 0.0;  // <= 0 selects dim + 3
  std::uint64_t seed = 0;
};

Dataset synthesize(const SynthConfig& cfg);

struct WeatherConfig {
  std::string stations_csv;
  std::string measurements_csv;
  double radius_km = 200.0;
  std::vector<std::string> input_columns;
  std::vector<std::string> target_columns;
  /// Inclusive ISO date ranges (YYYY-MM-DD); empty bounds are open.
  std::string input_from, input_to;
  std::string target_from, target_to;
  std::uint64_t seed = 0;
};

/// Stations without usable rows in both periods, or without a neighbor
/// within the radius, are dropped with a warning on stderr.
Dataset load_weather(const WeatherConfig& cfg);

void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);
std::string dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const std::string& text);

}  // namespace gsheaf
