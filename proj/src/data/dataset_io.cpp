#include <fstream>
#include <sstream>

#include "json.hpp"

#include "gsheaf/data.hpp"
#include "gsheaf/error.hpp"

namespace gsheaf {

using nlohmann::json;

namespace {

json rows_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix rows_from_json(const json& rows, int cols_hint = -1) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows[0].size()) : std::max(cols_hint, 0);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(rows[i].size()) != c) throw SchemaError("dataset: ragged matrix rows");
    for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

json samples_to_json(const std::vector<SampleSet>& sets) {
  json out = json::array();
  for (const auto& s : sets) out.push_back(rows_to_json(s.rows));
  return out;
}

std::vector<SampleSet> samples_from_json(const json& j) {
  std::vector<SampleSet> out;
  for (const auto& rows : j) out.push_back(SampleSet{rows_from_json(rows)});
  return out;
}

const json& require(const json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("dataset: missing key '") + key + "'");
  return j.at(key);
}

}  // namespace

std::string dataset_to_json(const Dataset& ds) {
  json j;
  json edges = json::array();
  for (const Edge& e : ds.graph.edges()) edges.push_back({e.u, e.v});
  j["graph"] = {{"num_nodes", ds.graph.num_nodes()}, {"edges", edges}};
  json inputs = json::array();
  for (const auto& g : ds.inputs) {
    json mean = json::array();
    for (Eigen::Index i = 0; i < g.mean.size(); ++i) mean.push_back(g.mean[i]);
    inputs.push_back({{"mean", mean}, {"cov", rows_to_json(g.cov.matrix())}});
  }
  j["inputs"] = inputs;
  j["targets"] = samples_to_json(ds.targets);
  j["input_samples"] = samples_to_json(ds.input_samples);
  j["splits"] = {{"train", ds.splits.train}, {"val", ds.splits.val}, {"test", ds.splits.test}};
  j["meta"] = ds.meta;
  return j.dump();
}

Dataset dataset_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("dataset: invalid JSON: ") + e.what());
  }
  Dataset ds;
  try {
    const json& g = require(j, "graph");
    std::vector<std::pair<int, int>> pairs;
    for (const auto& e : require(g, "edges")) pairs.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    ds.graph = Graph::from_edges(require(g, "num_nodes").get<int>(), pairs);
    for (const auto& in : require(j, "inputs")) {
      const auto& mean = require(in, "mean");
      Vector mu(static_cast<Eigen::Index>(mean.size()));
      for (std::size_t i = 0; i < mean.size(); ++i) mu[static_cast<Eigen::Index>(i)] = mean[i].get<double>();
      ds.inputs.emplace_back(mu, PsdMatrix(rows_from_json(require(in, "cov"), static_cast<int>(mu.size()))));
    }
    ds.targets = samples_from_json(require(j, "targets"));
    if (j.contains("input_samples")) ds.input_samples = samples_from_json(j.at("input_samples"));
    const json& sp = require(j, "splits");
    ds.splits.train = require(sp, "train").get<std::vector<int>>();
    ds.splits.val = require(sp, "val").get<std::vector<int>>();
    ds.splits.test = require(sp, "test").get<std::vector<int>>();
    if (j.contains("meta")) ds.meta = j.at("meta").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("dataset: ") + e.what());
  }
  ds.validate();
  return ds;
}

void write_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << dataset_to_json(ds) << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return dataset_from_json(buf.str());
}

}  // namespace gsheaf
