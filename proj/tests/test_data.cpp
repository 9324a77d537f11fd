#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "gsheaf/data.hpp"
#include "gsheaf/error.hpp"

using namespace gsheaf;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gsheaf_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

double min_eig(const Matrix& m) { return Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues().minCoeff(); }

}  // namespace

TEST_CASE("node splits") {
  const Splits s = split_nodes(200, {0.6, 0.2, 0.2}, 1);
  CHECK(s.train.size() == 120);
  CHECK(s.val.size() == 40);
  CHECK(s.test.size() == 40);
  std::set<int> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 200);

  const Splits t = split_nodes(10, {0.6, 0.2, 0.2}, 2);
  CHECK(t.train.size() == 6);
  CHECK(t.val.size() == 2);
  CHECK(t.test.size() == 2);
  const Splits again = split_nodes(10, {0.6, 0.2, 0.2}, 2);
  CHECK(again.train == t.train);
  CHECK(again.test == t.test);
  CHECK_THROWS_AS(split_nodes(10, {0.6, 0.2, 0.3}, 2), ParameterError);

  for (int n = 2; n <= 60; ++n) {
    const Splits r = split_nodes(n, {0.6, 0.2, 0.2}, n);
    CHECK(std::abs(static_cast<double>(r.train.size()) - 0.6 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(r.val.size()) - 0.2 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(r.test.size()) - 0.2 * n) <= 1.0);
  }
}

TEST_CASE("target construction examples") {
  const Graph edge = Graph::from_edges(2, {{0, 1}});
  const GaussianField chain{Gaussian(Vector::Zero(1), Matrix::Constant(1, 1, 1.0)),
                            Gaussian(Vector::Ones(1), Matrix::Constant(1, 1, 1.0))};
  CHECK(target_weights(edge, chain, 0) == std::vector<double>{1.0});
  CHECK(target_weights(edge, chain, 1) == std::vector<double>{1.0});
  const GaussianField y = make_targets(edge, chain);
  for (const Gaussian& t : y) {
    CHECK(t.mean(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(t.cov.matrix()(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  }

  // Identical neighbors: every weight is 1 and the means add up.
  const Graph star = Graph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}});
  Matrix cov(2, 2);
  cov << 2.0, 0.3, 0.3, 1.0;
  Vector mu(2);
  mu << 0.5, -1.0;
  GaussianField f(4, Gaussian(mu, cov));
  f[0] = Gaussian(Vector::Ones(2), Matrix(Matrix::Identity(2, 2)));
  for (double a : target_weights(star, f, 0)) CHECK(a == 1.0);
  const GaussianField ys = make_targets(star, f);
  CHECK((ys[0].mean - (Vector::Ones(2) + 3.0 * mu)).norm() < 1e-12);

  CHECK_THROWS_AS(target_weights(Graph::from_edges(3, {{0, 1}}), GaussianField(3, f[1]), 2), DegeneracyError);
}

TEST_CASE("synthetic datasets") {
  SynthConfig cfg;
  cfg.nodes = 200;
  cfg.ba_m = 25;
  cfg.seed = 4;
  const Dataset ds = synthesize(cfg);
  CHECK(ds.num_nodes() == 200);
  CHECK(ds.input_dim() == 2);
  CHECK(ds.splits.train.size() == 120);
  CHECK(ds.splits.val.size() == 40);
  CHECK(ds.splits.test.size() == 40);
  for (const Gaussian& g : ds.inputs) CHECK(g.cov.min_eigenvalue() > 0.0);
  for (const SampleSet& t : ds.targets) CHECK(t.count() == 30);

  CHECK(dataset_to_json(synthesize(cfg)) == dataset_to_json(ds));
  SynthConfig other = cfg;
  other.seed = 5;
  CHECK(dataset_to_json(synthesize(other)) != dataset_to_json(ds));

  SynthConfig bad = cfg;
  bad.df = 3.0;
  CHECK_THROWS_AS(synthesize(bad), ParameterError);

  SynthConfig ws = cfg;
  ws.model = GraphModel::watts_strogatz;
  ws.nodes = 50;
  ws.ws_k = 4;
  CHECK(synthesize(ws).graph.num_edges() == 100);
}

TEST_CASE("target weights and covariance domination") {
  SynthConfig cfg;
  cfg.nodes = 60;
  cfg.ba_m = 4;
  cfg.seed = 9;
  const Dataset ds = synthesize(cfg);
  const GaussianField y = make_targets(ds.graph, ds.inputs);
  for (int v = 0; v < ds.num_nodes(); ++v) {
    const std::vector<double> a = target_weights(ds.graph, ds.inputs, v);
    CHECK(*std::max_element(a.begin(), a.end()) == 1.0);
    for (double x : a) {
      CHECK(x > 0.0);
      CHECK(x <= 1.0);
    }
    CHECK(min_eig(y[v].cov.matrix() - ds.inputs[v].cov.matrix()) >= -1e-9);
  }
}

TEST_CASE("dataset JSON round trip") {
  SynthConfig cfg;
  cfg.nodes = 40;
  cfg.ba_m = 3;
  cfg.seed = 6;
  const Dataset ds = synthesize(cfg);
  const fs::path dir = fresh_dir("dataset");
  const std::string path = (dir / "ds.json").string();
  write_dataset(ds, path);
  const Dataset back = read_dataset(path);
  CHECK(back.graph.edges() == ds.graph.edges());
  for (int v = 0; v < ds.num_nodes(); ++v) {
    CHECK(back.inputs[v].mean == ds.inputs[v].mean);
    CHECK(back.inputs[v].cov.matrix() == ds.inputs[v].cov.matrix());
    CHECK(back.targets[v].rows == ds.targets[v].rows);
  }
  CHECK(back.splits.test == ds.splits.test);
  CHECK(back.meta == ds.meta);
  CHECK(dataset_to_json(back) == dataset_to_json(ds));
  CHECK_THROWS_AS(dataset_from_json("{\"graph\": {}}"), SchemaError);
  CHECK_THROWS_AS(dataset_from_json("not json"), SchemaError);
  fs::remove_all(dir);
}

TEST_CASE("weather ingestion") {
  const fs::path dir = fresh_dir("weather");
  // Degrees of latitude per 100 km on the reference sphere.
  const double step = 100.0 / 111.19492664455873;
  write_file(dir / "stations.csv",
             "station_id,name,latitude,longitude\n"
             "A,Alpha,50.0,-100.0\n"
             "B,Beta," + std::to_string(50.0 + step) + ",-100.0\n"
             "C,Gamma,10.0,20.0\n");
  write_file(dir / "meas.csv",
             "station_id,date,temp,rain\n"
             "A,2020-01-01,5,1\n"
             "A,2020-01-02,5,2\n"
             "A,2020-01-03,5,0\n"
             "A,2021-01-01,4,0\n"
             "B,2020-01-01,1,1\n"
             "B,2020-01-02,3,\n"
             "B,2020-01-03,2,4\n"
             "B,2021-01-01,7,1\n"
             "C,2020-01-01,1,1\n");
  WeatherConfig cfg;
  cfg.stations_csv = (dir / "stations.csv").string();
  cfg.measurements_csv = (dir / "meas.csv").string();
  cfg.radius_km = 200.0;
  cfg.input_columns = {"temp"};
  cfg.target_columns = {"temp"};
  cfg.input_from = "2020-01-01";
  cfg.input_to = "2020-12-31";
  cfg.target_from = "2021-01-01";
  const Dataset ds = load_weather(cfg);
  CHECK(ds.num_nodes() == 2);
  CHECK(ds.graph.num_edges() == 1);
  CHECK(ds.inputs[0].mean(0) == doctest::Approx(5.0));
  CHECK(ds.inputs[0].cov.matrix()(0, 0) == 0.0);
  CHECK(ds.targets[1].rows(0, 0) == 7.0);

  cfg.input_columns = {"temp", "rain"};
  const Dataset two = load_weather(cfg);
  CHECK(two.input_dim() == 2);
  CHECK(two.input_samples[1].count() == 2);

  cfg.input_columns = {"humidity"};
  try {
    load_weather(cfg);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("humidity") != std::string::npos);
  }
  fs::remove_all(dir);
}
