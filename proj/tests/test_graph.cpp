#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gsheaf/error.hpp"
#include "gsheaf/graph.hpp"

using namespace gsheaf;

namespace {

int degree_sum(const Graph& g) {
  int s = 0;
  for (int v = 0; v < g.num_nodes(); ++v) s += g.degree(v);
  return s;
}

}  // namespace

TEST_CASE("from_edges normalizes and rejects malformed input") {
  const Graph g = Graph::from_edges(4, {{2, 1}, {0, 3}, {1, 0}});
  CHECK(g.num_edges() == 3);
  CHECK(g.edge(0) == Edge{0, 1});
  CHECK(g.edge(1) == Edge{0, 3});
  CHECK(g.edge(2) == Edge{1, 2});
  CHECK(g.has_edge(3, 0));
  CHECK_FALSE(g.has_edge(2, 3));
  CHECK_THROWS_AS(Graph::from_edges(3, {{1, 1}}), ParameterError);
  CHECK_THROWS_AS(Graph::from_edges(3, {{0, 1}, {1, 0}}), ParameterError);
  CHECK_THROWS_AS(Graph::from_edges(3, {{0, 3}}), ParameterError);
}

TEST_CASE("orientation defaults to (min, max)") {
  const Graph g = Graph::from_edges(3, {{2, 0}, {1, 2}});
  Orientation o = Orientation::canonical(g);
  for (int e = 0; e < g.num_edges(); ++e) CHECK(o.source(e) < o.target(e));
  o.flip(0);
  CHECK(o.source(0) == g.edge(0).v);
}

TEST_CASE("barabasi_albert examples") {
  const Graph tri = barabasi_albert(3, 2, 5);
  CHECK(tri.num_edges() == 3);
  // m-clique seed plus m edges for each of the remaining n - m nodes.
  const Graph big = barabasi_albert(200, 25, 7);
  CHECK(big.num_edges() == (200 - 25) * 25 + 25 * 24 / 2);
  CHECK(big.num_edges() == 4675);
  CHECK(big.is_connected());
  for (int v = 0; v < 200; ++v) CHECK(big.degree(v) >= 25);
  CHECK_THROWS_AS(barabasi_albert(5, 5, 1), ParameterError);
  CHECK_THROWS_AS(barabasi_albert(5, 0, 1), ParameterError);
}

TEST_CASE("watts_strogatz examples") {
  const Graph ring = watts_strogatz(10, 2, 0.0, 1);
  CHECK(ring.num_edges() == 10);
  for (int v = 0; v < 10; ++v) {
    CHECK(ring.degree(v) == 2);
    CHECK(ring.has_edge(v, (v + 1) % 10));
  }
  const Graph ws = watts_strogatz(200, 24, 0.3, 3);
  CHECK(ws.num_edges() == 2400);
  CHECK(ws.is_connected());
  CHECK_THROWS_AS(watts_strogatz(10, 3, 0.1, 1), ParameterError);
  CHECK_THROWS_AS(watts_strogatz(10, 2, 1.5, 1), ParameterError);
}

TEST_CASE("generators are deterministic and satisfy the handshake lemma") {
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    const Graph a = barabasi_albert(60, 4, seed), b = barabasi_albert(60, 4, seed);
    CHECK(a.edges() == b.edges());
    CHECK(degree_sum(a) == 2 * a.num_edges());
    const Graph c = watts_strogatz(60, 6, 0.2, seed), d = watts_strogatz(60, 6, 0.2, seed);
    CHECK(c.edges() == d.edges());
    CHECK(degree_sum(c) == 2 * c.num_edges());
    CHECK(c.is_connected());
  }
  CHECK(barabasi_albert(60, 4, 1).edges() != barabasi_albert(60, 4, 2).edges());
}

TEST_CASE("haversine and geo_graph") {
  // Independent oracle: one degree of arc on a great circle.
  const double one_degree = kEarthRadiusKm * M_PI / 180.0;
  CHECK(haversine_km({0, 0}, {0, 1}) == doctest::Approx(one_degree).epsilon(1e-12));
  CHECK(haversine_km({0, 0}, {0, 2}) == doctest::Approx(2 * one_degree).epsilon(1e-12));
  CHECK(one_degree == doctest::Approx(111.19492664455873).epsilon(1e-14));

  CHECK(geo_graph({{10, 10}, {10, 10}}, 1.0).num_edges() == 1);
  CHECK(geo_graph({{0, 0}, {0, 1}}, 200.0).num_edges() == 1);
  CHECK(geo_graph({{0, 0}, {0, 2}}, 200.0).num_edges() == 0);
  // Two stations about 100 km apart along a meridian.
  CHECK(geo_graph({{45, -75}, {45 + 100.0 / one_degree, -75}}, 200.0).num_edges() == 1);
  CHECK_THROWS_AS(geo_graph({{0, 0}}, 10.0), ParameterError);
}

TEST_CASE("geo_graph is equivariant under point permutations") {
  const std::vector<GeoPoint> pts{{45, -75}, {45.5, -73.6}, {43.7, -79.4}, {46.8, -71.2}, {44.6, -63.6}};
  const Graph g = geo_graph(pts, 300.0);
  std::vector<int> perm{3, 0, 4, 1, 2};
  std::vector<GeoPoint> shuffled(pts.size());
  for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = pts[perm[i]];
  const Graph h = geo_graph(shuffled, 300.0);
  CHECK(h.num_edges() == g.num_edges());
  for (int a = 0; a < 5; ++a) {
    for (int b = a + 1; b < 5; ++b) CHECK(h.has_edge(a, b) == g.has_edge(perm[a], perm[b]));
  }
}
