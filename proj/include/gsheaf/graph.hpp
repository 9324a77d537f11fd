#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace gsheaf {

/// Undirected edge stored with u < v.
struct Edge {
  int u = 0;
  int v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected simple graph with a fixed node order.
///
/// Edges are kept sorted lexicographically; the position of an edge in
/// `edges()` is its canonical index, used to address per-edge and
/// per-incidence data everywhere else in the library.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from an arbitrary pair list. Pairs are normalized to
  /// (min, max); self-loops, duplicates and out-of-range nodes are rejected.
  static Graph from_edges(int n, const std::vector<std::pair<int, int>>& pairs);

  int num_nodes() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }

  std::span<const int> neighbors(int v) const;
  /// Edge indices incident to v, aligned with neighbors(v).
  std::span<const int> incident_edges(int v) const;
  int degree(int v) const { return static_cast<int>(adjacency_[v].size()); }
  int max_degree() const;

  std::optional<int> edge_index(int a, int b) const;
  bool has_edge(int a, int b) const { return edge_index(a, b).has_value(); }
  bool is_connected() const;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<std::vector<int>> incident_;
};

/// Per-edge source/target assignment.
struct Orientation {
  std::vector<std::pair<int, int>> arcs;  // (source, target) per edge index

  /// (min, max) endpoint orientation.
  static Orientation canonical(const Graph& g);
  void flip(int e) { std::swap(arcs[e].first, arcs[e].second); }
  int source(int e) const { return arcs[e].first; }
  int target(int e) const { return arcs[e].second; }
};

/// Preferential attachment seeded with an m-clique.
Graph barabasi_albert(int n, int m, std::uint64_t seed);

/// Ring lattice with mean degree k, each lattice edge rewired with
/// probability p. A disconnected result is regenerated with seed + 1.
Graph watts_strogatz(int n, int k, double p, std::uint64_t seed);

struct GeoPoint {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
};

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance on a sphere of radius 6371 km.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

/// Edge (u, v) iff haversine distance <= radius_km.
Graph geo_graph(const std::vector<GeoPoint>& coords, double radius_km);

}  // namespace gsheaf
