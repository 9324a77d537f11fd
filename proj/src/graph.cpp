#include "gsheaf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "gsheaf/error.hpp"

namespace gsheaf {

Graph Graph::from_edges(int n, const std::vector<std::pair<int, int>>& pairs) {
  if (n < 0) throw ParameterError("graph: negative node count");
  Graph g;
  g.n_ = n;
  g.edges_.reserve(pairs.size());
  for (auto [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= n || b >= n) {
      throw ParameterError("graph: edge (" + std::to_string(a) + "," + std::to_string(b) +
                           ") out of range");
    }
    if (a == b) throw ParameterError("graph: self-loop at node " + std::to_string(a));
    g.edges_.push_back({std::min(a, b), std::max(a, b)});
  }
  std::sort(g.edges_.begin(), g.edges_.end(), [](const Edge& x, const Edge& y) {
    return x.u != y.u ? x.u < y.u : x.v < y.v;
  });
  if (std::adjacent_find(g.edges_.begin(), g.edges_.end()) != g.edges_.end()) {
    throw ParameterError("graph: duplicate edge");
  }
  g.adjacency_.assign(n, {});
  g.incident_.assign(n, {});
  for (int e = 0; e < g.num_edges(); ++e) {
    g.adjacency_[g.edges_[e].u].push_back(g.edges_[e].v);
    g.adjacency_[g.edges_[e].v].push_back(g.edges_[e].u);
  }
  for (int v = 0; v < n; ++v) {
    auto& nb = g.adjacency_[v];
    std::sort(nb.begin(), nb.end());
    g.incident_[v].reserve(nb.size());
    for (int u : nb) g.incident_[v].push_back(*g.edge_index(v, u));
  }
  return g;
}

std::span<const int> Graph::neighbors(int v) const { return adjacency_[v]; }

std::span<const int> Graph::incident_edges(int v) const { return incident_[v]; }

int Graph::max_degree() const {
  int k = 0;
  for (int v = 0; v < n_; ++v) k = std::max(k, degree(v));
  return k;
}

std::optional<int> Graph::edge_index(int a, int b) const {
  if (a == b || a < 0 || b < 0 || a >= n_ || b >= n_) return std::nullopt;
  const Edge key{std::min(a, b), std::max(a, b)};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key, [](const Edge& x, const Edge& y) {
    return x.u != y.u ? x.u < y.u : x.v < y.v;
  });
  if (it == edges_.end() || !(*it == key)) return std::nullopt;
  return static_cast<int>(it - edges_.begin());
}

bool Graph::is_connected() const {
  if (n_ <= 1) return true;
  std::vector<char> seen(n_, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int u : adjacency_[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count == n_;
}

Orientation Orientation::canonical(const Graph& g) {
  Orientation o;
  o.arcs.reserve(g.num_edges());
  for (const Edge& e : g.edges()) o.arcs.emplace_back(e.u, e.v);
  return o;
}

Graph barabasi_albert(int n, int m, std::uint64_t seed) {
  if (m < 1 || m >= n) {
    throw ParameterError("barabasi_albert: need 1 <= m < n (n=" + std::to_string(n) +
                         ", m=" + std::to_string(m) + ")");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::pair<int, int>> pairs;
  // Each endpoint occurrence is one ticket for degree-proportional sampling.
  std::vector<int> tickets;
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      pairs.emplace_back(a, b);
      tickets.push_back(a);
      tickets.push_back(b);
    }
  }
  for (int v = m; v < n; ++v) {
    std::set<int> targets;
    while (static_cast<int>(targets.size()) < m) {
      int t;
      if (tickets.empty()) {
        t = std::uniform_int_distribution<int>(0, v - 1)(rng);
      } else {
        t = tickets[std::uniform_int_distribution<std::size_t>(0, tickets.size() - 1)(rng)];
      }
      targets.insert(t);
    }
    for (int t : targets) {
      pairs.emplace_back(t, v);
      tickets.push_back(t);
      tickets.push_back(v);
    }
  }
  return Graph::from_edges(n, pairs);
}

namespace {

Graph watts_strogatz_once(int n, int k, double p, std::mt19937_64& rng) {
  std::vector<std::set<int>> adj(n);
  std::vector<std::pair<int, int>> lattice;
  for (int v = 0; v < n; ++v) {
    for (int j = 1; j <= k / 2; ++j) {
      int u = (v + j) % n;
      adj[v].insert(u);
      adj[u].insert(v);
      lattice.emplace_back(v, u);
    }
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (auto& [v, u] : lattice) {
    if (coin(rng) >= p) continue;
    if (static_cast<int>(adj[v].size()) >= n - 1) continue;  // no free target
    int w = pick(rng);
    while (w == v || adj[v].count(w)) w = pick(rng);
    adj[v].erase(u);
    adj[u].erase(v);
    adj[v].insert(w);
    adj[w].insert(v);
    u = w;
  }
  return Graph::from_edges(n, lattice);
}

}  // namespace

Graph watts_strogatz(int n, int k, double p, std::uint64_t seed) {
  if (k <= 0 || k % 2 != 0 || k >= n || !(p >= 0.0 && p <= 1.0)) {
    throw ParameterError("watts_strogatz: need even 0 < k < n and 0 <= p <= 1");
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt));
    Graph g = watts_strogatz_once(n, k, p, rng);
    if (g.is_connected()) return g;
  }
  throw ParameterError("watts_strogatz: no connected graph after 1000 seeds");
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double phi1 = a.latitude_deg * rad;
  const double phi2 = b.latitude_deg * rad;
  const double dphi = (b.latitude_deg - a.latitude_deg) * rad;
  const double dlambda = (b.longitude_deg - a.longitude_deg) * rad;
  const double s = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) * std::sin(dlambda / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(s)));
}

Graph geo_graph(const std::vector<GeoPoint>& coords, double radius_km) {
  if (coords.size() < 2) throw ParameterError("geo_graph: need at least 2 points");
  if (!(radius_km > 0.0)) throw ParameterError("geo_graph: radius must be positive");
  const int n = static_cast<int>(coords.size());
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (haversine_km(coords[a], coords[b]) <= radius_km) pairs.emplace_back(a, b);
    }
  }
  return Graph::from_edges(n, pairs);
}

}  // namespace gsheaf
