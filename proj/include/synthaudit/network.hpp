#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synthaudit/error.hpp"
#include "synthaudit/rng.hpp"

namespace synthaudit::network {

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;  // i < j
  double weight = 0;  // signed, nonzero
};

/// Undirected signed graph over named features; no self-loops, at most one
/// edge per pair.
class DepGraph {
 public:
  explicit DepGraph(std::vector<std::string> nodes)
      : nodes_(std::move(nodes)),
        adj_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nodes_.size()),
                                   static_cast<Eigen::Index>(nodes_.size()))) {}

  void add_edge(std::size_t i, std::size_t j, double weight) {
    require(i != j, ErrorCode::invalid_input, "self-loop");
    require(i < size() && j < size(), ErrorCode::invalid_input, "edge endpoint out of range");
    require(weight != 0.0, ErrorCode::invalid_input, "zero-weight edge");
    if (i > j) std::swap(i, j);
    require(adj_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == 0.0, ErrorCode::invalid_input,
            "duplicate edge");
    adj_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = weight;
    adj_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = weight;
    edges_.push_back({i, j, weight});
  }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  double weight(std::size_t i, std::size_t j) const {
    return adj_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXd& adjacency() const { return adj_; }

 private:
  std::vector<std::string> nodes_;
  Eigen::MatrixXd adj_;
  std::vector<Edge> edges_;
};

/// Edge (i, j) iff |rho_ij| > threshold, carrying the signed value.
inline DepGraph build_graph(const Eigen::MatrixXd& partial, std::vector<std::string> names, double threshold = 0.0) {
  require(partial.rows() == partial.cols(), ErrorCode::invalid_input, "partial matrix must be square");
  require(static_cast<std::size_t>(partial.rows()) == names.size(), ErrorCode::invalid_input,
          "node names do not match matrix size");
  require(threshold >= 0, ErrorCode::invalid_input, "threshold must be >= 0");
  DepGraph g(std::move(names));
  for (Eigen::Index j = 1; j < partial.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i)
      if (std::abs(partial(i, j)) > threshold)
        g.add_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j), partial(i, j));
  return g;
}

struct GraphMetrics {
  std::vector<std::size_t> degrees;
  std::vector<double> eigencentrality;
  double density = 0;
  std::size_t diameter = 0;
  std::size_t largest_component = 0;
};

/// Connected component id per node, ids in order of smallest member.
inline std::vector<std::size_t> components(const DepGraph& g) {
  const std::size_t n = g.size();
  std::vector<std::size_t> comp(n, n);
  std::size_t next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] != n) continue;
    std::queue<std::size_t> q;
    q.push(s);
    comp[s] = next;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (std::size_t v = 0; v < n; ++v)
        if (comp[v] == n && g.weight(u, v) != 0.0) {
          comp[v] = next;
          q.push(v);
        }
    }
    ++next;
  }
  return comp;
}

inline std::vector<std::size_t> bfs_distances(const DepGraph& g, std::size_t source) {
  const std::size_t n = g.size();
  const std::size_t inf = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(n, inf);
  std::queue<std::size_t> q;
  dist[source] = 0;
  q.push(source);
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (std::size_t v = 0; v < n; ++v)
      if (dist[v] == inf && g.weight(u, v) != 0.0) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
  }
  return dist;
}

inline GraphMetrics graph_metrics(const DepGraph& g, std::size_t max_power_steps = 10000) {
  const std::size_t n = g.size();
  require(n >= 1, ErrorCode::invalid_input, "graph has no nodes");
  GraphMetrics m;
  m.degrees.assign(n, 0);
  for (const auto& e : g.edges()) {
    ++m.degrees[e.i];
    ++m.degrees[e.j];
  }
  m.density = n > 1 ? static_cast<double>(g.edges().size()) / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1)) : 0.0;

  // Power iteration on |A| + I: same principal eigenvector as |A|, and the
  // shift removes the +/- rho tie on bipartite graphs.
  m.eigencentrality.assign(n, 0.0);
  if (!g.edges().empty()) {
    const Eigen::MatrixXd a = g.adjacency().cwiseAbs() + Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd x = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    bool converged = false;
    for (std::size_t step = 0; step < max_power_steps; ++step) {
      Eigen::VectorXd y = a * x;
      y /= y.maxCoeff();
      const double delta = (y - x).cwiseAbs().maxCoeff();
      x = std::move(y);
      if (delta < 1e-12) {
        converged = true;
        break;
      }
    }
    require(converged, ErrorCode::convergence, "eigencentrality power iteration did not converge");
    for (std::size_t i = 0; i < n; ++i) m.eigencentrality[i] = x(static_cast<Eigen::Index>(i));
  }

  const auto comp = components(g);
  std::vector<std::size_t> comp_size(n, 0);
  for (auto c : comp) ++comp_size[c];
  const auto largest = static_cast<std::size_t>(std::max_element(comp_size.begin(), comp_size.end()) - comp_size.begin());
  m.largest_component = comp_size[largest];
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] != largest) continue;
    const auto dist = bfs_distances(g, s);
    for (std::size_t v = 0; v < n; ++v)
      if (comp[v] == largest) m.diameter = std::max(m.diameter, dist[v]);
  }
  return m;
}

/// Community id per node; ids are contiguous 0..n_communities-1 in order of
/// first appearance.
struct CommunityPartition {
  std::vector<std::size_t> assignment;
  std::size_t n_communities = 0;

  static CommunityPartition from_labels(const std::vector<std::size_t>& labels) {
    CommunityPartition p;
    std::map<std::size_t, std::size_t> relabel;
    for (auto l : labels) {
      auto [it, fresh] = relabel.emplace(l, relabel.size());
      p.assignment.push_back(it->second);
    }
    p.n_communities = relabel.size();
    return p;
  }

  static CommunityPartition singletons(std::size_t n) {
    std::vector<std::size_t> l(n);
    std::iota(l.begin(), l.end(), 0);
    return from_labels(l);
  }

  bool operator==(const CommunityPartition&) const = default;
};

/// Constant Potts Model quality: sum over same-community pairs i < j of
/// (|w_ij| - resolution).
inline double cpm_quality(const DepGraph& g, const CommunityPartition& part, double resolution) {
  require(part.assignment.size() == g.size(), ErrorCode::invalid_input, "partition does not cover the graph");
  double q = 0;
  for (std::size_t j = 1; j < g.size(); ++j)
    for (std::size_t i = 0; i < j; ++i)
      if (part.assignment[i] == part.assignment[j]) q += std::abs(g.weight(i, j)) - resolution;
  return q;
}

namespace detail {

// One aggregation level: super-node weights (absolute, symmetric; diagonal
// unused) and the number of original nodes inside each super-node.
struct Level {
  Eigen::MatrixXd w;
  std::vector<double> size;
};

// Greedy local moving under CPM. Returns the community of each super-node and
// whether any node moved.
inline bool local_moves(const Level& lv, double resolution, Rng& rng, std::vector<std::size_t>& comm) {
  const std::size_t n = lv.size.size();
  comm.resize(n);
  std::iota(comm.begin(), comm.end(), 0);
  std::vector<double> csize = lv.size;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

  constexpr double kMinGain = 1e-12;
  bool moved_any = false;
  std::vector<double> link(n, 0.0);
  bool moved = true;
  while (moved) {
    moved = false;
    for (auto u : order) {
      const std::size_t a = comm[u];
      std::fill(link.begin(), link.end(), 0.0);
      for (std::size_t v = 0; v < n; ++v)
        if (v != u) link[comm[v]] += lv.w(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
      const double su = lv.size[u];
      const double stay = link[a] - resolution * su * (csize[a] - su);
      double best_gain = kMinGain;
      std::size_t best = a;
      for (std::size_t b = 0; b < n; ++b) {
        if (b == a || csize[b] == 0.0 || link[b] <= 0.0) continue;
        const double gain = link[b] - resolution * su * csize[b] - stay;
        if (gain > best_gain) {
          best_gain = gain;
          best = b;
        }
      }
      if (best == a && csize[a] > su && -stay > best_gain) {
        for (std::size_t b = 0; b < n; ++b)
          if (csize[b] == 0.0) {
            best = b;
            break;
          }
      }
      if (best != a) {
        csize[a] -= su;
        csize[best] += su;
        comm[u] = best;
        moved = moved_any = true;
      }
    }
  }
  return moved_any;
}

}  // namespace detail

/// Louvain heuristic with the CPM objective: singleton start, seeded-order
/// local moves taking the best strictly positive gain (a node may also leave
/// to an empty community), aggregation of communities into super-nodes, and
/// repetition until a level produces no move.
inline CommunityPartition louvain_cpm(const DepGraph& g, double resolution = 0.05, std::uint64_t seed = 0) {
  const std::size_t n = g.size();
  require(n >= 1, ErrorCode::invalid_input, "graph has no nodes");
  Rng rng(seed);
  detail::Level lv{g.adjacency().cwiseAbs(), std::vector<double>(n, 1.0)};
  std::vector<std::size_t> node_comm(n);
  std::iota(node_comm.begin(), node_comm.end(), 0);

  std::vector<std::size_t> comm;
  while (detail::local_moves(lv, resolution, rng, comm)) {
    const auto relabeled = CommunityPartition::from_labels(comm);
    const std::size_t k = relabeled.n_communities;
    for (auto& c : node_comm) c = relabeled.assignment[c];
    detail::Level next{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)),
                       std::vector<double>(k, 0.0)};
    const std::size_t m = lv.size.size();
    for (std::size_t u = 0; u < m; ++u) {
      const auto cu = static_cast<Eigen::Index>(relabeled.assignment[u]);
      next.size[static_cast<std::size_t>(cu)] += lv.size[u];
      for (std::size_t v = 0; v < m; ++v)
        next.w(cu, static_cast<Eigen::Index>(relabeled.assignment[v])) +=
            lv.w(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
    }
    if (k == m) break;
    lv = std::move(next);
  }
  return CommunityPartition::from_labels(node_comm);
}

struct PartitionComparison {
  long delta_communities = 0;
  double ari = 1;
};

/// Adjusted Rand index (Hubert-Arabie). When the expected index equals its
/// maximum (e.g. both partitions all-singletons) the ARI is 1 for identical
/// partitions and 0 otherwise.
inline PartitionComparison compare_partitions(const CommunityPartition& a, const CommunityPartition& b) {
  require(a.assignment.size() == b.assignment.size(), ErrorCode::schema_mismatch,
          "partitions cover different node sets");
  const auto na = CommunityPartition::from_labels(a.assignment);
  const auto nb = CommunityPartition::from_labels(b.assignment);
  PartitionComparison out;
  out.delta_communities = static_cast<long>(na.n_communities) - static_cast<long>(nb.n_communities);
  const std::size_t n = a.assignment.size();
  auto choose2 = [](double x) { return 0.5 * x * (x - 1); };
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(na.n_communities),
                                                static_cast<Eigen::Index>(nb.n_communities));
  for (std::size_t i = 0; i < n; ++i)
    table(static_cast<Eigen::Index>(na.assignment[i]), static_cast<Eigen::Index>(nb.assignment[i])) += 1.0;
  double index = 0, sum_a = 0, sum_b = 0;
  for (Eigen::Index i = 0; i < table.rows(); ++i)
    for (Eigen::Index j = 0; j < table.cols(); ++j) index += choose2(table(i, j));
  for (Eigen::Index i = 0; i < table.rows(); ++i) sum_a += choose2(table.row(i).sum());
  for (Eigen::Index j = 0; j < table.cols(); ++j) sum_b += choose2(table.col(j).sum());
  const double total = choose2(static_cast<double>(n));
  const double expected = total > 0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index - expected == 0.0) {
    out.ari = na.assignment == nb.assignment ? 1.0 : 0.0;
  } else {
    out.ari = (index - expected) / (max_index - expected);
  }
  return out;
}

}  // namespace synthaudit::network
