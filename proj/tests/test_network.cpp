#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "synthaudit/network.hpp"

namespace synthaudit::network {
namespace {

std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back("v" + std::to_string(i));
  return v;
}

DepGraph two_triangles() {
  DepGraph g(names(6));
  for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}}) g.add_edge(i, j, 1.0);
  return g;
}

TEST(BuildGraph, ThresholdRules) {
  EXPECT_TRUE(build_graph(Eigen::MatrixXd::Identity(4, 4), names(4)).edges().empty());
  Eigen::MatrixXd dense = Eigen::MatrixXd::Constant(4, 4, -0.2);
  dense.diagonal().setOnes();
  const auto g = build_graph(dense, names(4), 0.0);
  EXPECT_EQ(g.edges().size(), 6u);
  EXPECT_EQ(g.edges()[0].weight, -0.2);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  m(0, 1) = m(1, 0) = 0.3;
  EXPECT_TRUE(build_graph(m, names(2), 0.3).edges().empty());
  EXPECT_EQ(build_graph(m, names(2), 0.29).edges().size(), 1u);
}

TEST(DepGraph, RejectsSelfLoopsAndDuplicates) {
  DepGraph g(names(3));
  EXPECT_THROW(g.add_edge(1, 1, 0.5), Error);
  g.add_edge(0, 1, 0.5);
  EXPECT_THROW(g.add_edge(1, 0, 0.2), Error);
  EXPECT_THROW(g.add_edge(0, 2, 0.0), Error);
}

TEST(Metrics, CompleteGraphAndPath) {
  DepGraph k4(names(4));
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) k4.add_edge(i, j, -0.5);
  const auto m = graph_metrics(k4);
  EXPECT_DOUBLE_EQ(m.density, 1.0);
  EXPECT_EQ(m.diameter, 1u);
  for (double c : m.eigencentrality) EXPECT_NEAR(c, 1.0, 1e-12);
  for (auto d : m.degrees) EXPECT_EQ(d, 3u);

  DepGraph p4(names(4));
  p4.add_edge(0, 1, 1);
  p4.add_edge(1, 2, 1);
  p4.add_edge(2, 3, 1);
  const auto mp = graph_metrics(p4);
  EXPECT_EQ(mp.diameter, 3u);
  EXPECT_NEAR(mp.eigencentrality[1], 1.0, 1e-12);
  EXPECT_NEAR(mp.eigencentrality[0], 0.5 * (std::sqrt(5.0) - 1), 1e-9);  // path P4 principal vector

  const auto empty = graph_metrics(DepGraph(names(3)));
  EXPECT_EQ(empty.density, 0.0);
  EXPECT_EQ(empty.diameter, 0u);
}

TEST(Metrics, DiameterMatchesBfsOracle) {
  std::mt19937 gen(6);
  for (int trial = 0; trial < 50; ++trial) {
    DepGraph g(names(6));
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j)
        if (gen() % 3 == 0) g.add_edge(i, j, (gen() % 2 ? 1 : -1) * 0.4);
    const auto m = graph_metrics(g);
    // Oracle restricted to the largest component.
    const auto comp = components(g);
    std::vector<int> size(6, 0);
    for (auto c : comp) ++size[c];
    const auto largest = std::max_element(size.begin(), size.end()) - size.begin();
    Eigen::MatrixXd adj = g.adjacency();
    for (int i = 0; i < 6; ++i)
      if (static_cast<long>(comp[i]) != largest) adj.row(i).setZero(), adj.col(i).setZero();
    EXPECT_EQ(static_cast<int>(m.diameter), oracle::bfs_diameter(adj));
    EXPECT_GE(m.density, 0.0);
    EXPECT_LE(m.density, 1.0);
    EXPECT_LE(m.diameter, 5u);
  }
}

TEST(Cpm, SingletonsAndTriangles) {
  const auto g = two_triangles();
  EXPECT_EQ(cpm_quality(g, CommunityPartition::singletons(6), 0.5), 0.0);
  const auto cliques = CommunityPartition::from_labels({0, 0, 0, 1, 1, 1});
  EXPECT_DOUBLE_EQ(cpm_quality(g, cliques, 0.5), 3.0);
  const auto merged = CommunityPartition::from_labels({0, 0, 0, 0, 0, 0});
  // 15 within pairs, 6 unit edges: 6 - 15 * 0.5
  EXPECT_DOUBLE_EQ(cpm_quality(g, merged, 0.5), 6 - 7.5);
  EXPECT_LT(cpm_quality(g, merged, 0.5), cpm_quality(g, cliques, 0.5));
  EXPECT_EQ(cpm_quality(g, CommunityPartition::from_labels({5, 5, 5, 2, 2, 2}), 0.5), 3.0);
}

TEST(Louvain, TwoTrianglesAcrossResolutions) {
  const auto g = two_triangles();
  for (double res : {0.01, 0.05, 0.3, 0.5, 0.9, 0.99}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto p = louvain_cpm(g, res, seed);
      EXPECT_EQ(p.n_communities, 2u);
      EXPECT_EQ(p.assignment[0], p.assignment[1]);
      EXPECT_EQ(p.assignment[1], p.assignment[2]);
      EXPECT_EQ(p.assignment[3], p.assignment[4]);
      EXPECT_NE(p.assignment[0], p.assignment[3]);
    }
  }
}

TEST(Louvain, EdgelessGivesSingletons) {
  const auto p = louvain_cpm(DepGraph(names(5)), 0.1, 3);
  EXPECT_EQ(p, CommunityPartition::singletons(5));
}

TEST(Louvain, DeterministicNonNegativeAndComponentRespecting) {
  std::mt19937_64 gen(44);
  std::uniform_real_distribution<double> w(0.05, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 4 + trial % 9;
    DepGraph g(names(n));
    // two separate halves, never linked
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if ((i < n / 2) == (j < n / 2) && gen() % 2) g.add_edge(i, j, (gen() % 2 ? 1 : -1) * w(gen));
    const double res = 0.05 + 0.1 * (trial % 4);
    const auto a = louvain_cpm(g, res, trial);
    EXPECT_EQ(a, louvain_cpm(g, res, trial));
    EXPECT_GE(cpm_quality(g, a, res), 0.0);
    const auto comp = components(g);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (a.assignment[i] == a.assignment[j]) {
          EXPECT_EQ(comp[i], comp[j]);
        }
    std::vector<std::size_t> ids(a.assignment);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    EXPECT_EQ(ids.size(), a.n_communities);
    EXPECT_EQ(ids.back() + 1, a.n_communities);
  }
}

TEST(Louvain, MatchesExhaustiveOptimumOnSmallGraphs) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> w(0.05, 1.0), r(0.05, 0.5);
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + trial % 5;
    DepGraph g(names(n));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (gen() % 2) g.add_edge(i, j, w(gen));
    const double res = r(gen);
    const auto part = louvain_cpm(g, res, trial);
    const double q = cpm_quality(g, part, res);
    EXPECT_GE(q, 0.0);
    hits += q >= oracle::best_cpm(g.adjacency(), res) - 1e-9;
  }
  EXPECT_GE(hits, 90);
}

TEST(ComparePartitions, IdentityRelabelAndCross) {
  const auto a = CommunityPartition::from_labels({0, 0, 1, 1});
  const auto relabel = CommunityPartition::from_labels({7, 7, 3, 3});
  const auto cross = CommunityPartition::from_labels({0, 1, 0, 1});
  EXPECT_EQ(compare_partitions(a, a).ari, 1.0);
  EXPECT_EQ(compare_partitions(a, a).delta_communities, 0);
  EXPECT_EQ(compare_partitions(a, relabel).ari, 1.0);
  EXPECT_DOUBLE_EQ(compare_partitions(a, cross).ari, -0.5);
  EXPECT_EQ(compare_partitions(CommunityPartition::singletons(4), CommunityPartition::singletons(4)).ari, 1.0);
  EXPECT_EQ(compare_partitions(a, CommunityPartition::singletons(4)).delta_communities, -2);
  EXPECT_THROW(compare_partitions(a, CommunityPartition::singletons(3)), Error);
}

TEST(ComparePartitions, BoundedOnRandomPartitions) {
  std::mt19937 gen(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> la(8), lb(8);
    for (auto& v : la) v = gen() % 3;
    for (auto& v : lb) v = gen() % 4;
    const double ari = compare_partitions(CommunityPartition::from_labels(la), CommunityPartition::from_labels(lb)).ari;
    EXPECT_GE(ari, -1.0);
    EXPECT_LE(ari, 1.0);
  }
}

}  // namespace
}  // namespace synthaudit::network
