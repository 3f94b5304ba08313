#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "synthaudit/dependence.hpp"

namespace synthaudit::dependence {
namespace {

TEST(Binning, EqualFrequencyOnDistinctValues) {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  const auto b = bin_continuous(v, 10);
  EXPECT_EQ(b.n_bins, 10u);
  EXPECT_FALSE(b.zero_variation);
  std::vector<int> count(10, 0);
  for (auto c : b.codes) ++count[c];
  for (int c : count) EXPECT_EQ(c, 10);
}

TEST(Binning, ConstantColumnIsOneFlaggedBin) {
  const auto b = bin_continuous(std::vector<double>(20, 3.0), 10);
  EXPECT_EQ(b.n_bins, 1u);
  EXPECT_TRUE(b.zero_variation);
}

TEST(Binning, HeavyTiesMergeEdgesAndStayMonotone) {
  std::vector<double> v(95, 0.0);
  for (int i = 1; i <= 5; ++i) v.push_back(i);
  // Cut points at ranks 10..90 are all 0, so only {0} survives: bins {0}, {1..5}.
  const auto b = bin_continuous(v, 10);
  EXPECT_EQ(b.n_bins, 2u);
  EXPECT_LT(b.n_bins, 10u);
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j)
      if (v[i] <= v[j]) {
        EXPECT_LE(b.codes[i], b.codes[j]);
      }
}

TEST(Binning, RejectsBadArguments) {
  EXPECT_THROW(bin_continuous(std::vector<double>{1, 2}, 1), Error);
  EXPECT_THROW(bin_continuous(std::vector<double>{}, 4), Error);
}

TEST(ChiSquared, IndependentProductTable) {
  Eigen::MatrixXd t(2, 3);
  t << 10, 20, 30, 20, 40, 60;
  const auto r = chi_squared(contingency(t));
  EXPECT_NEAR(r.chi2, 0.0, 1e-12);
  EXPECT_EQ(r.df, 2u);
}

TEST(ChiSquared, PerfectAssociation) {
  Eigen::MatrixXd t(2, 2);
  t << 50, 0, 0, 50;
  const auto r = chi_squared(contingency(t));
  EXPECT_DOUBLE_EQ(r.chi2, 100.0);
  EXPECT_EQ(r.df, 1u);
}

TEST(ChiSquared, HandComputedTwoByThree) {
  Eigen::MatrixXd t(2, 3);
  t << 10, 20, 30, 30, 20, 10;
  const auto r = chi_squared(contingency(t));
  EXPECT_DOUBLE_EQ(r.chi2, 20.0);
  EXPECT_EQ(r.df, 2u);
}

TEST(ChiSquared, SingleLevelIsZeroVariation) {
  const std::vector<std::int32_t> a{1, 1, 1}, b{0, 1, 2};
  const auto r = chi_squared(contingency(a, b));
  EXPECT_EQ(r.chi2, 0.0);
  EXPECT_EQ(r.df, 0u);
  EXPECT_TRUE(r.zero_variation);
}

TEST(ChiSquared, MatchesBruteForceOnSmallTables) {
  std::mt19937 gen(12);
  int checked = 0;
  for (int r = 1; r <= 4; ++r)
    for (int c = 1; c <= 4; ++c)
      for (int rep = 0; rep < 25; ++rep) {
        const int n = 1 + static_cast<int>(gen() % 50);
        std::vector<std::int32_t> a(n), b(n);
        std::vector<std::vector<int>> dense(r, std::vector<int>(c, 0));
        for (int i = 0; i < n; ++i) {
          a[i] = static_cast<std::int32_t>(gen() % r);
          b[i] = static_cast<std::int32_t>(gen() % c);
          ++dense[a[i]][b[i]];
        }
        const auto got = chi_squared(contingency(a, b));
        const auto want = oracle::chi_squared(dense);
        EXPECT_NEAR(got.chi2, want.first, 1e-9 * (1 + want.first));
        EXPECT_EQ(static_cast<int>(got.df), want.second);
        ++checked;
      }
  EXPECT_EQ(checked, 400);
}

TEST(EffectSize, Formula) {
  EXPECT_EQ(effect_size(0.0, 10, 3), 0.0);
  EXPECT_DOUBLE_EQ(*effect_size(100.0, 100, 1), 1.0);
  EXPECT_NEAR(*effect_size(20.0, 120, 2), std::sqrt(20.0 / 240.0), 1e-12);
  EXPECT_FALSE(effect_size(5.0, 10, 0).has_value());
  EXPECT_THROW(effect_size(1.0, 0, 1), Error);
}

TEST(EffectSize, DfModes) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(3, 3);
  t.diagonal().setConstant(10);
  // Perfect 3x3 association: chi2 = 2n. Product df gives 1/sqrt(2), Cramér's V gives 1.
  EXPECT_NEAR(*effect_size(contingency(t), EffectSizeDf::product), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(*effect_size(contingency(t), EffectSizeDf::min), 1.0, 1e-12);
  EXPECT_EQ(parse_effect_size_df("min"), EffectSizeDf::min);
  EXPECT_THROW(parse_effect_size_df("max"), Error);
}

ColumnTable table_of(const std::vector<ColumnSpec>& specs, const std::vector<ColumnData>& data) {
  TableSchema s;
  s.columns = specs;
  return ColumnTable(s, data);
}

TEST(Association, CopyConstantAndSymmetry) {
  std::mt19937 gen(1);
  ColumnData a, copy, k, x;
  for (int i = 0; i < 300; ++i) {
    a.codes.push_back(static_cast<std::int32_t>(gen() % 2));
    k.codes.push_back(0);
    x.values.push_back(static_cast<double>(gen() % 1000));
  }
  copy = a;
  const auto t = table_of({{"a", ColumnKind::categorical, {"u", "v"}},
                           {"copy", ColumnKind::categorical, {"u", "v"}},
                           {"k", ColumnKind::ordinal, {"only", "never"}},
                           {"x", ColumnKind::continuous, {}}},
                          {a, copy, k, x});
  const auto m = association_matrix(t);
  EXPECT_DOUBLE_EQ(m.values(0, 1), 1.0);
  EXPECT_TRUE(m.defined(0, 1));
  for (int j = 0; j < 4; ++j) {
    EXPECT_EQ(m.defined(2, j), j == 2);
    EXPECT_EQ(m.defined(j, 2), j == 2);
  }
  EXPECT_TRUE(m.zero_variation[2]);
  EXPECT_EQ(m.values, m.values.transpose());
  EXPECT_EQ(m.defined, m.defined.transpose());
  EXPECT_TRUE((m.values.diagonal().array() == 1.0).all());
  EXPECT_THROW(association_matrix(table_of({{"a", ColumnKind::categorical, {"u", "v"}}}, {a})), Error);
}

TEST(Association, IndependentUniformColumnsAreNearZero) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u;
  ColumnData x, y;
  for (int i = 0; i < 100000; ++i) {
    x.values.push_back(u(gen));
    y.values.push_back(u(gen));
  }
  const auto m = association_matrix(table_of({{"x", ColumnKind::continuous, {}}, {"y", ColumnKind::continuous, {}}}, {x, y}));
  EXPECT_LT(m.values(0, 1), 0.02);
}

TEST(Association, PermutationEquivariant) {
  std::mt19937 gen(8);
  std::vector<ColumnData> cols(4);
  std::vector<ColumnSpec> specs;
  for (int j = 0; j < 4; ++j) {
    specs.push_back({"c" + std::to_string(j), ColumnKind::continuous, {}});
    for (int i = 0; i < 400; ++i) cols[j].values.push_back(static_cast<double>(gen() % 50) + (j ? cols[0].values[i] : 0));
  }
  const auto m = association_matrix(table_of(specs, cols));
  const std::vector<int> perm{2, 0, 3, 1};
  std::vector<ColumnSpec> ps;
  std::vector<ColumnData> pc;
  for (int j : perm) {
    ps.push_back(specs[j]);
    pc.push_back(cols[j]);
  }
  const auto mp = association_matrix(table_of(ps, pc));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(mp.values(i, j), m.values(perm[i], perm[j]));
}

AssociationMatrix random_assoc(std::mt19937& gen, int p, double mask_rate) {
  AssociationMatrix a;
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < p; ++i) a.names.push_back("c" + std::to_string(i));
  a.values = Eigen::MatrixXd::Identity(p, p);
  a.defined.setConstant(p, p, true);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      if (u(gen) < mask_rate) {
        a.values(i, j) = a.values(j, i) = 0;
        a.defined(i, j) = a.defined(j, i) = false;
      } else {
        a.values(i, j) = a.values(j, i) = u(gen);
      }
    }
  return a;
}

TEST(Difference, ZeroAntisymmetricAndBounded) {
  std::mt19937 gen(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_assoc(gen, 5, 0.2), b = random_assoc(gen, 5, 0.2);
    const auto self = difference_matrix(a, a);
    EXPECT_TRUE(self.values.isZero(0));
    EXPECT_EQ(det_difference(self.values), 0.0);
    const auto ab = difference_matrix(a, b), ba = difference_matrix(b, a);
    EXPECT_EQ(ab.values, -ba.values);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        EXPECT_EQ(ab.defined(i, j), a.defined(i, j) && b.defined(i, j));
        if (ab.defined(i, j))
          EXPECT_LE(std::abs(ab.values(i, j)), std::max(std::abs(a.values(i, j)), std::abs(b.values(i, j))));
        else
          EXPECT_EQ(ab.values(i, j), 0.0);
      }
  }
  auto c = random_assoc(gen, 4, 0);
  EXPECT_THROW(difference_matrix(random_assoc(gen, 5, 0), c), Error);
}

TEST(Determinant, SimpleCasesAndCofactorOracle) {
  EXPECT_EQ(det_difference(Eigen::MatrixXd::Zero(3, 3)), 0.0);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 0.2;
  d(1, 1) = 0.5;
  EXPECT_NEAR(det_difference(d), 0.1, 1e-15);
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd m(5, 5);
    for (int i = 0; i < 25; ++i) m(i / 5, i % 5) = u(gen);
    const double want = std::abs(oracle::cofactor_det(m));
    EXPECT_LT(std::abs(det_difference(m) - want), 1e-12 * want);
  }
  EXPECT_THROW(det_difference(Eigen::MatrixXd::Zero(2, 3)), Error);
}

}  // namespace
}  // namespace synthaudit::dependence
