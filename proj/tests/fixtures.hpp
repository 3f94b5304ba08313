#pragma once

// Synthetic tables shared by the report tests and the acceptance binary.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "synthaudit/table.hpp"

namespace fixture {

using synthaudit::ColumnData;
using synthaudit::ColumnKind;
using synthaudit::ColumnSpec;
using synthaudit::ColumnTable;
using synthaudit::TableSchema;

/// Three continuous columns (two correlated, one skewed), an ordinal grade
/// tied to x1, a uniform categorical colour and a binary target drawn from a
/// logistic model, so the regression has a finite maximum-likelihood fit.
inline ColumnTable mixed(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  TableSchema s;
  s.columns = {{"x1", ColumnKind::continuous, {}},
               {"x2", ColumnKind::continuous, {}},
               {"x3", ColumnKind::continuous, {}},
               {"grade", ColumnKind::ordinal, {"low", "mid", "high"}},
               {"colour", ColumnKind::categorical, {"red", "green", "blue"}},
               {"y", ColumnKind::categorical, {"no", "yes"}}};
  s.target = "y";
  std::vector<ColumnData> c(6);
  for (std::size_t r = 0; r < n; ++r) {
    const double z1 = z(gen), z2 = 0.6 * z1 + 0.8 * z(gen), z3 = z(gen);
    const double g = z1 + 0.7 * z(gen);
    const int colour = static_cast<int>(u(gen) * 3) % 3;
    const double eta = 0.8 * z1 - 0.6 * z2 + 0.3 * (colour == 0);
    const int y = u(gen) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
    c[0].values.push_back(z1);
    c[1].values.push_back(z2);
    c[2].values.push_back(std::exp(0.5 * z3));
    c[3].codes.push_back(g < -0.5 ? 0 : (g < 0.5 ? 1 : 2));
    c[4].codes.push_back(colour);
    c[5].codes.push_back(y);
  }
  return ColumnTable(s, c);
}

/// p continuous columns with an equicorrelated Gaussian core plus a skewed
/// shared factor, giving nonzero higher-order cumulants.
inline ColumnTable gaussian(std::size_t n, std::size_t p, double rho, std::uint64_t seed, double skew = 0.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  TableSchema s;
  for (std::size_t j = 0; j < p; ++j) s.columns.push_back({"v" + std::to_string(j), ColumnKind::continuous, {}});
  std::vector<ColumnData> c(p);
  const double a = std::sqrt(rho), b = std::sqrt(1 - rho);
  for (std::size_t r = 0; r < n; ++r) {
    const double common = z(gen);
    const double f = skew * (std::exp(z(gen)) - std::exp(0.5));
    for (std::size_t j = 0; j < p; ++j) c[j].values.push_back(a * common + b * z(gen) + f * (j % 2 ? 1.0 : 0.5));
  }
  return ColumnTable(s, c);
}

/// Only discrete columns, in the shape of a census extract.
inline ColumnTable discrete_only(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u;
  TableSchema s;
  s.columns = {{"education", ColumnKind::ordinal, {"school", "college", "degree", "postgrad"}},
               {"sector", ColumnKind::categorical, {"private", "public", "self"}},
               {"sex", ColumnKind::categorical, {"female", "male"}},
               {"income", ColumnKind::categorical, {"low", "high"}}};
  s.target = "income";
  std::vector<ColumnData> c(4);
  for (std::size_t r = 0; r < n; ++r) {
    const int ed = static_cast<int>(u(gen) * 4) % 4;
    const int sector = u(gen) < 0.2 + 0.1 * ed ? 1 : (u(gen) < 0.3 ? 2 : 0);
    const int sex = u(gen) < 0.5 ? 1 : 0;
    const int inc = u(gen) < 0.15 + 0.15 * ed + 0.1 * sex ? 1 : 0;
    c[0].codes.push_back(ed);
    c[1].codes.push_back(sector);
    c[2].codes.push_back(sex);
    c[3].codes.push_back(inc);
  }
  return ColumnTable(s, c);
}

/// Ten columns: seven continuous (two latent factors, one skewed column), an
/// ordinal, a categorical and a binary target from a logistic model.
inline ColumnTable wide(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  TableSchema s;
  for (int j = 0; j < 7; ++j) s.columns.push_back({"c" + std::to_string(j), ColumnKind::continuous, {}});
  s.columns.push_back({"level", ColumnKind::ordinal, {"a", "b", "c", "d"}});
  s.columns.push_back({"group", ColumnKind::categorical, {"north", "south", "east"}});
  s.columns.push_back({"label", ColumnKind::categorical, {"neg", "pos"}});
  s.target = "label";
  std::vector<ColumnData> c(10);
  const double load1[] = {0.8, 0.6, 0.0, 0.0, 0.4, 0.0, 0.3};
  const double load2[] = {0.0, 0.3, 0.7, 0.6, 0.0, 0.0, 0.3};
  for (std::size_t r = 0; r < n; ++r) {
    const double f1 = z(gen), f2 = z(gen);
    double v[7];
    for (int j = 0; j < 7; ++j) v[j] = load1[j] * f1 + load2[j] * f2 + z(gen);
    v[5] = std::exp(0.6 * v[5]);
    const double l = f1 + z(gen);
    const int level = l < -0.8 ? 0 : (l < 0 ? 1 : (l < 0.8 ? 2 : 3));
    const int group = static_cast<int>(u(gen) * 3) % 3;
    const double eta = -0.2 + 0.7 * v[0] - 0.5 * v[2] + 0.3 * level - 0.4 * (group == 2);
    for (int j = 0; j < 7; ++j) c[j].values.push_back(v[j]);
    c[7].codes.push_back(level);
    c[8].codes.push_back(group);
    c[9].codes.push_back(u(gen) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0);
  }
  return ColumnTable(s, c);
}

}  // namespace fixture
