// Acceptance gate: one PASS/FAIL line per criterion; nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Cholesky>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "synthaudit/synthaudit.hpp"

namespace {

using namespace synthaudit;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::size_t hardware_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Every expanded entry of the order-k tensor, in odometer order.
template <class F>
void for_each_tuple(std::size_t p, std::size_t k, F&& f) {
  std::vector<std::uint32_t> idx(k, 0);
  while (true) {
    f(idx);
    std::size_t pos = k;
    while (pos > 0 && ++idx[pos - 1] == p) idx[--pos] = 0;
    if (pos == 0) return;
  }
}

// 1. Partition-sum implementation against brute-force partition enumeration.
Outcome cumulant_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(101);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  double worst = 0;
  std::size_t checked = 0;
  for (int f = 0; f < 20; ++f) {
    const std::size_t p = 4 + f % 3;
    const std::size_t n = 50 + static_cast<std::size_t>(u(gen) * 451);
    Eigen::MatrixXd x(n, p);
    for (std::size_t j = 0; j < p; ++j) {
      const double scale = std::pow(10.0, u(gen) * 3 - 1);
      const double shift = u(gen) * 20 - 10;
      const bool skew = gen() % 2;
      for (std::size_t r = 0; r < n; ++r) {
        const double v = skew ? std::exp(z(gen)) : z(gen);
        x(r, j) = shift + scale * (v + (j ? 0.5 * x(r, 0) / std::max(1.0, std::abs(x(r, 0))) : 0.0));
      }
    }
    Eigen::VectorXd sd(p);
    for (std::size_t j = 0; j < p; ++j) sd(j) = std::sqrt((x.col(j).array() - x.col(j).mean()).square().mean());
    const cumulants::MomentCache cache(x);
    for (std::size_t order = 2; order <= 4; ++order) {
      const auto tensor = cumulants::cumulant_tensor(cache, order);
      std::map<std::vector<std::uint32_t>, double> memo;
      for_each_tuple(p, order, [&](const std::vector<std::uint32_t>& idx) {
        auto key = idx;
        std::sort(key.begin(), key.end());
        auto it = memo.find(key);
        if (it == memo.end())
          it = memo.emplace(key, oracle::partition_cumulant(x, std::vector<int>(key.begin(), key.end()))).first;
        double scale = 1;
        for (auto i : idx) scale *= sd(i);
        const double err = std::abs(tensor.at(idx) - it->second) / std::max(std::abs(it->second), scale);
        worst = std::max(worst, err);
        ++checked;
      });
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 10,
          std::to_string(checked) + " expanded entries, max relative error " + fmt("%.3g", worst) + ", " +
              fmt("%.2f", secs) + " s"};
}

// 2. Expanded entry counts for the dataset widths behind the cumulant table.
Outcome structural_counts() {
  const std::vector<std::tuple<std::size_t, std::size_t, std::uint64_t>> cases{
      {12, 3, 1728}, {12, 4, 20736}, {28, 3, 21952}, {28, 4, 614656}, {30, 3, 27000}, {30, 4, 810000}};
  std::mt19937_64 gen(202);
  std::normal_distribution<double> z;
  bool ok = true;
  std::string detail;
  for (const auto& [p, order, expected] : cases) {
    Eigen::MatrixXd x(40, p);
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(r, j) = z(gen);
    const auto tensor = cumulants::cumulant_tensor(cumulants::MomentCache(x), order);
    std::uint64_t mult = 0;
    for (std::size_t r = 0; r < tensor.unique_count(); ++r) mult += tensor.index().multiplicity(r);
    const auto mask = cumulants::empirical_rule_mask(tensor, 2.0);
    const bool here = tensor.expanded_count() == expected && mult == expected &&
                      mask.n_positive + mask.n_negative == expected;
    ok = ok && here;
    detail += "p=" + std::to_string(p) + "/k=" + std::to_string(order) + ":" + std::to_string(mult) + (here ? " " : "! ");
  }
  return {ok, detail};
}

// 3. Gaussian data: higher-order cumulants inside 4 standard errors of zero
// and a small empirical-rule positive rate.
Outcome gaussian_nullity() {
  const auto t0 = Clock::now();
  const std::size_t n = 100000, p = 5;
  std::mt19937_64 gen(303);
  std::normal_distribution<double> z;
  Eigen::MatrixXd x(n, p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < p; ++j) x(r, j) = z(gen);
  const cumulants::MomentCache cache(x, hardware_threads());
  double worst_ratio = 0, worst_rate = 0;
  std::size_t outside = 0, total = 0;
  for (std::size_t order = 3; order <= 4; ++order) {
    const auto tensor = cumulants::cumulant_tensor(cache, order);
    for (std::size_t r = 0; r < tensor.unique_count(); ++r) {
      const auto m = tensor.index().at(r);
      const std::vector<int> idx(m.begin(), m.begin() + static_cast<long>(order));
      const double ratio = std::abs(tensor.value(r)) / oracle::cumulant_standard_error(x, idx);
      worst_ratio = std::max(worst_ratio, ratio);
      outside += ratio > 4;
      ++total;
    }
    const auto mask = cumulants::empirical_rule_mask(tensor, 2.0);
    worst_rate = std::max(worst_rate, static_cast<double>(mask.n_positive) / static_cast<double>(tensor.expanded_count()));
  }
  const double secs = seconds_since(t0);
  return {outside == 0 && worst_rate <= 0.05 && secs < 30,
          std::to_string(total) + " unique entries, max |k|/SE " + fmt("%.2f", worst_ratio) + ", max positive rate " +
              fmt("%.4f", worst_rate) + ", " + fmt("%.1f", secs) + " s"};
}

// 4. Graphical lasso: exact inverse at lambda 0, monotone sparsity, positive
// definite estimates. Fixtures are correlation matrices of A A^T / 6 + I.
Outcome glasso_correctness() {
  std::mt19937_64 gen(404);
  std::normal_distribution<double> z;
  double worst_inverse = 0;
  std::size_t monotone = 0, chol_fail = 0, fits = 0;
  std::string breaks;
  for (int f = 0; f < 10; ++f) {
    Eigen::MatrixXd a(6, 6);
    for (Eigen::Index i = 0; i < 6; ++i)
      for (Eigen::Index j = 0; j < 6; ++j) a(i, j) = z(gen);
    Eigen::MatrixXd m = a * a.transpose() / 6.0 + Eigen::MatrixXd::Identity(6, 6);
    const Eigen::VectorXd d = m.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd s = d.asDiagonal() * m * d.asDiagonal();
    const auto exact = glasso::graphical_lasso(s, 0.0, 1e-12, 10000);
    worst_inverse = std::max(worst_inverse, (exact.theta - s.inverse()).cwiseAbs().maxCoeff());
    const auto grid = glasso::default_lambda_grid(s, 50, 0.01);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    bool mono = true;
    for (double lambda : grid) {
      const auto fit = glasso::graphical_lasso(s, lambda);
      ++fits;
      chol_fail += Eigen::LLT<Eigen::MatrixXd>(fit.theta).info() != Eigen::Success;
      if (fit.edge_count > prev) {
        mono = false;
        breaks += " fixture " + std::to_string(f) + " at lambda " + fmt("%.6g", lambda) + " (" + std::to_string(prev) +
                  "->" + std::to_string(fit.edge_count) + ")";
      }
      prev = fit.edge_count;
    }
    monotone += mono;
  }
  return {worst_inverse < 1e-6 && monotone == 10 && chol_fail == 0,
          "max |theta - S^-1| " + fmt("%.3g", worst_inverse) + ", monotone on " + std::to_string(monotone) +
              "/10, Cholesky failures " + std::to_string(chol_fail) + "/" + std::to_string(fits) + breaks};
}

// 5. Louvain with the CPM objective against exhaustive enumeration.
Outcome louvain_optimality() {
  std::mt19937_64 gen(505);
  std::uniform_real_distribution<double> w(0.05, 1.0), r(0.02, 0.6);
  int hits = 0;
  bool negative = false;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(gen() % 6);
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("n" + std::to_string(i));
    network::DepGraph g(names);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (gen() % 3) g.add_edge(i, j, w(gen));
    const double res = r(gen);
    const auto part = network::louvain_cpm(g, res, static_cast<std::uint64_t>(t));
    const double q = network::cpm_quality(g, part, res);
    negative = negative || q < 0;
    hits += q >= oracle::best_cpm(g.adjacency(), res) - 1e-9;
  }
  std::vector<std::string> six{"a", "b", "c", "d", "e", "f"};
  network::DepGraph tri(six);
  for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}}) tri.add_edge(i, j, 1.0);
  const auto triangles = network::CommunityPartition::from_labels({0, 0, 0, 1, 1, 1});
  int tri_ok = 0, tri_total = 0;
  for (double res = 0.01; res < 1.0; res += 0.01) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      ++tri_total;
      tri_ok += network::compare_partitions(network::louvain_cpm(tri, res, seed), triangles).ari == 1.0;
    }
  }
  return {hits >= 90 && !negative && tri_ok == tri_total,
          "optimum on " + std::to_string(hits) + "/100, negative Q " + (negative ? "yes" : "no") + ", triangles " +
              std::to_string(tri_ok) + "/" + std::to_string(tri_total)};
}

// 6. Train compared with itself through the whole pipeline.
Outcome self_comparison() {
  const auto t0 = Clock::now();
  report::RunConfig cfg;
  cfg.trials = 1;
  cfg.baselines = {"self"};
  const auto real = fixture::wide(5000, 606);
  const auto rep = report::evaluate_tables(cfg, real, {});
  const double secs = seconds_since(t0);
  const auto& d = rep.json["trials"][0]["datasets"]["self"];
  auto num = [&](const char* ptr) {
    const auto p = report::Json::json_pointer(ptr);
    return d.contains(p) && d.at(p).is_number() ? d.at(p).get<double>() : std::nan("");
  };
  bool ok = rep.n_failed == 0;
  const double det = num("/dependence/det_assoc"), ks = num("/marginal/worst_ks"), ari = num("/network/ari");
  const double logit = num("/logit/mean_overlap_pct"), pca = num("/pca/overlap");
  ok = ok && std::abs(det) < 1e-12 && ks == 0 && ari == 1 && logit == 100 && pca >= 0.99;
  std::string cum;
  for (const char* k : {"2", "3", "4"}) {
    const std::string base = std::string("/cumulants/orders/") + k;
    const double tpr = num((base + "/tpr").c_str()), tnr = num((base + "/tnr").c_str()), smse = num((base + "/smse").c_str());
    ok = ok && tpr == 1 && tnr == 1 && smse == 0;
    cum += std::string(" k") + k + " " + fmt("%g", tpr) + "/" + fmt("%g", tnr) + "/" + fmt("%g", smse);
  }
  ok = ok && secs < 60;
  return {ok, "det " + fmt("%.3g", det) + ", KS " + fmt("%g", ks) + ", ARI " + fmt("%g", ari) + ", TPR/TNR/SMSE" + cum +
                  ", logit " + fmt("%g", logit) + "%, PCA " + fmt("%.4f", pca) + ", " + fmt("%.1f", secs) + " s"};
}

// 7. No continuous columns: KS is not applicable, not an error.
Outcome ks_skip() {
  const auto adult_like = fixture::discrete_only(1000, 707);
  const auto direct = marginal::worst_case_ks(adult_like, adult_like);
  report::RunConfig cfg;
  cfg.trials = 2;
  cfg.modules = report::ModuleSet::parse("marginal");
  const auto rep = report::evaluate_tables(cfg, adult_like, {});
  bool ok = !direct.has_value() && rep.n_failed == 0;
  for (const auto& t : rep.json["trials"])
    for (const auto& [name, d] : t["datasets"].items())
      ok = ok && d["marginal"]["ks_status"] == "not_applicable" && d["marginal"]["worst_ks"].is_null();
  return {ok, std::string("direct call ") + (direct ? "returned a value" : "NotApplicable") + ", report ks_status " +
                  rep.json["trials"][0]["datasets"]["test"]["marginal"]["ks_status"].get<std::string>()};
}

// 8. Bootstrap resample of train against train, 15 trials.
Outcome resample_plausibility() {
  report::RunConfig cfg;
  cfg.trials = 15;
  cfg.master_seed = 808;
  cfg.baselines = {"resample", "test"};
  cfg.modules = report::ModuleSet::parse("marginal");
  const auto rep = report::evaluate_tables(cfg, fixture::gaussian(400, 10, 0.3, 808), {});
  int within = 0;
  std::vector<double> ks;
  for (const auto& t : rep.json["trials"]) {
    const double v = t["datasets"]["resample"]["marginal"]["worst_ks"].get<double>();
    ks.push_back(v);
    within += v <= 0.15;
  }
  const auto a = report::aggregate(ks);
  const double test_ks = rep.json["aggregates"]["test"]["worst_ks"]["median"].get<double>();
  return {within >= 14, std::to_string(within) + "/15 trials <= 0.15 (min " + fmt("%.4f", a.min) + ", median " +
                            fmt("%.4f", a.median) + ", max " + fmt("%.4f", a.max) + "; test partition " +
                            fmt("%.4f", test_ks) + ")"};
}

// 9. Effect-size formula on known tables.
Outcome effect_size_checks() {
  using dependence::EffectSizeDf;
  bool perfect = true;
  for (double n : {2.0, 10.0, 37.0, 1000.0, 1e6}) {
    Eigen::MatrixXd t(2, 2);
    const double h = std::floor(n / 2);
    t << h, 0, 0, n - h;
    const auto es = dependence::effect_size(dependence::contingency(t), EffectSizeDf::product);
    perfect = perfect && es && std::abs(*es - 1.0) < 1e-12;
  }
  std::mt19937_64 gen(909);
  std::vector<std::int32_t> a(100000), b(100000);
  for (auto& v : a) v = static_cast<std::int32_t>(gen() % 3);
  for (auto& v : b) v = static_cast<std::int32_t>(gen() % 4);
  const double indep = *dependence::effect_size(dependence::contingency(a, b), EffectSizeDf::product);
  Eigen::MatrixXd hand(2, 3);
  hand << 30, 20, 10, 10, 20, 30;
  const double h = *dependence::effect_size(dependence::contingency(hand), EffectSizeDf::product);
  const double hand_err = std::abs(h - std::sqrt(20.0 / 240.0));
  return {perfect && indep < 0.02 && hand_err < 1e-12,
          std::string("perfect 2x2 ") + (perfect ? "1.0" : "wrong") + ", independent " + fmt("%.5f", indep) +
              ", 2x3 hand error " + fmt("%.3g", hand_err)};
}

// 10. Runtime envelope.
Outcome performance() {
  std::mt19937_64 gen(1010);
  std::normal_distribution<double> z;
  Eigen::MatrixXd x(10000, 30);
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(r, j) = z(gen);
  auto t0 = Clock::now();
  const cumulants::MomentCache cache(x, hardware_threads());
  const auto k3 = cumulants::cumulant_tensor(cache, 3);
  const auto k4 = cumulants::cumulant_tensor(cache, 4);
  const double tensor_secs = seconds_since(t0);

  report::RunConfig cfg;
  cfg.threads = 0;
  t0 = Clock::now();
  const auto rep = report::evaluate_tables(cfg, fixture::wide(5000, 1011), {});
  const double pipeline_secs = seconds_since(t0);
  return {tensor_secs < 300 && pipeline_secs < 600 && rep.n_failed == 0 && k3.unique_count() > 0 && k4.unique_count() > 0,
          "p=30 n=10000 order 3+4 " + fmt("%.1f", tensor_secs) + " s, 15-trial pipeline on 5000x10 " +
              fmt("%.1f", pipeline_secs) + " s (" + std::to_string(hardware_threads()) + " hardware threads, " +
              std::to_string(rep.n_failed) + " failed trials)"};
}

// 11. Byte-identical report.json across runs, serial and parallel.
Outcome determinism() {
  namespace fs = std::filesystem;
  const auto real = fixture::wide(1500, 1111);
  const auto synth = fixture::wide(1500, 1112);
  auto run = [&](std::size_t threads, const std::string& dir) {
    report::RunConfig cfg;
    cfg.trials = 6;
    cfg.fixed_split = false;
    cfg.threads = threads;
    cfg.baselines = {"test", "resample", "shuffled"};
    const fs::path out = fs::temp_directory_path() / ("synthaudit_acceptance_" + dir);
    fs::remove_all(out);
    report::emit(report::evaluate_tables(cfg, real, {{"gen", synth}}), out.string());
    std::ifstream in(out / "report.json", std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const std::string a = run(4, "a"), b = run(4, "b"), serial = run(1, "c");
  auto without_threads = [](const std::string& text) {
    auto j = report::Json::parse(text);
    j["metadata"]["config"].erase("threads");
    return report::json_text(j);
  };
  const bool same = !a.empty() && a == b;
  const bool same_serial = without_threads(a) == without_threads(serial);
  return {same && same_serial, "parallel runs " + std::string(same ? "identical" : "differ") + " (sha256 " +
                                   report::sha256_hex(a).substr(0, 16) + "), serial vs parallel " +
                                   (same_serial ? "identical" : "differ") + " apart from the threads setting"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 cumulant oracle equivalence", cumulant_oracle},
      {"2 structural count parity", structural_counts},
      {"3 Gaussian nullity", gaussian_nullity},
      {"4 glasso correctness", glasso_correctness},
      {"5 Louvain/CPM optimality", louvain_optimality},
      {"6 self-comparison fixed point", self_comparison},
      {"7 KS skip without continuous columns", ks_skip},
      {"8 resampling baseline plausibility", resample_plausibility},
      {"9 effect-size formula checks", effect_size_checks},
      {"10 performance envelope", performance},
      {"11 determinism", determinism}};
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
