#pragma once

#include <algorithm>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <openssl/evp.h>

#include "json.hpp"
#include "synthaudit/cumulants.hpp"
#include "synthaudit/dependence.hpp"
#include "synthaudit/error.hpp"
#include "synthaudit/glasso.hpp"
#include "synthaudit/ingest.hpp"
#include "synthaudit/marginal.hpp"
#include "synthaudit/network.hpp"
#include "synthaudit/probes.hpp"
#include "synthaudit/rng.hpp"
#include "synthaudit/table.hpp"
#include "synthaudit/text.hpp"

namespace synthaudit::report {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0";
inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ModuleSet {
  bool marginal = true;
  bool dependence = true;
  bool glasso = true;
  bool network = true;
  bool cumulants = true;
  bool probes = true;

  bool any() const { return marginal || dependence || glasso || network || cumulants || probes; }

  /// Comma-separated module names, or "all" / "none".
  static ModuleSet parse(const std::string& list) {
    ModuleSet m{false, false, false, false, false, false};
    for (const auto& name : split_list(list)) {
      if (name == "all") m = ModuleSet{};
      else if (name == "none" || name.empty()) continue;
      else if (name == "marginal") m.marginal = true;
      else if (name == "dependence") m.dependence = true;
      else if (name == "glasso") m.glasso = true;
      else if (name == "network") m.network = true;
      else if (name == "cumulants") m.cumulants = true;
      else if (name == "probes") m.probes = true;
      else fail(ErrorCode::invalid_input, "unknown module '" + name + "'");
    }
    return m;
  }

  std::string to_string() const {
    std::vector<std::string> on;
    if (marginal) on.push_back("marginal");
    if (dependence) on.push_back("dependence");
    if (glasso) on.push_back("glasso");
    if (network) on.push_back("network");
    if (cumulants) on.push_back("cumulants");
    if (probes) on.push_back("probes");
    std::string s;
    for (std::size_t i = 0; i < on.size(); ++i) s += (i ? "," : "") + on[i];
    return s.empty() ? "none" : s;
  }
};

struct RunConfig {
  std::string real_path;
  std::vector<std::pair<std::string, std::string>> synthetic_paths;  // name -> path, may contain {trial}
  std::string schema_path;
  std::size_t trials = 15;
  double split_fraction = 0.7;
  std::uint64_t master_seed = 0;
  bool fixed_split = true;
  ModuleSet modules;
  std::vector<std::string> baselines{"test", "resample"};
  std::size_t threads = 1;

  double colinear_threshold = 0.95;
  std::size_t max_cardinality = 10;

  std::size_t n_bins = 10;
  dependence::EffectSizeDf effect_size_df = dependence::EffectSizeDf::product;

  double gamma = 0.5;
  std::size_t lambda_points = 50;
  double lambda_min_ratio = 0.01;
  double glasso_tol = 1e-5;
  std::size_t glasso_max_iter = 500;
  double psd_eps = 1e-6;

  double edge_threshold = 0.0;
  double resolution = 0.05;

  std::vector<std::size_t> cumulant_orders{2, 3, 4};
  double n_sd = 2.0;
  std::size_t scree_k = 100;
  bool cumulant_include_target = false;

  double level = 0.95;
  std::size_t mc_samples = 100000;
  double logit_tol = 1e-8;
  std::size_t logit_max_iter = 100;
};

namespace detail {

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  require(res.ec == std::errc() && res.ptr == v.data() + v.size(), ErrorCode::invalid_input,
          "'" + key + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  const auto x = ingest::coerce_number(v);
  require(x.has_value(), ErrorCode::invalid_input, "'" + key + "' expects a number, got '" + v + "'");
  return *x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorCode::invalid_input, "'" + key + "' expects true/false, got '" + v + "'");
}

inline bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

}  // namespace detail

/// Parses "NAME=PATH,NAME=PATH".
inline std::vector<std::pair<std::string, std::string>> parse_named_paths(const std::string& list) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& item : split_list(list)) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    require(eq != std::string::npos && eq > 0, ErrorCode::invalid_input, "expected NAME=PATH, got '" + item + "'");
    out.emplace_back(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
  return out;
}

/// Applies `key = value` settings named after the RunConfig fields.
inline void apply_settings(RunConfig& c, const KeyValues& kv) {
  using namespace detail;
  for (const auto& [k, v] : kv) {
    if (k == "real_path") c.real_path = v;
    else if (k == "synthetic_paths") c.synthetic_paths = parse_named_paths(v);
    else if (k == "schema_path") c.schema_path = v;
    else if (k == "trials") c.trials = parse_uint(k, v);
    else if (k == "split_fraction") c.split_fraction = parse_real(k, v);
    else if (k == "master_seed") c.master_seed = parse_uint(k, v);
    else if (k == "fixed_split") c.fixed_split = parse_bool(k, v);
    else if (k == "modules") c.modules = ModuleSet::parse(v);
    else if (k == "baselines") {
      c.baselines.clear();
      for (auto& b : split_list(v))
        if (!b.empty()) c.baselines.push_back(b);
    } else if (k == "threads") c.threads = parse_uint(k, v);
    else if (k == "colinear_threshold") c.colinear_threshold = parse_real(k, v);
    else if (k == "max_cardinality") c.max_cardinality = parse_uint(k, v);
    else if (k == "n_bins") c.n_bins = parse_uint(k, v);
    else if (k == "effect_size_df") c.effect_size_df = dependence::parse_effect_size_df(v);
    else if (k == "gamma") c.gamma = parse_real(k, v);
    else if (k == "lambda_points") c.lambda_points = parse_uint(k, v);
    else if (k == "lambda_min_ratio") c.lambda_min_ratio = parse_real(k, v);
    else if (k == "glasso_tol") c.glasso_tol = parse_real(k, v);
    else if (k == "glasso_max_iter") c.glasso_max_iter = parse_uint(k, v);
    else if (k == "psd_eps") c.psd_eps = parse_real(k, v);
    else if (k == "edge_threshold") c.edge_threshold = parse_real(k, v);
    else if (k == "resolution") c.resolution = parse_real(k, v);
    else if (k == "cumulant_orders") {
      c.cumulant_orders.clear();
      for (auto& o : split_list(v)) c.cumulant_orders.push_back(parse_uint(k, o));
    } else if (k == "n_sd") c.n_sd = parse_real(k, v);
    else if (k == "scree_k") c.scree_k = parse_uint(k, v);
    else if (k == "cumulant_include_target") c.cumulant_include_target = parse_bool(k, v);
    else if (k == "level") c.level = parse_real(k, v);
    else if (k == "mc_samples") c.mc_samples = parse_uint(k, v);
    else if (k == "logit_tol") c.logit_tol = parse_real(k, v);
    else if (k == "logit_max_iter") c.logit_max_iter = parse_uint(k, v);
    else fail(ErrorCode::invalid_input, "unknown config key '" + k + "'");
  }
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open config '" + path + "'");
  apply_settings(base, parse_key_values(in));
  return base;
}

/// Parameter checks that do not touch the file system.
inline void validate_parameters(const RunConfig& c) {
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorCode::invalid_input, what); };
  check(c.trials >= 1, "trials must be >= 1");
  check(c.split_fraction > 0 && c.split_fraction < 1, "split_fraction must lie in (0, 1)");
  check(c.colinear_threshold > 0 && c.colinear_threshold <= 1, "colinear_threshold must lie in (0, 1]");
  check(c.max_cardinality >= 2, "max_cardinality must be >= 2");
  check(c.n_bins >= 2, "n_bins must be >= 2");
  check(c.gamma >= 0 && c.gamma <= 1, "gamma must lie in [0, 1]");
  check(c.lambda_points >= 1, "lambda_points must be >= 1");
  check(c.lambda_min_ratio > 0 && c.lambda_min_ratio <= 1, "lambda_min_ratio must lie in (0, 1]");
  check(c.glasso_tol > 0 && c.glasso_max_iter >= 1, "glasso_tol and glasso_max_iter must be positive");
  check(c.psd_eps > 0, "psd_eps must be positive");
  check(c.edge_threshold >= 0, "edge_threshold must be >= 0");
  check(c.resolution > 0, "resolution must be positive");
  for (auto o : c.cumulant_orders) check(o >= 2 && o <= 4, "cumulant orders must lie in 2..4");
  check(c.n_sd > 0, "n_sd must be positive");
  check(c.scree_k >= 1, "scree_k must be >= 1");
  check(c.level > 0 && c.level < 1, "level must lie in (0, 1)");
  check(c.mc_samples >= 1, "mc_samples must be >= 1");
  check(c.logit_tol > 0 && c.logit_max_iter >= 1, "logit_tol and logit_max_iter must be positive");
  std::vector<std::string> names{"train"};
  for (const auto& b : c.baselines) {
    check(b == "test" || b == "resample" || b == "shuffled" || b == "self", "unknown baseline '" + b + "'");
    names.push_back(b);
  }
  for (const auto& [name, path] : c.synthetic_paths) {
    check(detail::valid_name(name), "dataset name '" + name + "' must use letters, digits, '_' or '-'");
    names.push_back(name);
  }
  std::vector<std::string> sorted = names;
  std::sort(sorted.begin(), sorted.end());
  check(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "duplicate dataset name");
}

inline Json to_json(const RunConfig& c) {
  Json synth = Json::array();
  for (const auto& [name, path] : c.synthetic_paths) synth.push_back({{"name", name}, {"path", path}});
  Json orders = Json::array();
  for (auto o : c.cumulant_orders) orders.push_back(o);
  return Json{{"real_path", c.real_path},
              {"synthetic_paths", synth},
              {"schema_path", c.schema_path},
              {"trials", c.trials},
              {"split_fraction", c.split_fraction},
              {"master_seed", c.master_seed},
              {"fixed_split", c.fixed_split},
              {"modules", c.modules.to_string()},
              {"baselines", c.baselines},
              {"threads", c.threads},
              {"colinear_threshold", c.colinear_threshold},
              {"max_cardinality", c.max_cardinality},
              {"n_bins", c.n_bins},
              {"effect_size_df", dependence::to_string(c.effect_size_df)},
              {"gamma", c.gamma},
              {"lambda_points", c.lambda_points},
              {"lambda_min_ratio", c.lambda_min_ratio},
              {"glasso_tol", c.glasso_tol},
              {"glasso_max_iter", c.glasso_max_iter},
              {"psd_eps", c.psd_eps},
              {"edge_threshold", c.edge_threshold},
              {"resolution", c.resolution},
              {"cumulant_orders", orders},
              {"n_sd", c.n_sd},
              {"scree_k", c.scree_k},
              {"cumulant_include_target", c.cumulant_include_target},
              {"level", c.level},
              {"mc_samples", c.mc_samples},
              {"logit_tol", c.logit_tol},
              {"logit_max_iter", c.logit_max_iter}};
}

// ---------------------------------------------------------------------------
// Aggregation and serialisation helpers
// ---------------------------------------------------------------------------

struct Aggregate {
  double min = 0;
  double median = 0;
  double max = 0;
};

/// Min, lower-middle median, max.
inline Aggregate aggregate(std::vector<double> values) {
  require(!values.empty(), ErrorCode::invalid_input, "cannot aggregate an empty list");
  std::sort(values.begin(), values.end());
  return {values.front(), values[(values.size() - 1) / 2], values.back()};
}

inline Json number_or_null(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// JSON text with every floating-point value written at 17 significant
/// digits; non-finite values become null.
inline void write_json(std::ostream& out, const Json& j, int indent = 2, int depth = 0) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      std::size_t i = 0;
      for (const auto& [k, v] : j.items()) {
        out << pad << Json(k).dump() << ": ";
        write_json(out, v, indent, depth + 1);
        out << (++i < j.size() ? ",\n" : "\n");
      }
      out << close << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out << pad;
        write_json(out, j[i], indent, depth + 1);
        out << (i + 1 < j.size() ? ",\n" : "\n");
      }
      out << close << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out << (std::isfinite(v) ? format_g17(v) : "null");
      return;
    }
    default: out << j.dump();
  }
}

inline std::string json_text(const Json& j) {
  std::ostringstream out;
  write_json(out, j);
  out << '\n';
  return out.str();
}

inline std::string csv_number(double v) { return std::isfinite(v) ? format_g17(v) : ""; }

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) == 1, ErrorCode::io,
          "SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 15];
  }
  return hex;
}

// ---------------------------------------------------------------------------
// Per-table analysis
// ---------------------------------------------------------------------------

/// Seed streams derived from a trial seed.
enum Stream : std::uint64_t { split_stream = 1, resample_stream = 2, shuffle_stream = 3, louvain_stream = 4, mc_stream = 5 };

struct ModuleError {
  std::string module;
  ErrorCode code;
  std::string message;
};

struct LogitDesign {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> names;  // coefficient names, intercept first
};

/// Reason the logistic probe does not apply, if any.
inline std::optional<std::string> logit_not_applicable(const TableSchema& schema) {
  if (!schema.target) return "schema declares no target";
  const auto j = schema.index_of(*schema.target);
  if (!j) return "target column was removed";
  const auto& spec = schema.columns[*j];
  if (!spec.discrete() || spec.levels.size() != 2) return "target is not a two-level column";
  return std::nullopt;
}

/// Design matrix for the logistic probe: categoricals with at most
/// max_cardinality levels one-hot encoded with their first level dropped,
/// everything else label encoded. The response is the target's level index.
inline LogitDesign logit_design(const ColumnTable& table, std::size_t max_cardinality) {
  const auto& schema = table.schema();
  const auto reason = logit_not_applicable(schema);
  require(!reason, ErrorCode::invalid_input, reason.value_or(""));
  const std::size_t t = *schema.index_of(*schema.target);
  LogitDesign d;
  d.y.resize(static_cast<Eigen::Index>(table.n_rows()));
  for (std::size_t r = 0; r < table.n_rows(); ++r) d.y(static_cast<Eigen::Index>(r)) = table.column(t).codes[r];
  const ColumnTable rest = table.without_columns({*schema.target});
  std::vector<std::string> reference_levels;
  for (std::size_t j = 0; j < rest.n_cols(); ++j) {
    const auto& spec = rest.spec(j);
    if (spec.kind == ColumnKind::categorical && spec.levels.size() <= max_cardinality)
      reference_levels.push_back(spec.name + "=" + spec.levels.front());
  }
  const ColumnTable encoded = ingest::one_hot_encode(rest, max_cardinality).without_columns(reference_levels);
  d.names.push_back("(intercept)");
  for (std::size_t j = 0; j < encoded.n_cols(); ++j) d.names.push_back(encoded.spec(j).name);
  d.x = encoded.n_cols() ? ingest::label_encode(encoded) : Eigen::MatrixXd(table.n_rows(), 0);
  return d;
}

/// Label-encoded numeric matrix, optionally without the target column.
inline Eigen::MatrixXd numeric_matrix(const ColumnTable& table, bool include_target, std::vector<std::string>* names) {
  const auto& target = table.schema().target;
  const ColumnTable t = (include_target || !target) ? table : table.without_columns({*target});
  if (names) {
    names->clear();
    for (std::size_t j = 0; j < t.n_cols(); ++j) names->push_back(t.spec(j).name);
  }
  require(t.n_cols() >= 1, ErrorCode::invalid_input, "no numeric columns left");
  return ingest::label_encode(t);
}

/// Everything computed on one table. The reference (train) analysis also
/// carries the PCA model used to project every candidate.
struct Analysis {
  std::vector<ModuleError> errors;
  std::optional<dependence::AssociationMatrix> assoc;
  std::optional<glasso::EbicSelection> selection;
  Eigen::MatrixXd partial;
  std::optional<network::DepGraph> graph;
  std::optional<network::GraphMetrics> metrics;
  std::optional<network::CommunityPartition> partition;
  std::vector<std::string> cumulant_columns;
  std::map<std::size_t, cumulants::CumulantTensor> tensors;
  std::map<std::size_t, cumulants::SignificanceMask> masks;
  std::optional<std::string> logit_skipped;
  std::vector<std::string> logit_names;
  std::optional<probes::LogisticFit> logit;
  std::vector<probes::Interval> intervals;
  std::optional<probes::PcaModel> pca_model;
  Eigen::MatrixXd pca_scores;
  std::vector<std::string> pca_columns;

  bool failed(const std::string& module) const {
    return std::any_of(errors.begin(), errors.end(), [&](const auto& e) { return e.module == module; });
  }
};

namespace detail {

template <class F>
void guarded(Analysis& a, const std::string& module, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    a.errors.push_back({module, e.code(), e.what()});
  }
}

}  // namespace detail

inline Analysis analyze(const ColumnTable& table, const RunConfig& cfg, std::uint64_t louvain_seed,
                        const probes::PcaModel* reference_pca) {
  Analysis a;
  const auto& m = cfg.modules;
  const bool need_glasso = m.glasso || m.network || m.dependence;
  if (m.dependence || need_glasso)
    detail::guarded(a, "dependence", [&] { a.assoc = dependence::association_matrix(table, cfg.n_bins, cfg.effect_size_df); });
  if (need_glasso && a.assoc) {
    detail::guarded(a, "glasso", [&] {
      const auto s = glasso::nearest_psd(a.assoc->values, cfg.psd_eps);
      const auto grid = glasso::default_lambda_grid(s.m, cfg.lambda_points, cfg.lambda_min_ratio);
      a.selection = glasso::ebic_select(s, static_cast<double>(table.n_rows()), grid, cfg.gamma, cfg.glasso_tol,
                                        cfg.glasso_max_iter);
      a.partial = glasso::partial_correlations(a.selection->best.theta);
    });
  }
  if (m.network && a.selection) {
    detail::guarded(a, "network", [&] {
      a.graph = network::build_graph(a.partial, a.assoc->names, cfg.edge_threshold);
      a.metrics = network::graph_metrics(*a.graph);
      a.partition = network::louvain_cpm(*a.graph, cfg.resolution, louvain_seed);
    });
  }
  if (m.cumulants) {
    detail::guarded(a, "cumulants", [&] {
      const cumulants::MomentCache cache(numeric_matrix(table, cfg.cumulant_include_target, &a.cumulant_columns));
      for (auto order : cfg.cumulant_orders) {
        auto t = cumulants::cumulant_tensor(cache, order);
        a.masks.emplace(order, cumulants::empirical_rule_mask(t, cfg.n_sd));
        a.tensors.emplace(order, std::move(t));
      }
    });
  }
  if (m.probes) {
    a.logit_skipped = logit_not_applicable(table.schema());
    if (!a.logit_skipped) {
      detail::guarded(a, "logit", [&] {
        const auto d = logit_design(table, cfg.max_cardinality);
        a.logit_names = d.names;
        auto fit = probes::fit_logistic(d.x, d.y, cfg.logit_tol, cfg.logit_max_iter);
        require(fit.converged, ErrorCode::convergence, "logistic regression did not converge");
        a.intervals = probes::wald_intervals(fit, cfg.level);
        a.logit = std::move(fit);
      });
    }
    detail::guarded(a, "pca", [&] {
      const Eigen::MatrixXd x = numeric_matrix(table, false, &a.pca_columns);
      if (reference_pca) {
        a.pca_scores = reference_pca->project(x);
      } else {
        auto r = probes::pca_project(x, 2);
        a.pca_model = std::move(r.model);
        a.pca_scores = std::move(r.scores);
      }
    });
  }
  return a;
}

// ---------------------------------------------------------------------------
// Pair comparison
// ---------------------------------------------------------------------------

struct Payload {
  std::string name;
  std::string content;
};

using MetricList = std::vector<std::pair<std::string, std::optional<double>>>;

struct PairResult {
  Json block;
  MetricList metrics;
  std::vector<Payload> files;
  std::vector<ModuleError> errors;
};

namespace detail {

inline std::string csv_text(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (const auto& r : rows) csv::write_row(out, r);
  return out.str();
}

inline std::string matrix_csv(const std::vector<std::string>& names, const Eigen::MatrixXd& v,
                              const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>* defined,
                              const std::string& value_name) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"col_i", "col_j", value_name};
  if (defined) header.push_back("defined");
  rows.push_back(header);
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      std::vector<std::string> r{names[static_cast<std::size_t>(i)], names[static_cast<std::size_t>(j)],
                                 csv_number(v(i, j))};
      if (defined) r.push_back((*defined)(i, j) ? "true" : "false");
      rows.push_back(std::move(r));
    }
  return csv_text(rows);
}

inline std::string graph_json(const Analysis& a) {
  const auto& g = *a.graph;
  Json nodes = Json::array();
  for (std::size_t i = 0; i < g.size(); ++i)
    nodes.push_back({{"name", g.nodes()[i]},
                     {"community", a.partition->assignment[i]},
                     {"eigencentrality", a.metrics->eigencentrality[i]},
                     {"degree", a.metrics->degrees[i]}});
  Json edges = Json::array();
  for (const auto& e : g.edges())
    edges.push_back({{"i", e.i}, {"j", e.j}, {"weight", e.weight}, {"sign", e.weight > 0 ? 1 : -1}});
  Json out{{"nodes", nodes},
           {"edges", edges},
           {"metrics",
            {{"density", a.metrics->density},
             {"diameter", a.metrics->diameter},
             {"largest_component", a.metrics->largest_component},
             {"n_communities", a.partition->n_communities}}}};
  return json_text(out);
}

inline Json glasso_summary(const glasso::EbicSelection& s) {
  std::size_t failed = 0;
  for (const auto& gp : s.path) failed += !gp.ok;
  return Json{{"lambda", s.best.lambda},
              {"ebic", s.best.ebic},
              {"edge_count", s.best.edge_count},
              {"n_iter", s.best.n_iter},
              {"failed_grid_points", failed}};
}

inline std::string glasso_path_csv(const glasso::EbicSelection& s) {
  std::vector<std::vector<std::string>> rows{{"lambda", "ebic", "edge_count", "ok", "error"}};
  for (const auto& gp : s.path)
    rows.push_back({csv_number(gp.lambda), csv_number(gp.ebic), std::to_string(gp.edge_count), gp.ok ? "true" : "false",
                    gp.error});
  return csv_text(rows);
}

inline Json network_summary(const Analysis& a) {
  return Json{{"n_edges", a.graph->edges().size()},
              {"density", a.metrics->density},
              {"diameter", a.metrics->diameter},
              {"largest_component", a.metrics->largest_component},
              {"n_communities", a.partition->n_communities}};
}

}  // namespace detail

/// Files and report block for the reference table itself.
inline PairResult describe_reference(const Analysis& ref, const ColumnTable& table, const RunConfig& cfg,
                                     std::size_t trial) {
  PairResult out;
  const std::string tag = "train_" + std::to_string(trial);
  out.block["n_rows"] = table.n_rows();
  out.block["n_cols"] = table.n_cols();
  if (ref.assoc && cfg.modules.dependence)
    out.files.push_back({"assoc_" + tag + ".csv",
                         detail::matrix_csv(ref.assoc->names, ref.assoc->values, &ref.assoc->defined, "effect_size")});
  if (ref.selection && cfg.modules.glasso) {
    out.block["glasso"] = detail::glasso_summary(*ref.selection);
    out.files.push_back({"partial_" + tag + ".csv", detail::matrix_csv(ref.assoc->names, ref.partial, nullptr, "partial")});
    out.files.push_back({"glasso_path_" + tag + ".csv", detail::glasso_path_csv(*ref.selection)});
  }
  if (ref.partition) {
    out.block["network"] = detail::network_summary(ref);
    out.files.push_back({"graph_" + tag + ".json", detail::graph_json(ref)});
  }
  if (!ref.tensors.empty()) {
    Json orders = Json::object();
    for (const auto& [order, mask] : ref.masks)
      orders[std::to_string(order)] = {{"expanded_count", ref.tensors.at(order).expanded_count()},
                                       {"unique_count", ref.tensors.at(order).unique_count()},
                                       {"mean", mask.mean},
                                       {"sd", mask.sd},
                                       {"threshold_low", mask.threshold_low},
                                       {"threshold_high", mask.threshold_high},
                                       {"n_positive", mask.n_positive},
                                       {"n_negative", mask.n_negative},
                                       {"degenerate", mask.degenerate}};
    out.block["cumulants"] = {{"p", ref.cumulant_columns.size()}, {"columns", ref.cumulant_columns}, {"orders", orders}};
  }
  if (cfg.modules.probes) {
    Json logit{{"status", ref.logit_skipped ? "not_applicable" : (ref.logit ? "ok" : "failed")}};
    if (ref.logit_skipped) logit["reason"] = *ref.logit_skipped;
    if (ref.logit) {
      logit["p"] = ref.logit_names.size() - 1;
      logit["log_likelihood"] = ref.logit->log_likelihood;
      logit["n_iter"] = ref.logit->n_iter;
    }
    out.block["logit"] = logit;
    if (ref.pca_model) {
      Json dropped = Json::array();
      for (auto j : ref.pca_model->dropped_columns) dropped.push_back(ref.pca_columns[j]);
      out.block["pca"] = {{"p", ref.pca_model->kept_columns.size()},
                          {"dropped_columns", dropped},
                          {"explained_variance",
                           {ref.pca_model->explained_variance(0), ref.pca_model->explained_variance(1)}}};
    }
  }
  out.errors = ref.errors;
  return out;
}

/// Compares a candidate table against the reference analysis.
inline PairResult compare(const Analysis& ref, const ColumnTable& ref_table, const Analysis& cand,
                          const ColumnTable& cand_table, const std::string& name, std::size_t trial,
                          const RunConfig& cfg, std::uint64_t mc_seed) {
  PairResult out;
  const std::string tag = name + "_" + std::to_string(trial);
  out.errors = cand.errors;
  auto record = [&](const std::string& metric, std::optional<double> v) { out.metrics.emplace_back(metric, v); };
  auto guard = [&](const std::string& module, auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      out.errors.push_back({module, e.code(), e.what()});
    }
  };
  out.block["n_rows"] = cand_table.n_rows();

  if (cfg.modules.marginal) {
    guard("marginal", [&] {
      std::vector<marginal::KsResult> per_column;
      const auto worst = marginal::worst_case_ks(ref_table, cand_table, &per_column);
      Json cols = Json::array();
      for (const auto& k : per_column) cols.push_back({{"column", k.column}, {"ks", k.statistic}});
      Json props = Json::array();
      std::optional<double> max_tvd;
      for (std::size_t j = 0; j < ref_table.n_cols(); ++j) {
        if (!ref_table.spec(j).discrete()) continue;
        const auto pc = marginal::proportion_comparison(ref_table.spec(j), ref_table.column(j).codes,
                                                        cand_table.spec(j), cand_table.column(j).codes);
        props.push_back({{"column", ref_table.spec(j).name}, {"tvd", pc.tvd}});
        max_tvd = std::max(max_tvd.value_or(0.0), pc.tvd);
      }
      out.block["marginal"] = {{"ks_status", worst ? "ok" : "not_applicable"},
                               {"worst_ks", number_or_null(worst)},
                               {"columns", cols},
                               {"proportions", props},
                               {"max_tvd", number_or_null(max_tvd)}};
      record("worst_ks", worst);
      record("max_tvd", max_tvd);
    });
  }

  if (cfg.modules.dependence && ref.assoc && cand.assoc) {
    guard("dependence", [&] {
      const auto diff = dependence::difference_matrix(*ref.assoc, *cand.assoc);
      const double det = dependence::det_difference(diff.values);
      std::size_t masked = 0;
      for (Eigen::Index i = 0; i < diff.defined.rows(); ++i)
        for (Eigen::Index j = i + 1; j < diff.defined.cols(); ++j) masked += !diff.defined(i, j);
      Json block{{"params", {{"n_bins", cfg.n_bins}, {"effect_size_df", dependence::to_string(cfg.effect_size_df)}}},
                 {"det_assoc", det},
                 {"masked_pairs", masked}};
      std::optional<double> det_partial;
      if (ref.selection && cand.selection) {
        det_partial = dependence::det_difference(ref.partial - cand.partial);
        block["det_partial"] = *det_partial;
      }
      out.block["dependence"] = block;
      record("det_assoc", det);
      record("det_partial", det_partial);
      out.files.push_back({"assoc_" + tag + ".csv",
                           detail::matrix_csv(cand.assoc->names, cand.assoc->values, &cand.assoc->defined, "effect_size")});
      out.files.push_back({"diff_" + tag + ".csv", detail::matrix_csv(diff.names, diff.values, &diff.defined, "difference")});
    });
  }

  if (cfg.modules.glasso && cand.selection) {
    Json block = detail::glasso_summary(*cand.selection);
    block["params"] = {{"gamma", cfg.gamma},
                       {"lambda_points", cfg.lambda_points},
                       {"lambda_min_ratio", cfg.lambda_min_ratio},
                       {"tol", cfg.glasso_tol},
                       {"max_iter", cfg.glasso_max_iter},
                       {"psd_eps", cfg.psd_eps}};
    out.block["glasso"] = block;
    record("edge_count", static_cast<double>(cand.selection->best.edge_count));
    out.files.push_back({"partial_" + tag + ".csv", detail::matrix_csv(cand.assoc->names, cand.partial, nullptr, "partial")});
    out.files.push_back({"glasso_path_" + tag + ".csv", detail::glasso_path_csv(*cand.selection)});
  }

  if (cfg.modules.network && ref.partition && cand.partition) {
    guard("network", [&] {
      const auto cmp = network::compare_partitions(*ref.partition, *cand.partition);
      Json block = detail::network_summary(cand);
      block["params"] = {{"edge_threshold", cfg.edge_threshold}, {"resolution", cfg.resolution}, {"objective", "cpm"}};
      block["delta_communities"] = cmp.delta_communities;
      block["ari"] = cmp.ari;
      block["quality"] = network::cpm_quality(*cand.graph, *cand.partition, cfg.resolution);
      out.block["network"] = block;
      record("ari", cmp.ari);
      record("delta_communities", static_cast<double>(cmp.delta_communities));
      out.files.push_back({"graph_" + tag + ".json", detail::graph_json(cand)});
    });
  }

  if (cfg.modules.cumulants && !ref.tensors.empty() && !cand.tensors.empty()) {
    guard("cumulants", [&] {
      Json orders = Json::object();
      for (auto order : cfg.cumulant_orders) {
        const auto& rt = ref.tensors.at(order);
        const auto& ct = cand.tensors.at(order);
        const auto rates = cumulants::tpr_tnr(ref.masks.at(order), cand.masks.at(order), rt.index());
        const auto smse = cumulants::standardized_error(rt, ct);
        orders[std::to_string(order)] = {{"tpr", number_or_null(rates.tpr)},
                                         {"tnr", number_or_null(rates.tnr)},
                                         {"tp", rates.tp},
                                         {"fn", rates.fn},
                                         {"tn", rates.tn},
                                         {"fp", rates.fp},
                                         {"smse", number_or_null(smse)},
                                         {"n_positive", cand.masks.at(order).n_positive},
                                         {"degenerate", cand.masks.at(order).degenerate}};
        const std::string k = std::to_string(order);
        record("tpr_" + k, rates.tpr);
        record("tnr_" + k, rates.tnr);
        record("smse_" + k, smse);
      }
      out.block["cumulants"] = {{"params", {{"n_sd", cfg.n_sd}, {"include_target", cfg.cumulant_include_target}}},
                                {"p", cand.cumulant_columns.size()},
                                {"orders", orders}};
    });
  }

  if (cfg.modules.probes) {
    Json logit{{"params", {{"level", cfg.level}, {"tol", cfg.logit_tol}, {"max_iter", cfg.logit_max_iter}}}};
    if (ref.logit_skipped) {
      logit["status"] = "not_applicable";
      logit["reason"] = *ref.logit_skipped;
    } else if (ref.logit && cand.logit && ref.intervals.size() == cand.intervals.size()) {
      Json coefs = Json::array();
      std::vector<std::vector<std::string>> rows{
          {"coefficient", "ref_estimate", "ref_low", "ref_high", "estimate", "low", "high", "overlap_pct"}};
      double sum = 0;
      for (std::size_t j = 0; j < ref.intervals.size(); ++j) {
        const auto& ri = ref.intervals[j];
        const auto& ci = cand.intervals[j];
        const double ov = probes::interval_overlap_pct(ri, ci);
        sum += ov;
        const double re = ref.logit->coefficients(static_cast<Eigen::Index>(j));
        const double ce = cand.logit->coefficients(static_cast<Eigen::Index>(j));
        coefs.push_back({{"name", ref.logit_names[j]}, {"ref_estimate", re}, {"estimate", ce}, {"overlap_pct", ov}});
        rows.push_back({ref.logit_names[j], csv_number(re), csv_number(ri.low), csv_number(ri.high), csv_number(ce),
                        csv_number(ci.low), csv_number(ci.high), csv_number(ov)});
      }
      const double mean = sum / static_cast<double>(ref.intervals.size());
      logit["status"] = "ok";
      logit["coefficients"] = coefs;
      logit["mean_overlap_pct"] = mean;
      record("logit_overlap_pct", mean);
      out.files.push_back({"logit_" + tag + ".csv", detail::csv_text(rows)});
    } else {
      logit["status"] = "failed";
      record("logit_overlap_pct", std::nullopt);
    }
    out.block["logit"] = logit;

    if (ref.pca_model && cand.pca_scores.size() > 0) {
      guard("pca", [&] {
        const auto re = probes::fit_ellipse(ref.pca_scores, cfg.level);
        const auto ce = probes::fit_ellipse(cand.pca_scores, cfg.level);
        const double overlap = probes::ellipse_overlap(re, ce, cfg.mc_samples, mc_seed);
        out.block["pca"] = {{"params", {{"level", cfg.level}, {"mc_samples", cfg.mc_samples}}}, {"overlap", overlap}};
        record("pca_overlap", overlap);
        std::vector<std::vector<std::string>> rows{{"record", "source", "row", "pc1", "pc2", "center1", "center2",
                                                    "shape11", "shape12", "shape22", "scale", "overlap"}};
        auto ellipse_row = [&](const std::string& source, const probes::Ellipse2D& e) {
          rows.push_back({"ellipse", source, "", "", "", csv_number(e.center(0)), csv_number(e.center(1)),
                          csv_number(e.shape(0, 0)), csv_number(e.shape(0, 1)), csv_number(e.shape(1, 1)),
                          csv_number(e.scale), csv_number(overlap)});
        };
        ellipse_row("reference", re);
        ellipse_row("candidate", ce);
        auto score_rows = [&](const std::string& source, const Eigen::MatrixXd& s) {
          for (Eigen::Index r = 0; r < s.rows(); ++r)
            rows.push_back({"score", source, std::to_string(r), csv_number(s(r, 0)), csv_number(s(r, 1)), "", "", "",
                            "", "", "", ""});
        };
        score_rows("reference", ref.pca_scores);
        score_rows("candidate", cand.pca_scores);
        out.files.push_back({"pca_" + tag + ".csv", detail::csv_text(rows)});
      });
    }
  }

  if (!out.errors.empty()) {
    Json errs = Json::array();
    for (const auto& e : out.errors)
      errs.push_back({{"module", e.module}, {"code", std::string(to_string(e.code))}, {"message", e.message}});
    out.block["errors"] = errs;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

/// A candidate dataset: either one table used in every trial, or a path
/// template containing "{trial}" loaded per trial.
struct CandidateSource {
  std::string name;
  std::optional<ColumnTable> table;
  std::optional<ingest::RejectionLog> log;
  std::string path_template;
};

struct Inputs {
  TableSchema schema;
  ColumnTable real;
  std::optional<ingest::RejectionLog> real_log;
  std::vector<CandidateSource> synthetic;
};

struct EvaluationReport {
  Json json;
  std::vector<Payload> files;  // payloads other than report.json
  std::size_t n_trials = 0;
  std::size_t n_failed = 0;

  bool all_failed() const { return n_trials > 0 && n_failed == n_trials; }
};

struct ManifestEntry {
  std::string name;
  std::size_t bytes = 0;
  std::string sha256;
};

namespace detail {

inline Json rejection_json(const ingest::RejectionLog& log) {
  Json reasons = Json::object();
  for (auto r : ingest::kAllReasons) reasons[ingest::to_string(r)] = log.count(r);
  return Json{{"n_input", log.n_input}, {"n_dropped", log.n_dropped}, {"n_remaining", log.n_remaining}, {"reasons", reasons}};
}

inline std::string replace_trial(std::string path, std::size_t trial) {
  const std::string key = "{trial}";
  for (auto pos = path.find(key); pos != std::string::npos; pos = path.find(key))
    path.replace(pos, key.size(), std::to_string(trial));
  return path;
}

inline std::vector<std::vector<std::string>> marginal_rows(const ColumnTable& ref, const ColumnTable& t,
                                                           const std::string& dataset, std::size_t trial) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t j = 0; j < t.n_cols(); ++j) {
    std::vector<double> col(t.n_rows());
    for (std::size_t r = 0; r < t.n_rows(); ++r) col[r] = t.numeric(r, j);
    const auto s = marginal::marginal_summary(t.spec(j).name, col);
    std::string ks, tvd;
    if (t.spec(j).kind == ColumnKind::continuous) ks = csv_number(marginal::ks_statistic(ref.column(j).values, t.column(j).values));
    else tvd = csv_number(marginal::proportion_comparison(ref.spec(j), ref.column(j).codes, t.spec(j), t.column(j).codes).tvd);
    std::vector<std::string> row{dataset, std::to_string(trial), t.spec(j).name, to_string(t.spec(j).kind), ks, tvd,
                                 csv_number(s.mean), csv_number(s.sd)};
    for (double q : s.quantiles) row.push_back(csv_number(q));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct TrialOutput {
  Json block;
  std::vector<Payload> files;
  std::vector<std::vector<std::string>> marginal_rows;
  std::map<std::string, MetricList> metrics;
  std::map<std::string, std::map<std::size_t, cumulants::CumulantTensor>> tensors;
  bool failed = false;
};

inline TrialOutput run_trial(const Inputs& in, const RunConfig& cfg, std::size_t trial) {
  TrialOutput out;
  const std::uint64_t seed = derive_seed(cfg.master_seed, trial);
  const std::uint64_t split_seed =
      cfg.fixed_split ? derive_seed(cfg.master_seed, 0xffffffffffffffffULL) : derive_seed(seed, split_stream);
  out.block["trial"] = trial;
  out.block["seed"] = seed;
  out.block["split_seed"] = split_seed;
  Json errors = Json::array();
  auto push_error = [&](const std::string& dataset, const std::string& module, ErrorCode code, const std::string& msg) {
    errors.push_back({{"dataset", dataset}, {"module", module}, {"code", std::string(to_string(code))}, {"message", msg}});
  };

  try {
    const auto split = ingest::split_train_test(in.real, cfg.split_fraction, split_seed);
    const ColumnTable& train = split.train;
    const std::uint64_t louvain_seed = derive_seed(seed, louvain_stream);
    const Analysis ref = analyze(train, cfg, louvain_seed, nullptr);
    auto ref_desc = describe_reference(ref, train, cfg, trial);
    for (const auto& e : ref_desc.errors) push_error("train", e.module, e.code, e.message);
    out.block["reference"] = ref_desc.block;
    for (auto& f : ref_desc.files) out.files.push_back(std::move(f));
    for (const auto& [order, t] : ref.tensors) out.tensors["train"].emplace(order, t);
    if (cfg.modules.marginal) {
      auto rows = marginal_rows(train, train, "train", trial);
      out.marginal_rows.insert(out.marginal_rows.end(), rows.begin(), rows.end());
    }

    std::vector<std::pair<std::string, std::optional<ColumnTable>>> candidates;
    Json loads = Json::object();
    for (const auto& src : in.synthetic) {
      if (src.table) {
        candidates.emplace_back(src.name, src.table);
        continue;
      }
      const std::string path = replace_trial(src.path_template, trial);
      try {
        auto parsed = ingest::load_csv(path, in.schema);
        const std::vector<std::string> keep_names = [&] {
          std::vector<std::string> v;
          for (const auto& c : in.real.schema().columns) v.push_back(c.name);
          return v;
        }();
        std::vector<std::string> drop;
        for (const auto& c : in.schema.columns)
          if (std::find(keep_names.begin(), keep_names.end(), c.name) == keep_names.end()) drop.push_back(c.name);
        loads[src.name] = {{"path", path}, {"rejections", rejection_json(parsed.log)}};
        candidates.emplace_back(src.name, parsed.table.without_columns(drop));
      } catch (const Error& e) {
        push_error(src.name, "ingest", e.code(), e.what());
        candidates.emplace_back(src.name, std::nullopt);
      }
    }
    if (!loads.empty()) out.block["loads"] = loads;
    for (const auto& b : cfg.baselines) {
      if (b == "test") candidates.emplace_back("test", split.test);
      else if (b == "resample") candidates.emplace_back("resample", ingest::resample(train, train.n_rows(), derive_seed(seed, resample_stream)));
      else if (b == "self") candidates.emplace_back("self", train);
      else if (b == "shuffled") candidates.emplace_back("shuffled", ingest::shuffle_columns(train, derive_seed(seed, shuffle_stream)));
    }

    Json datasets = Json::object();
    const probes::PcaModel* pca = ref.pca_model ? &*ref.pca_model : nullptr;
    for (const auto& [name, table] : candidates) {
      if (!table) {
        datasets[name] = {{"status", "failed"}};
        continue;
      }
      const Analysis cand = analyze(*table, cfg, louvain_seed, pca);
      auto res = compare(ref, train, cand, *table, name, trial, cfg, derive_seed(seed, mc_stream));
      for (const auto& e : res.errors) push_error(name, e.module, e.code, e.message);
      datasets[name] = std::move(res.block);
      for (auto& f : res.files) out.files.push_back(std::move(f));
      out.metrics[name] = std::move(res.metrics);
      for (const auto& [order, t] : cand.tensors) out.tensors[name].emplace(order, t);
      if (cfg.modules.marginal) {
        try {
          auto rows = marginal_rows(train, *table, name, trial);
          out.marginal_rows.insert(out.marginal_rows.end(), rows.begin(), rows.end());
        } catch (const Error&) {
          // already recorded by the marginal module
        }
      }
    }
    out.block["datasets"] = datasets;
  } catch (const Error& e) {
    push_error("", "trial", e.code(), e.what());
  }
  out.failed = !errors.empty();
  out.block["status"] = out.failed ? "failed" : "ok";
  out.block["errors"] = errors;
  return out;
}

inline std::string cumulant_csv(const cumulants::CumulantTensor& t) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header;
  for (std::size_t k = 0; k < t.order(); ++k) header.push_back("i" + std::to_string(k + 1));
  header.push_back("multiplicity");
  header.push_back("value");
  rows.push_back(header);
  for (std::size_t r = 0; r < t.unique_count(); ++r) {
    std::vector<std::string> row;
    for (std::size_t k = 0; k < t.order(); ++k) row.push_back(std::to_string(t.index().at(r)[k]));
    row.push_back(std::to_string(t.index().multiplicity(r)));
    row.push_back(csv_number(t.value(r)));
    rows.push_back(std::move(row));
  }
  return csv_text(rows);
}

inline std::string scree_csv(const std::vector<cumulants::ScreeRow>& scree, std::size_t order) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"rank"};
  for (std::size_t k = 0; k < order; ++k) header.push_back("i" + std::to_string(k + 1));
  for (const char* h : {"reference", "mean", "min", "max"}) header.push_back(h);
  rows.push_back(header);
  for (const auto& s : scree) {
    std::vector<std::string> row{std::to_string(s.rank)};
    for (std::size_t k = 0; k < order; ++k) row.push_back(std::to_string(s.index[k]));
    for (double v : {s.reference, s.mean, s.min, s.max}) row.push_back(csv_number(v));
    rows.push_back(std::move(row));
  }
  return csv_text(rows);
}

}  // namespace detail

inline Json run_metadata(const Inputs& in, const RunConfig& cfg) {
  Json md;
  md["tool"] = {{"name", "synthaudit"}, {"version", kToolVersion}};
  md["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"boost", BOOST_LIB_VERSION}};
  md["config"] = to_json(cfg);
  Json seeds = Json::array();
  for (std::size_t t = 0; t < cfg.trials; ++t) seeds.push_back(derive_seed(cfg.master_seed, t));
  md["trial_seeds"] = seeds;
  std::vector<std::string> kept;
  for (const auto& c : in.real.schema().columns) kept.push_back(c.name);
  std::vector<std::string> dropped;
  for (const auto& c : in.schema.columns)
    if (std::find(kept.begin(), kept.end(), c.name) == kept.end()) dropped.push_back(c.name);
  md["columns"] = {{"input", in.schema.size()}, {"analysed", kept.size()}, {"names", kept}, {"dropped", dropped}};
  md["n_rows_real"] = in.real.n_rows();
  if (in.real_log) md["real_rejections"] = detail::rejection_json(*in.real_log);
  Json synth = Json::object();
  for (const auto& s : in.synthetic) {
    Json e{{"per_trial", !s.table}};
    if (s.log) e["rejections"] = detail::rejection_json(*s.log);
    if (s.table) e["n_rows"] = s.table->n_rows();
    synth[s.name] = e;
  }
  md["synthetic"] = synth;
  md["supplementary_metrics"] = {"max_tvd", "smse_standardization", "det_partial", "logit_overlap_jaccard",
                             "pca_overlap_jaccard"};
  md["method_notes"] = {{"community_objective", "cpm_within_louvain"},
                        {"cpm_weights", "absolute"},
                        {"effect_size_df", dependence::to_string(cfg.effect_size_df)},
                        {"continuous_binning", "quantile"},
                        {"glasso_input", "nearest_psd(association_matrix)"},
                        {"cumulant_estimator", "central, 1/n moments"},
                        {"significance_rule", "outside mean +/- n_sd * sd over expanded entries"},
                        {"smse_denominator", "variance of reference expanded entries"},
                        {"median_rule", "lower_middle"},
                        {"trial_semantics", "re-split and re-evaluate per trial"}};
  return md;
}

/// Runs every trial on already-loaded inputs. `in.real` must already have
/// its pruned columns removed; synthetic tables must share its columns.
inline EvaluationReport evaluate(const Inputs& in, const RunConfig& cfg) {
  validate_parameters(cfg);
  EvaluationReport rep;
  rep.json["schema_version"] = kSchemaVersion;
  rep.json["metadata"] = run_metadata(in, cfg);
  if (!cfg.modules.any()) return rep;

  rep.n_trials = cfg.trials;
  std::vector<detail::TrialOutput> outputs(cfg.trials);
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads ? cfg.threads : std::thread::hardware_concurrency(), cfg.trials));
  if (workers == 1) {
    for (std::size_t t = 0; t < cfg.trials; ++t) outputs[t] = detail::run_trial(in, cfg, t);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < cfg.trials; t += workers) outputs[t] = detail::run_trial(in, cfg, t);
      });
    for (auto& th : pool) th.join();
  }

  Json trials = Json::array();
  std::vector<std::vector<std::string>> marginal_rows;
  std::vector<std::string> dataset_order;
  std::map<std::string, std::vector<std::pair<std::string, std::vector<double>>>> collected;
  std::map<std::string, std::size_t> not_applicable;
  for (auto& o : outputs) {
    rep.n_failed += o.failed;
    trials.push_back(std::move(o.block));
    for (auto& f : o.files) rep.files.push_back(std::move(f));
    marginal_rows.insert(marginal_rows.end(), o.marginal_rows.begin(), o.marginal_rows.end());
  }
  for (const auto& src : in.synthetic) dataset_order.push_back(src.name);
  for (const auto& b : cfg.baselines) dataset_order.push_back(b);

  Json aggregates = Json::object();
  for (const auto& name : dataset_order) {
    std::vector<std::string> metric_order;
    std::map<std::string, std::vector<double>> values;
    std::map<std::string, std::size_t> missing;
    for (const auto& o : outputs) {
      auto it = o.metrics.find(name);
      if (it == o.metrics.end()) continue;
      for (const auto& [metric, v] : it->second) {
        if (!values.count(metric) && !missing.count(metric)) metric_order.push_back(metric);
        if (v && std::isfinite(*v)) values[metric].push_back(*v);
        else ++missing[metric];
      }
    }
    Json block = Json::object();
    for (const auto& metric : metric_order) {
      Json a{{"n", values[metric].size()}, {"n_missing", missing[metric]}};
      if (!values[metric].empty()) {
        const auto g = aggregate(values[metric]);
        a["min"] = g.min;
        a["median"] = g.median;
        a["max"] = g.max;
      } else {
        a["min"] = nullptr;
        a["median"] = nullptr;
        a["max"] = nullptr;
      }
      block[metric] = a;
    }
    if (block.contains("worst_ks") && !values["worst_ks"].empty())
      block["best_trial_ks"] = marginal::best_trial_ks(values["worst_ks"]);
    aggregates[name] = block;
  }

  // Cumulant payloads: first available tensor per dataset and order, plus
  // scree data against the first trial's reference tensor.
  if (cfg.modules.cumulants) {
    const detail::TrialOutput* first_ref = nullptr;
    for (const auto& o : outputs)
      if (o.tensors.count("train")) {
        first_ref = &o;
        break;
      }
    std::vector<std::string> all_names{"train"};
    all_names.insert(all_names.end(), dataset_order.begin(), dataset_order.end());
    for (const auto& name : all_names) {
      for (auto order : cfg.cumulant_orders) {
        std::vector<cumulants::CumulantTensor> per_trial;
        for (const auto& o : outputs) {
          auto it = o.tensors.find(name);
          if (it != o.tensors.end() && it->second.count(order)) per_trial.push_back(it->second.at(order));
        }
        if (per_trial.empty()) continue;
        const std::string suffix = name + "_" + std::to_string(order) + ".csv";
        rep.files.push_back({"cumulants_" + suffix, detail::cumulant_csv(per_trial.front())});
        if (first_ref && name != "train") {
          const auto& reference = first_ref->tensors.at("train").at(order);
          rep.files.push_back({"scree_" + suffix, detail::scree_csv(cumulants::scree_data(per_trial, reference, cfg.scree_k), order)});
        }
      }
    }
  }
  if (cfg.modules.marginal) {
    std::vector<std::string> header{"dataset", "trial", "column", "kind", "ks", "tvd", "mean", "sd"};
    for (double q : marginal::kSummaryQuantiles) header.push_back("q" + format_number(q * 100));
    marginal_rows.insert(marginal_rows.begin(), header);
    rep.files.push_back({"marginals.csv", detail::csv_text(marginal_rows)});
  }
  std::sort(rep.files.begin(), rep.files.end(), [](const auto& a, const auto& b) { return a.name < b.name; });

  rep.json["summary"] = {{"trials", cfg.trials}, {"failed_trials", rep.n_failed}};
  rep.json["trials"] = std::move(trials);
  rep.json["aggregates"] = std::move(aggregates);
  return rep;
}

/// Drops the schema drop list and co-linear columns from the real table.
inline ColumnTable prune(const ColumnTable& real, const RunConfig& cfg) {
  auto pruned = ingest::drop_colinear(real, cfg.colinear_threshold, cfg.n_bins);
  return pruned.table;
}

/// In-memory entry point: tables parsed under a common schema.
inline EvaluationReport evaluate_tables(const RunConfig& cfg, const ColumnTable& real,
                                        const std::vector<std::pair<std::string, ColumnTable>>& synthetic) {
  Inputs in;
  in.schema = real.schema();
  in.real = prune(real, cfg);
  std::vector<std::string> drop;
  for (const auto& c : in.schema.columns)
    if (!in.real.schema().index_of(c.name)) drop.push_back(c.name);
  for (const auto& [name, table] : synthetic) {
    require(table.schema().columns == real.schema().columns, ErrorCode::schema_mismatch,
            "dataset '" + name + "' does not share the real schema");
    in.synthetic.push_back({name, table.without_columns(drop), std::nullopt, ""});
  }
  return evaluate(in, cfg);
}

/// File-based entry point: loads the schema, real data and every synthetic
/// path named in the config.
inline EvaluationReport run_evaluation(const RunConfig& cfg) {
  validate_parameters(cfg);
  require(!cfg.schema_path.empty() && !cfg.real_path.empty(), ErrorCode::invalid_input,
          "real_path and schema_path are required");
  Inputs in;
  in.schema = ingest::load_schema(cfg.schema_path);
  auto real = ingest::load_csv(cfg.real_path, in.schema);
  in.real = prune(real.table, cfg);
  in.real_log = real.log;
  std::vector<std::string> drop;
  for (const auto& c : in.schema.columns)
    if (!in.real.schema().index_of(c.name)) drop.push_back(c.name);
  for (const auto& [name, path] : cfg.synthetic_paths) {
    CandidateSource src{name, std::nullopt, std::nullopt, path};
    if (path.find("{trial}") == std::string::npos) {
      auto parsed = ingest::load_csv(path, in.schema);
      src.table = parsed.table.without_columns(drop);
      src.log = parsed.log;
    }
    in.synthetic.push_back(std::move(src));
  }
  return evaluate(in, cfg);
}

/// Writes report.json, every payload and manifest.json (digests of all other
/// files, sorted by name).
inline std::vector<ManifestEntry> emit(const EvaluationReport& rep, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require(!ec, ErrorCode::io, "cannot create output directory '" + out_dir + "': " + ec.message());
  std::vector<Payload> files = rep.files;
  files.push_back({"report.json", json_text(rep.json)});
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  std::vector<ManifestEntry> manifest;
  auto write = [&](const std::string& name, const std::string& content) {
    const fs::path path = fs::path(out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::io, "cannot write '" + path.string() + "'");
    out << content;
    out.close();
    require(static_cast<bool>(out), ErrorCode::io, "write failed for '" + path.string() + "'");
  };
  Json entries = Json::array();
  for (const auto& f : files) {
    write(f.name, f.content);
    manifest.push_back({f.name, f.content.size(), sha256_hex(f.content)});
    entries.push_back({{"name", f.name}, {"bytes", f.content.size()}, {"sha256", manifest.back().sha256}});
  }
  write("manifest.json", json_text(Json{{"files", entries}}));
  return manifest;
}

}  // namespace synthaudit::report
