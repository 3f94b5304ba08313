#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "synthaudit/synthaudit.hpp"

namespace {

using namespace synthaudit;

enum Exit : int { ok = 0, usage = 1, all_failed = 2, io = 3 };

int exit_code_for(const Error& e) {
  return e.code() == ErrorCode::io || e.code() == ErrorCode::empty_dataset ? Exit::io : Exit::usage;
}

void print_log(const std::string& path, const ingest::RejectionLog& log) {
  std::cout << path << ": read " << log.n_input << ", kept " << log.n_remaining << ", dropped " << log.n_dropped << '\n';
  for (auto r : ingest::kAllReasons)
    if (log.count(r)) std::cout << "  " << ingest::to_string(r) << ": " << log.count(r) << '\n';
  for (const auto& rej : log.rejected) std::cout << "  record " << rej.record << ": " << ingest::to_string(rej.reason) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthaudit: direct fidelity audit of synthetic tabular data"};
  app.require_subcommand(1);

  auto* evaluate = app.add_subcommand("evaluate", "run the multi-trial evaluation and write the report");
  std::string real, synthetic, schema, out, config, modules;
  std::size_t trials = 0, threads = 0;
  std::uint64_t seed = 0;
  evaluate->add_option("--real", real, "real dataset CSV");
  evaluate->add_option("--synthetic", synthetic, "NAME=PATH[,NAME=PATH...]; PATH may contain {trial}");
  evaluate->add_option("--schema", schema, "schema file");
  evaluate->add_option("--out", out, "output directory")->required();
  evaluate->add_option("--trials", trials, "number of trials");
  evaluate->add_option("--seed", seed, "master seed");
  evaluate->add_option("--config", config, "key = value config file");
  evaluate->add_option("--modules", modules, "comma-separated module list, 'all' or 'none'");
  evaluate->add_option("--threads", threads, "worker threads for trials (0 = hardware)");

  auto* validate = app.add_subcommand("validate", "parse and clean a CSV, printing the rejection log");
  std::string validate_schema, validate_input;
  validate->add_option("--schema", validate_schema, "schema file")->required();
  validate->add_option("input", validate_input, "CSV file")->required();

  auto* dump = app.add_subcommand("cumulants", "print the joint cumulant tensor of a CSV");
  std::string dump_schema, dump_input;
  std::size_t order = 3;
  bool include_target = false;
  dump->add_option("--order", order, "cumulant order (2-4)")->required();
  dump->add_option("--schema", dump_schema, "schema file")->required();
  dump->add_option("input", dump_input, "CSV file")->required();
  dump->add_flag("--include-target", include_target, "keep the target column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? Exit::ok : Exit::usage;
  }

  try {
    if (*evaluate) {
      report::RunConfig cfg;
      if (!config.empty()) cfg = report::load_config(config, cfg);
      if (!real.empty()) cfg.real_path = real;
      if (!schema.empty()) cfg.schema_path = schema;
      if (!synthetic.empty()) cfg.synthetic_paths = report::parse_named_paths(synthetic);
      if (evaluate->count("--trials")) cfg.trials = trials;
      if (evaluate->count("--seed")) cfg.master_seed = seed;
      if (evaluate->count("--modules")) cfg.modules = report::ModuleSet::parse(modules);
      if (evaluate->count("--threads")) cfg.threads = threads;
      const auto rep = report::run_evaluation(cfg);
      const auto manifest = report::emit(rep, out);
      std::cout << "wrote " << manifest.size() << " files to " << out << "; " << rep.n_failed << " of " << rep.n_trials
                << " trials failed\n";
      return rep.all_failed() ? Exit::all_failed : Exit::ok;
    }
    if (*validate) {
      const auto parsed = ingest::load_csv(validate_input, ingest::load_schema(validate_schema));
      print_log(validate_input, parsed.log);
      return Exit::ok;
    }
    const auto parsed = ingest::load_csv(dump_input, ingest::load_schema(dump_schema));
    std::vector<std::string> names;
    const cumulants::MomentCache cache(report::numeric_matrix(parsed.table, include_target, &names));
    const auto tensor = cumulants::cumulant_tensor(cache, order);
    std::cout << "# columns:";
    for (std::size_t j = 0; j < names.size(); ++j) std::cout << ' ' << j << '=' << names[j];
    std::cout << '\n' << report::detail::cumulant_csv(tensor);
    return Exit::ok;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}
