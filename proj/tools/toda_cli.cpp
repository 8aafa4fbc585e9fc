#include <iostream>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "toda/pipelines.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Toda reduction toolkit: solve, classify, diagnose, degenerate, dehn, plot-data"};
  std::string config_path, out = "out";
  int threads = 0;
  bool strict = false;
  int table = -1;
  app.add_option("--config", config_path, "configuration file (key = value with [sections])");
  app.add_option("--out", out, "output directory")->capture_default_str();
  app.add_option("--threads", threads, "OpenMP threads (0 keeps the runtime default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--strict", strict, "failed invariant checks exit with code 4");
  app.require_subcommand(1);

  const char* names[][2] = {{"solve", "solve a boundary value problem and assemble the metric"},
                            {"classify", "maximal intervals of the model families"},
                            {"diagnose", "energy trace and stability ladder"},
                            {"degenerate", "degeneration family and pointed limits"},
                            {"dehn", "black hole matching and glued defect ladder"},
                            {"plot-data", "long-format plot tables from an artifact directory"}};
  for (auto& n : names) {
    auto* sub = app.add_subcommand(n[0], n[1]);
    sub->fallthrough();
    if (std::string(n[0]) == "classify")
      sub->add_option("--table", table, "1 or 2: regenerate the table over the parameter lattice");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc == 0) return 0;
    const std::string cmd = app.get_subcommands().empty() ? "" : app.get_subcommands()[0]->get_name();
    return toda::write_failure_report(cmd, out, toda::ErrorCode::Config, e.what());
  }
  const std::string command = app.get_subcommands()[0]->get_name();
  if (threads > 0) omp_set_num_threads(threads);

  toda::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = toda::RunConfig::load(config_path);
    if (table >= 0) cfg.set("classify.table", std::to_string(table));
  } catch (const toda::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return toda::write_failure_report(command, out, e.code(), e.what());
  }
  const int rc = toda::run(command, cfg, {out, strict});
  if (rc != 0) std::cerr << "error: see " << out << "/report.json (exit " << rc << ")\n";
  return rc;
}
