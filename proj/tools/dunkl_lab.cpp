// Batch runner for the experiment suites. Talks to the library only through the C interface.
#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "dunkl/dunkl_c.h"

namespace {

int report_error(int status, const std::string& context) {
  std::fprintf(stderr, "dunkl-lab: %s: %s: %s\n", context.c_str(), dunkl_status_name(status), dunkl_last_error());
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Property-based experiments for Dunkl-setting commutators"};
  app.require_subcommand(1, 1);

  std::string config_path, out_dir;
  int jobs = 1;
  uint64_t seed = 0;
  std::vector<CLI::Option*> seed_opts;

  std::vector<std::string> names;
  for (size_t i = 0; i < dunkl_suite_count(); ++i) names.emplace_back(dunkl_suite_name(i));
  names.emplace_back("all");
  for (const auto& n : names) {
    CLI::App* sub = app.add_subcommand(n, n == "all" ? "run every suite in order" : "run the " + n + " suite");
    sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (default: the config's output_dir)");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    seed_opts.push_back(sub->add_option("--seed", seed, "override the config seed"));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : DUNKL_INVALID_ARGUMENT;
  }
  const std::string suite = app.get_subcommands().front()->get_name();

  dunkl_config* cfg = nullptr;
  if (int rc = dunkl_config_load(config_path.c_str(), &cfg); rc != DUNKL_OK) return report_error(rc, config_path);
  if (out_dir.empty()) out_dir = dunkl_config_output_dir(cfg);
  bool seeded = false;
  for (const CLI::Option* o : seed_opts) seeded = seeded || o->count() > 0;
  const uint64_t s = seeded ? seed : dunkl_config_seed(cfg);

  dunkl_run* run = nullptr;
  const int rc = dunkl_run_suite(cfg, suite.c_str(), jobs, s, &run);
  dunkl_config_free(cfg);
  if (rc != DUNKL_OK) return report_error(rc, suite);

  size_t failed = 0;
  for (size_t i = 0; i < dunkl_run_gate_count(run); ++i) {
    const char *sname = nullptr, *gname = nullptr;
    int pass = 0;
    double value = 0.0, threshold = 0.0;
    dunkl_run_gate(run, i, &sname, &gname, &pass, &value, &threshold);
    if (!pass) ++failed;
    std::printf("%-4s %-18s %s (%.6g)\n", pass ? "ok" : "FAIL", sname, gname, value);
  }
  if (int w = dunkl_run_write(run, out_dir.c_str()); w != DUNKL_OK) {
    dunkl_run_free(run);
    return report_error(w, out_dir);
  }
  const bool passed = dunkl_run_passed(run);
  std::printf("%zu gates, %zu failed; reports in %s\n", dunkl_run_gate_count(run), failed, out_dir.c_str());
  dunkl_run_free(run);
  return passed ? DUNKL_OK : DUNKL_GATE_FAILED;
}
