#include "dunkl/dunkl_c.h"

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "dunkl/suites.hpp"

using json = nlohmann::json;

struct dunkl_config {
  dunkl::ExperimentConfig cfg;
  std::string output_dir;
};

struct dunkl_run {
  json config;
  uint64_t seed = 0;
  std::vector<dunkl::SuiteReport> reports;
  std::vector<std::string> suite_of_gate;  // flattened gate index -> suite name
  std::vector<const dunkl::Gate*> gates;
  std::string summary;
};

namespace {

thread_local std::string last_error;

// every entry point funnels exceptions into a status code and the thread's last error
template <class F>
int guarded(F&& body) {
  last_error.clear();
  try {
    return body();
  } catch (const dunkl::Error& e) {
    last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const json::exception& e) {
    last_error = e.what();
    return DUNKL_CONFIG;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DUNKL_CAP_EXCEEDED;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DUNKL_INTERNAL;
  }
}

int null_arg(const char* what) {
  last_error = std::string(what) + " must not be null";
  return DUNKL_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* dunkl_last_error(void) { return last_error.c_str(); }

const char* dunkl_status_name(int status) {
  switch (status) {
    case DUNKL_OK: return "ok";
    case DUNKL_GATE_FAILED: return "gate failed";
    case DUNKL_INVALID_ARGUMENT: return "invalid argument";
    case DUNKL_PRECONDITION: return "precondition violated";
    case DUNKL_UNSUPPORTED: return "unsupported";
    case DUNKL_CAP_EXCEEDED: return "resource cap exceeded";
    case DUNKL_NOT_CONVERGED: return "not converged";
    case DUNKL_CONFIG: return "malformed config";
    case DUNKL_UNRESOLVED_NAME: return "unresolved name";
    case DUNKL_IO: return "i/o error";
    case DUNKL_NUMERIC: return "numeric failure";
    default: return "internal error";
  }
}

int dunkl_config_load(const char* path, dunkl_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<dunkl_config>();
    c->cfg = dunkl::load_config(path);
    c->output_dir = c->cfg.output_dir;
    *out = c.release();
    return DUNKL_OK;
  });
}

int dunkl_config_parse(const char* json_text, dunkl_config** out) {
  if (!json_text) return null_arg("json_text");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    json j;
    try {
      j = json::parse(json_text);
    } catch (const json::exception& e) {
      dunkl::fail(dunkl::ErrorCode::config, std::string("malformed config: ") + e.what());
    }
    auto c = std::make_unique<dunkl_config>();
    c->cfg = dunkl::parse_config(j);
    c->output_dir = c->cfg.output_dir;
    *out = c.release();
    return DUNKL_OK;
  });
}

dunkl_config* dunkl_config_default(void) {
  auto* c = new dunkl_config;
  c->output_dir = c->cfg.output_dir;
  return c;
}

void dunkl_config_free(dunkl_config* cfg) { delete cfg; }

uint64_t dunkl_config_seed(const dunkl_config* cfg) { return cfg ? cfg->cfg.seed : 0; }

const char* dunkl_config_output_dir(const dunkl_config* cfg) { return cfg ? cfg->output_dir.c_str() : ""; }

size_t dunkl_suite_count(void) { return dunkl::suite_names().size(); }

const char* dunkl_suite_name(size_t i) {
  const auto& n = dunkl::suite_names();
  return i < n.size() ? n[i].c_str() : nullptr;
}

int dunkl_run_suite(const dunkl_config* cfg, const char* suite, int jobs, uint64_t seed, dunkl_run** out) {
  if (!cfg) return null_arg("cfg");
  if (!suite) return null_arg("suite");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    std::vector<std::string> names;
    if (std::string(suite) == "all")
      names = dunkl::suite_names();
    else
      names.push_back(suite);
    auto run = std::make_unique<dunkl_run>();
    dunkl::ExperimentConfig c = cfg->cfg;
    c.seed = seed;
    run->config = dunkl::config_to_json(c);
    run->seed = seed;
    for (const auto& n : names) run->reports.push_back(dunkl::run_suite(n, c, jobs, seed));

    json suites = json::array();
    bool pass = true;
    for (const auto& r : run->reports) {
      for (const auto& g : r.gates) {
        run->suite_of_gate.push_back(r.suite);
        run->gates.push_back(&g);
      }
      pass = pass && r.pass();
      suites.push_back(dunkl::report_to_json(r));
    }
    const json summary = {{"schema", dunkl::kConfigSchema}, {"subcommand", suite}, {"seed", seed},
                          {"pass", pass},                   {"config", run->config}, {"suites", suites}};
    run->summary = summary.dump(2);
    *out = run.release();
    return DUNKL_OK;
  });
}

void dunkl_run_free(dunkl_run* run) { delete run; }

int dunkl_run_passed(const dunkl_run* run) {
  if (!run) return 0;
  for (const auto& r : run->reports)
    if (!r.pass()) return 0;
  return 1;
}

size_t dunkl_run_gate_count(const dunkl_run* run) { return run ? run->gates.size() : 0; }

int dunkl_run_gate(const dunkl_run* run, size_t i, const char** suite, const char** name, int* pass, double* value,
                   double* threshold) {
  if (!run) return null_arg("run");
  if (i >= run->gates.size()) {
    last_error = "gate index out of range";
    return DUNKL_INVALID_ARGUMENT;
  }
  last_error.clear();
  const dunkl::Gate& g = *run->gates[i];
  if (suite) *suite = run->suite_of_gate[i].c_str();
  if (name) *name = g.name.c_str();
  if (pass) *pass = g.pass ? 1 : 0;
  if (value) *value = g.value;
  if (threshold) *threshold = g.threshold;
  return DUNKL_OK;
}

int dunkl_run_write(const dunkl_run* run, const char* dir) {
  if (!run) return null_arg("run");
  if (!dir) return null_arg("dir");
  return guarded([&] {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) dunkl::fail(dunkl::ErrorCode::io, "cannot create '" + std::string(dir) + "': " + ec.message());
    auto write = [&](const std::string& name, const std::string& text) {
      const fs::path p = fs::path(dir) / name;
      std::ofstream os(p, std::ios::binary);
      os << text;
      if (!os) dunkl::fail(dunkl::ErrorCode::io, "cannot write '" + p.string() + "'");
    };
    for (const auto& r : run->reports)
      for (const auto& [name, text] : r.files) write(name, text);
    write("summary.json", run->summary + "\n");
    return DUNKL_OK;
  });
}

const char* dunkl_run_summary_json(const dunkl_run* run) { return run ? run->summary.c_str() : ""; }

}  // extern "C"
