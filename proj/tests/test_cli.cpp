// Exit-status contract of the command-line runner. usage: test_cli <dunkl-lab> <scratch dir>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void expect(const std::string& what, int got, int want) {
  if (got != want) {
    ++failures;
    std::cerr << "FAIL " << what << ": exit " << got << ", expected " << want << "\n";
  }
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: test_cli <dunkl-lab> <scratch dir>\n";
    return 2;
  }
  const std::string exe = std::string("\"") + argv[1] + "\"";
  const fs::path dir = argv[2];
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto lab = [&](const std::string& args) { return run(exe + " " + args); };
  auto cfg = [&](const std::string& name, const std::string& text) {
    return "--config " + write(dir, name, text).string() + " --out " + (dir / "out").string();
  };

  expect("no subcommand", lab(""), 2);
  expect("unknown subcommand", lab("frobnicate --config x"), 2);
  expect("missing config file", lab("bmo --config " + (dir / "absent.json").string()), 2);
  expect("malformed json", lab("bmo " + cfg("bad.json", "{\"schema\": ")), 7);
  expect("unknown key", lab("bmo " + cfg("key.json", R"({"schema": "dunkl-lab/1", "bmo": {"rounds": 1, "round": 2}})")), 7);
  expect("unknown kernel", lab("verify-kernel " + cfg("kern.json", R"({"schema": "dunkl-lab/1", "kernel": {"kernel": "nope"}})")), 8);
  expect("zero jobs", lab("bmo " + cfg("jobs.json", R"({"schema": "dunkl-lab/1"})") + " --jobs 0"), 2);

  // a passing suite exits 0 and leaves its reports behind
  expect("geometry passes", lab("validate-geometry " + cfg("ok.json", R"({"schema": "dunkl-lab/1"})") + " --seed 9"), 0);
  if (!fs::exists(dir / "out" / "geometry.csv") || !fs::exists(dir / "out" / "summary.json")) {
    ++failures;
    std::cerr << "FAIL geometry reports missing\n";
  }

  // a gate that cannot pass exits 1
  expect("failing gate", lab("validate-measure " + cfg("tight.json", R"({"schema": "dunkl-lab/1", "measure": {"systems": [{"name": "rank1", "k": [1]}], "scaling_samples": 2, "growth_samples": 2, "resolution": 8, "closed_form_tolerance": 1e-300}})")), 1);

  if (failures == 0) std::puts("cli exit codes ok");
  return failures == 0 ? 0 : 1;
}
