// Acceptance run: executes `dunkl-lab all` twice on the shipped config and prints one PASS/FAIL line per criterion.
// usage: acceptance <dunkl-lab> <config> <scratch dir>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Criterion {
  int id;
  std::string what;
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& exe, const std::string& config, const fs::path& out) {
  fs::remove_all(out);
  const std::string cmd = "\"" + exe + "\" all --config \"" + config + "\" --out \"" + out.string() + "\" > \"" +
                          (out.string() + ".log") + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const json* suite(const json& summary, const std::string& name) {
  for (const auto& s : summary["suites"])
    if (s["suite"] == name) return &s;
  return nullptr;
}

// gates of a suite selected by a name predicate; returns the failing gate names
template <class Pred>
std::vector<std::string> failing(const json& s, Pred&& keep, int& counted) {
  std::vector<std::string> bad;
  counted = 0;
  for (const auto& g : s["gates"]) {
    const std::string n = g["name"];
    if (!keep(n)) continue;
    ++counted;
    if (!g["pass"].get<bool>()) bad.push_back(n + " = " + (g["value"].is_null() ? "inf" : g["value"].dump()));
  }
  return bad;
}

bool is_sharp(const std::string& n) { return n.rfind("partition identity", 0) == 0 || n.rfind("sharp maximal", 0) == 0; }

Criterion grade(int id, const std::string& what, const json& summary, const std::string& name, double limit,
                bool (*keep)(const std::string&), double seconds_override = -1.0) {
  Criterion c{id, what};
  const json* s = suite(summary, name);
  if (!s) {
    c.detail = "suite " + name + " missing from summary";
    return c;
  }
  int counted = 0;
  const auto bad = failing(*s, keep, counted);
  const double secs = seconds_override >= 0.0 ? seconds_override : (*s)["seconds"].get<double>();
  std::ostringstream d;
  d << counted << " gates, " << bad.size() << " failed, " << secs << " s (limit " << limit << " s)";
  for (const auto& b : bad) d << "; " << b;
  c.detail = d.str();
  c.pass = counted > 0 && bad.empty() && secs < limit;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: acceptance <dunkl-lab> <config> <scratch dir>\n";
    return 2;
  }
  const std::string exe = argv[1], config = argv[2];
  const fs::path scratch = argv[3];
  fs::create_directories(scratch);
  const fs::path a = scratch / "run-a", b = scratch / "run-b";

  const int rc_a = run_cli(exe, config, a);
  const int rc_b = run_cli(exe, config, b);
  if (!fs::exists(a / "summary.json")) {
    std::cerr << "first run produced no summary (exit " << rc_a << "):\n" << slurp(a.string() + ".log");
    return 2;
  }
  const json summary = json::parse(slurp(a / "summary.json"));
  auto all = [](const std::string&) { return true; };
  auto not_sharp = [](const std::string& n) { return !is_sharp(n); };

  const json* cn = suite(summary, "commutator-norm");
  const double sharp_secs = cn ? (*cn)["measured"].value("sharp_seconds", 0.0) : 0.0;
  const double norm_secs = cn ? (*cn)["seconds"].get<double>() - sharp_secs : 0.0;

  std::vector<Criterion> out;
  out.push_back(grade(1, "geometry suite", summary, "validate-geometry", 5, all));
  out.push_back(grade(2, "measure suite", summary, "validate-measure", 30, all));
  out.push_back(grade(3, "spectral suite", summary, "validate-spectral", 120, all));
  out.push_back(grade(4, "kernel suite", summary, "verify-kernel", 180, all));
  out.push_back(grade(5, "commutator norm harness", summary, "commutator-norm", 600, not_sharp, norm_secs));
  out.push_back(grade(6, "tail decay and tail bounds", summary, "tail-decay", 300, all));
  out.push_back(grade(7, "compactness probes", summary, "compactness", 600, all));
  out.push_back(grade(8, "sharp maximal diagnostic", summary, "commutator-norm", 300, is_sharp, sharp_secs));

  Criterion det{9, "determinism of all"};
  std::vector<std::string> diffs;
  int csvs = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    ++csvs;
    const fs::path other = b / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) diffs.push_back(e.path().filename().string());
  }
  for (const auto& e : fs::directory_iterator(b))
    if (e.path().extension() == ".csv" && !fs::exists(a / e.path().filename()))
      diffs.push_back(e.path().filename().string());
  det.pass = csvs > 0 && diffs.empty() && rc_a == rc_b;
  det.detail = std::to_string(csvs) + " CSV files compared, exit codes " + std::to_string(rc_a) + "/" +
               std::to_string(rc_b);
  for (const auto& d : diffs) det.detail += "; differs: " + d;
  out.push_back(det);

  bool every = true;
  for (const auto& c : out) {
    std::printf("%s criterion %d (%s): %s\n", c.pass ? "PASS" : "FAIL", c.id, c.what.c_str(), c.detail.c_str());
    every = every && c.pass;
  }
  // the runner's own verdict must agree with the gates
  const bool summary_pass = summary["pass"].get<bool>();
  if ((rc_a == 0) != summary_pass) {
    std::printf("FAIL exit status %d disagrees with summary pass=%d\n", rc_a, summary_pass);
    every = false;
  }
  return every ? 0 : 1;
}
