// Acceptance suite: one line per criterion 1-13 for the default configuration.
//
// Criteria 1-12 come from one `all` run; criterion 13 repeats the run in a fresh
// context and compares every CSV byte for byte. Checks listed by
// known_unattainable() are reported as failures but do not fail the process
// unless --strict is given.

#include <cstdio>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "landau/error.hpp"
#include "landau/lab.hpp"

namespace {

using namespace landau;

const char* kTitles[] = {"",
                         "null spaces",
                         "microscopic cancellation L_BA E_D = 0",
                         "sigma structure",
                         "coercivity split",
                         "conservation",
                         "dispersion",
                         "cancellation orders",
                         "spectral gaps",
                         "decay exponents",
                         "h split consistency",
                         "Picard telescoping",
                         "smoothing probe",
                         "determinism"};

std::map<std::string, std::string> csv_digests(const fs::path& root)
{
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".csv")
      out[fs::relative(e.path(), root).generic_string()] = sha256_file(e.path());
  return out;
}

CommandResult run_all(const RunConfig& cfg, int threads, const fs::path& dir)
{
  fs::remove_all(dir);
  Lab lab(cfg, threads);
  return run_command(lab, "all", CommandOptions{}, dir);
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Acceptance criteria 1-13"};
  std::string out = "acceptance_out";
  std::string config_path;
  int threads = 1;
  bool strict = false, verbose = false;
  app.add_option("--out", out, "scratch directory for the two runs");
  app.add_option("--config", config_path, "configuration (defaults when omitted)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
  app.add_flag("--strict", strict, "fail on known-unattainable checks too");
  app.add_flag("--verbose", verbose, "print every failing sub-check");
  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = config_path.empty() ? validate_config("{}") : load_config(config_path);
    const fs::path root(out);
    const fs::path first = root / "run1", second = root / "run2";
    const CommandResult r1 = run_all(cfg, threads, first);
    const CommandResult r2 = run_all(cfg, threads, second);

    const auto crit = by_criterion(r1.checks);
    bool process_ok = true;
    for (int n = 1; n <= 12; ++n) {
      auto it = crit.find(n);
      std::vector<CheckRecord> recs = it == crit.end() ? std::vector<CheckRecord>{} : it->second;
      std::vector<std::string> failed, excused;
      for (const auto& r : recs)
        if (!r.pass) (is_known_unattainable(r.id) ? excused : failed).push_back(r.id);
      const bool pass = !recs.empty() && failed.empty() && excused.empty();
      std::string detail = std::to_string(recs.size()) + " checks";
      if (recs.empty()) detail = "no checks ran";
      if (!failed.empty()) {
        detail += "; failed:";
        for (const auto& id : failed) detail += " " + id;
      }
      if (!excused.empty()) {
        detail += "; known-unattainable:";
        for (const auto& id : excused) detail += " " + id;
      }
      std::printf("criterion %2d %-4s %s (%s)\n", n, pass ? "PASS" : "FAIL", kTitles[n], detail.c_str());
      if (recs.empty() || !failed.empty() || (strict && !excused.empty())) process_ok = false;
      if (verbose)
        for (const auto& r : recs)
          if (!r.pass)
            std::printf("    %s: value %.6g, target %s %s\n", r.id.c_str(), r.value, r.target.c_str(),
                        r.note.c_str());
    }

    const auto d1 = csv_digests(first), d2 = csv_digests(second);
    std::vector<std::string> differ;
    for (const auto& [name, h] : d1) {
      auto it = d2.find(name);
      if (it == d2.end() || it->second != h) differ.push_back(name);
    }
    for (const auto& [name, h] : d2)
      if (!d1.count(name)) differ.push_back(name);
    const bool det = differ.empty() && !d1.empty();
    std::string detail = std::to_string(d1.size()) + " CSV files compared";
    for (const auto& n : differ) detail += "; differs: " + n;
    std::printf("criterion 13 %-4s %s (%s)\n", det ? "PASS" : "FAIL", kTitles[13], detail.c_str());
    if (!det) process_ok = false;
    (void)r2;
    return process_ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 1;
  }
}
