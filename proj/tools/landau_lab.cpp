// Command-line driver: landau_lab <command> [options]

#include <cstdio>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "landau/error.hpp"
#include "landau/lab.hpp"

namespace {

constexpr int kUsage = 2;
constexpr int kFailed = 1;

void print_checks(const std::vector<landau::CheckRecord>& checks)
{
  std::size_t width = 0;
  for (const auto& r : checks) width = std::max(width, r.id.size());
  for (const auto& r : checks) {
    std::printf("%-4s %-*s %-12.6g %s%s%s\n", r.pass ? "ok" : "FAIL", int(width), r.id.c_str(),
                r.value, r.target.c_str(), r.note.empty() ? "" : "  # ", r.note.c_str());
  }
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Two-species linearized Landau operator: Galerkin spectra and decay experiments"};
  std::string command, config_path, out_dir, window, component, pair;
  int threads = 1, k = 0, l = 0;
  std::uint64_t seed = 0;

  std::string names;
  for (const auto& n : landau::command_names()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("command", command, "one of: " + names)->required();
  app.add_option("--config", config_path, "JSON configuration (defaults when omitted)");
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--threads", threads, "worker threads for eta sweeps")->check(CLI::Range(1, 256));
  auto* seed_opt = app.add_option("--seed", seed, "seed of the random property samples");
  auto* k_opt = app.add_option("--k", k, "x-derivative order (decay)");
  auto* l_opt = app.add_option("--l", l, "p-derivative order (decay)");
  auto* comp_opt = app.add_option("--component", component, "wave component (decay)");
  auto* pair_opt = app.add_option("--pair", pair, "species pair AB or BB");
  auto* win_opt = app.add_option("--window", window, "fit window t1:t2 (decay)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsage;
  }

  try {
    landau::RunConfig cfg = config_path.empty() ? landau::validate_config("{}")
                                                : landau::load_config(config_path);
    if (*seed_opt) cfg.seed = seed;
    if (!out_dir.empty()) cfg.output = out_dir;
    cfg.validate();

    landau::CommandOptions opts;
    if (*k_opt) opts.k = k;
    if (*l_opt) opts.l = l;
    if (*comp_opt) opts.component = component;
    if (*pair_opt) opts.pair = pair;
    if (*win_opt) opts.window = landau::parse_window(window);

    landau::Lab lab(cfg, threads);
    const auto result = landau::run_command(lab, command, opts, cfg.output);
    print_checks(result.checks);
    for (const auto& n : lab.notes()) std::printf("note: %s\n", n.c_str());
    std::printf("manifest: %s\n", result.manifest.string().c_str());
    std::fflush(stdout);
    if (!result.ok()) {
      for (const auto& r : result.checks)
        if (!r.pass) std::fprintf(stderr, "failed check: %s (%s)\n", r.id.c_str(), r.description.c_str());
      return kFailed;
    }
    return 0;
  } catch (const landau::ConfigError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailed;
  }
}
