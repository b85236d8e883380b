#include <doctest.h>

#include <filesystem>
#include <set>

#include "landau/error.hpp"
#include "landau/lab.hpp"

using namespace landau;

namespace {

RunConfig small_config()
{
  return validate_config(R"({"degree": 4, "coercivity": {"samples": 20}})");
}

fs::path scratch(const std::string& name)
{
  const fs::path p = fs::temp_directory_path() / ("landau_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("command names")
{
  const auto& names = command_names();
  const std::set<std::string> have(names.begin(), names.end());
  for (const char* c : {"coeffs", "conserve", "nullspace", "coercivity", "spectrum", "dispersion",
                        "cancellation", "gap", "evolve", "hsplit", "decay", "picard", "smooth", "all"})
    CHECK(have.count(c) == 1);
}

TEST_CASE("option validation")
{
  Lab lab(small_config());
  const fs::path out = scratch("opts");
  CHECK_THROWS_AS(run_command(lab, "frobnicate", {}, out), ConfigError);

  CommandOptions pair;
  pair.pair = "BB";
  CHECK_THROWS_AS(run_command(lab, "nullspace", pair, out), ConfigError);
  pair.pair = "AC";
  CHECK_THROWS_AS(run_command(lab, "spectrum", pair, out), ConfigError);

  CommandOptions k;
  k.k = 1;
  CHECK_THROWS_AS(run_command(lab, "gap", k, out), ConfigError);
  CommandOptions comp;
  comp.component = "h-long";
  CHECK_THROWS_AS(run_command(lab, "decay", comp, out), ConfigError);
}

TEST_CASE("nullspace artifacts are complete and deterministic")
{
  const fs::path o1 = scratch("run1"), o2 = scratch("run2");
  Lab a(small_config()), b(small_config());
  const CommandResult r1 = run_command(a, "nullspace", {}, o1);
  const CommandResult r2 = run_command(b, "nullspace", {}, o2);
  CHECK(r1.ok());
  CHECK_FALSE(r1.checks.empty());
  REQUIRE(fs::exists(r1.manifest));

  const ojson man = read_json(r1.manifest);
  std::set<std::string> listed;
  for (const auto& f : man["files"]) {
    const std::string p = f["path"];
    listed.insert(p);
    CHECK(f["sha256"] == sha256_file(r1.manifest.parent_path() / p));
  }
  for (const auto& e : fs::recursive_directory_iterator(r1.manifest.parent_path())) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    CHECK(listed.count(fs::relative(e.path(), r1.manifest.parent_path()).generic_string()) == 1);
  }
  CHECK(listed.count("nullspace.csv") == 1);

  for (const auto& f : man["files"]) {
    const std::string p = f["path"];
    if (p.size() > 4 && p.substr(p.size() - 4) == ".csv")
      CHECK(sha256_file(r2.manifest.parent_path() / p) == f["sha256"]);
  }
}

TEST_CASE("check records")
{
  const std::vector<CheckRecord> recs{{"4b.AB", 4, "", false, 1.0, "", ""},
                                      {"4a.AB", 4, "", true, 1.0, "", ""},
                                      {"sigma.positive", 0, "", true, 1.0, "", ""}};
  const auto m = by_criterion(recs);
  CHECK(m.size() == 1);
  CHECK(m.at(4).size() == 2);
  CHECK(is_known_unattainable("4b.AB"));
  CHECK(is_known_unattainable("12.p-exponent"));
  CHECK_FALSE(is_known_unattainable("4a.AB"));
  CHECK_FALSE(is_known_unattainable("4bx"));
  const ojson j = to_json(recs.front());
  CHECK(j["id"] == "4b.AB");
  CHECK(j["pass"] == false);
}
