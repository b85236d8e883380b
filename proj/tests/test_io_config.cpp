#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "landau/config.hpp"
#include "landau/error.hpp"
#include "landau/io.hpp"
#include "landau/lab.hpp"

using namespace landau;

namespace {

fs::path scratch(const std::string& name)
{
  const fs::path p = fs::temp_directory_path() / ("landau_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& text)
{
  try {
    validate_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("SHA-256 test vectors")
{
  CHECK(sha256_string("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_string("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const fs::path d = scratch("sha");
  std::ofstream(d / "abc.txt", std::ios::binary) << "abc";
  CHECK(sha256_file(d / "abc.txt") == sha256_string("abc"));
}

TEST_CASE("number formatting")
{
  CHECK(fmt(0.1) == "0.10000000000000001");
  CHECK(fmt(0.0) == "0");
  CHECK(fmt(-2.5) == "-2.5");
  CHECK(fmt(42) == "42");
  CHECK(std::stod(fmt(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("CSV writer")
{
  const fs::path d = scratch("csv");
  {
    CsvWriter w(d / "a.csv", {"name", "value"});
    w.comment("units: none");
    w.row({"plain", "1"});
    w.row({"a,b", "say \"hi\""});
    CHECK_THROWS_AS(w.row({"only one"}), Error);
    w.close();
  }
  CHECK(slurp(d / "a.csv") ==
        "name,value\n# units: none\nplain,1\n\"a,b\",\"say \"\"hi\"\"\"\n");
}

TEST_CASE("matrix container round trip")
{
  const fs::path d = scratch("mat");
  Eigen::MatrixXd m(2, 3);
  m << 1.0, -2.5, 1e-300, 0.1, 3.0, -0.0;
  write_matrix(d / "m", m, {{"pair", "BB"}});
  CHECK(fs::file_size(d / "m.bin") == 6 * sizeof(double));
  const Eigen::MatrixXd r = read_matrix(d / "m");
  CHECK(r == m);
  const ojson meta = read_json(d / "m.json");
  CHECK(meta["meta"]["pair"] == "BB");
  CHECK(meta["rows"] == 2);
  CHECK(meta["cols"] == 3);
  // row-major on disk
  std::ifstream in(d / "m.bin", std::ios::binary);
  double first[2];
  in.read(reinterpret_cast<char*>(first), sizeof first);
  CHECK(first[1] == -2.5);
}

TEST_CASE("artifact manifest")
{
  const fs::path d = scratch("art");
  ArtifactWriter a(d, "unit", "cafe");
  std::ofstream(a.path("x.csv")) << "x\n1\n";
  a.add("x.csv");
  a.timing("stage", 0.25);
  const fs::path man = a.finalize({{"ok", true}});
  const ojson j = read_json(man);
  CHECK(man.filename() == "manifest.json");
  CHECK(j["command"] == "unit");
  CHECK(j["config_sha256"] == "cafe");
  CHECK(j["timings_s"]["stage"] == 0.25);
  bool found = false;
  for (const auto& f : j["files"])
    if (f["path"] == "x.csv") {
      found = true;
      CHECK(f["sha256"] == sha256_file(d / "x.csv"));
    }
  CHECK(found);
}

TEST_CASE("configuration defaults and validation")
{
  const RunConfig c = validate_config("{}");
  CHECK(c.params.m_A == 1.5);
  CHECK(c.params.m_B == 1.0);
  CHECK(c.params.gamma == 0.0);
  CHECK(c.degree == 8);
  CHECK(c.delta == 0.5);
  CHECK(c.cutoff.varpi == 10.0);
  CHECK(c.cutoff.R == 5.0);

  CHECK(config_error(R"({"params": {"gamma": -3}})").find("params.gamma") != std::string::npos);
  CHECK(config_error(R"({"params": {"gamma": 1.5}})").find("params.gamma") != std::string::npos);
  CHECK(config_error(R"({"degree": 1})").find("degree") != std::string::npos);
  CHECK(config_error(R"({"params": {"mass": 2}})").find("params.mass") != std::string::npos);
  CHECK(config_error("{\n  \"degree\": 8,\n  oops\n}").find("line 3") != std::string::npos);
  CHECK(config_error(R"({"degree": "eight"})").find("degree") != std::string::npos);
  CHECK(config_error(R"({"quadrature": {"lambda_form": "other"}})").find("lambda_form") !=
        std::string::npos);
  CHECK(config_error(R"({"quadrature": {"oversampling": 0.5}})").find("oversampling") !=
        std::string::npos);
  CHECK(config_error(R"({"params": {"gamma": -2}})").empty());
}

TEST_CASE("configuration serialization")
{
  const RunConfig a = validate_config("{}");
  const RunConfig b = validate_config(to_json(a).dump());
  CHECK(to_json(a) == to_json(b));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 64);
  const RunConfig c = validate_config(R"({"params": {"gamma": -1}})");
  CHECK(config_hash(c) != config_hash(a));
  CHECK(to_json(c)["params"]["gamma"] == -1.0);

  const fs::path d = scratch("cfg");
  std::ofstream(d / "c.json") << R"({"degree": 6, "seed": 7})";
  const RunConfig l = load_config(d / "c.json");
  CHECK(l.degree == 6);
  CHECK(l.seed == 7);
  CHECK_THROWS_AS(load_config(d / "missing.json"), ConfigError);
}

TEST_CASE("fit window option")
{
  const auto w = parse_window("100:1e4");
  CHECK(w.first == 100.0);
  CHECK(w.second == 1e4);
  CHECK_THROWS_AS(parse_window("100"), ConfigError);
  CHECK_THROWS_AS(parse_window("a:b"), ConfigError);
  CHECK_THROWS_AS(parse_window("50:10"), ConfigError);
}
