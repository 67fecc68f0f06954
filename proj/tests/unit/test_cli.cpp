#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dolbeault/cli.hpp"
#include "dolbeault/config.hpp"
#include "dolbeault/errors.hpp"
#include "dolbeault/report.hpp"

using namespace dolbeault;

namespace {

constexpr double kPi = std::numbers::pi;

CommandOutcome run(const KeyValues& kv) { return run_from_key_values("", kv); }

nlohmann::json parse(const CommandOutcome& o) { return nlohmann::json::parse(o.report); }

std::string error_of(const KeyValues& kv) {
  try {
    make_run_config(kv);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("key-value parsing") {
  const auto kv = parse_key_values("# sweep\n degree = -2 \n\ngrids=8, 16,32  # trailing\nformat=csv\n");
  CHECK(kv.at("degree") == "-2");
  CHECK(kv.at("grids") == "8, 16,32");
  CHECK(kv.at("format") == "csv");
  CHECK(kv.size() == 3);
  CHECK_THROWS_AS(parse_key_values("degre=1"), ValidationError);
  CHECK_THROWS_AS(parse_key_values("grid=8\ngrid=16"), ValidationError);
  CHECK_THROWS_AS(parse_key_values("just words"), ValidationError);
  try {
    parse_key_values("k=1\nbogus=2", "run.cfg");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("run.cfg:2") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
}

TEST_CASE("flags override the file") {
  const auto merged = merge_key_values({{"grid", "8"}, {"k", "3"}}, {{"grid", "16"}});
  CHECK(merged.at("grid") == "16");
  CHECK(merged.at("k") == "3");

  const std::string path = "cli_test_override.cfg";
  {
    std::ofstream out(path);
    out << "command=spectrum\ndegree=0\ngrid=8\nk=2\n";
  }
  const auto o = run_from_key_values(path, {{"grid", "12"}});
  std::remove(path.c_str());
  REQUIRE(o.exit_code == kExitOk);
  const auto j = parse(o);
  CHECK(j["grid"] == 12);
  CHECK(j["config"]["grid"] == "12");
  CHECK(j["config"]["degree"] == "0");
}

TEST_CASE("validation names the field") {
  CHECK(error_of({{"grid", "2"}}).rfind("grid:", 0) == 0);
  CHECK(error_of({{"grid", "eight"}}).rfind("grid:", 0) == 0);
  CHECK(error_of({{"area", "-1"}}).rfind("area", 0) == 0);
  CHECK(error_of({{"modulus", "1"}}).rfind("modulus", 0) == 0);
  CHECK(error_of({{"tol", "0"}}).rfind("tol:", 0) == 0);
  CHECK(error_of({{"k", "0"}}).rfind("k:", 0) == 0);
  CHECK(error_of({{"format", "xml"}}).rfind("format:", 0) == 0);
  CHECK(error_of({{"grids", "16,16,32"}}).rfind("grids:", 0) == 0);
  CHECK(error_of({{"command", "convergence"}, {"grids", "16,32"}}).rfind("grids:", 0) == 0);
  CHECK(error_of({{"degree", "-1,-1"}}).rfind("degree:", 0) == 0);
  CHECK(error_of({{"perturb-profile", "square"}}).rfind("perturb-profile:", 0) == 0);
  CHECK(error_of({{"command", "dance"}}).rfind("command:", 0) == 0);
  CHECK(error_of({{"nonsense", "1"}}).find("nonsense") != std::string::npos);
  CHECK(error_of({{"command", "product"}, {"degree", "-1,-2"}}).empty());
}

TEST_CASE("complex moduli") {
  CHECK(parse_complex("i") == std::complex<double>(0.0, 1.0));
  CHECK(parse_complex("-i") == std::complex<double>(0.0, -1.0));
  CHECK(parse_complex("2i") == std::complex<double>(0.0, 2.0));
  CHECK(parse_complex("0.5+1.2i") == std::complex<double>(0.5, 1.2));
  CHECK(parse_complex("0.5-1.2i") == std::complex<double>(0.5, -1.2));
  CHECK(parse_complex("1e-1+2e+0i") == std::complex<double>(0.1, 2.0));
  CHECK(parse_complex("3") == std::complex<double>(3.0, 0.0));
  CHECK_THROWS_AS(parse_complex("i2"), ValidationError);
  CHECK_THROWS_AS(parse_complex(""), ValidationError);
}

TEST_CASE("config hash ignores the output path only") {
  const auto a = make_run_config({{"degree", "-1"}});
  const auto b = make_run_config({{"degree", "-1"}, {"out", "x.json"}});
  const auto c = make_run_config({{"degree", "-2"}});
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(canonical_config(a).find("out=") == std::string::npos);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(std::nan("")) == "null");
  CHECK(std::stod(format_number(2 * kPi)) == 2 * kPi);
}

TEST_CASE("spectrum: flat bundle starts at zero") {
  const auto o = run({{"command", "spectrum"}, {"degree", "0"}, {"grid", "16"}, {"k", "3"}});
  REQUIRE(o.exit_code == kExitOk);
  const auto j = parse(o);
  CHECK(std::abs(j["spectrum"]["eigenvalues"][0].get<double>()) < 1e-9);
  CHECK(j["kernel_dim"] == 1);
}

TEST_CASE("spectrum: Landau spacing for d = -1") {
  const auto o = run({{"command", "spectrum"}, {"degree", "-1"}, {"grid", "32"}, {"k", "5"}});
  REQUIRE(o.exit_code == kExitOk);
  const auto ev = parse(o)["spectrum"]["eigenvalues"];
  for (int i = 0; i < 5; ++i) {
    const double level = 2 * kPi * (i + 1);
    CHECK(std::abs(ev[i].get<double>() - level) < 0.02 * level * (i + 1));
  }
}

TEST_CASE("exit codes") {
  CHECK(run({{"command", "spectrum"}, {"grid", "2"}}).exit_code == kExitConfig);
  CHECK(run({{"command", "convergence"}, {"grids", "16,32"}}).exit_code == kExitConfig);
  CHECK(run({{"command", "dirac"}, {"degree", "1"}, {"grids", "8,12,16"}}).exit_code == kExitConfig);
  CHECK(run({{"command", "spectrum"}, {"grid", "8"}, {"k", "40"}}).exit_code == kExitConfig);
  const auto nc = run({{"command", "spectrum"}, {"grid", "24"}, {"max-iter", "3"}});
  CHECK(nc.exit_code == kExitNotConverged);
  CHECK(parse(nc)["exit_code"] == 2);
  const auto flat = run({{"command", "verify-bound"}, {"degree", "0"}, {"grids", "8,12,16"}});
  CHECK(flat.exit_code == kExitOk);
  CHECK(parse(flat)["report"]["bound"] == 0.0);
  CHECK(parse(flat)["report"]["verdict"] == "PASS");
}

TEST_CASE("reports are byte stable and self-describing") {
  const KeyValues kv{{"command", "verify-bound"}, {"degree", "-1"}, {"grids", "8,12,16"}, {"k", "3"}};
  const auto a = run(kv);
  const auto b = run(kv);
  CHECK(a.report == b.report);
  const auto j = parse(a);
  CHECK(j["config_hash"] == hex64(config_hash(make_run_config(kv))));
  CHECK(j["modules"].size() == 6);
  for (const auto& mv : module_versions()) CHECK(j["modules"][mv.name]["fingerprint"] == mv.fingerprint);
}

TEST_CASE("CSV and JSON carry the same numbers") {
  KeyValues kv{{"command", "convergence"}, {"degree", "-1"}, {"grids", "8,12,16"}, {"k", "2"}};
  const auto js = parse(run(kv));
  kv["format"] = "csv";
  const auto csv = run(kv).report;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "N,value,extrapolated");
  const auto& study = js["study"];
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(std::getline(in, line));
    std::string expect = std::to_string(study["grid_sizes"][i].get<int>()) + "," +
                         format_number(study["values"][i].get<double>()) + ",";
    if (study["extrapolated"].get<bool>()) expect += format_number(study["extrapolated_value"].get<double>());
    CHECK(line == expect);
  }
}

TEST_CASE("output file") {
  const std::string path = "cli_test_out.json";
  const auto o = run({{"command", "spectrum"}, {"grid", "8"}, {"k", "2"}, {"out", path}});
  CHECK(o.exit_code == kExitOk);
  CHECK(o.report.empty());
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::remove(path.c_str());
  CHECK(nlohmann::json::parse(ss.str())["command"] == "spectrum");
}
