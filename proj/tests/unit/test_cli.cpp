#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "dosetrend");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = dosetrend::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dosetrend_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("help and version succeed") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"--version"}).out.find("0.1.0") != std::string::npos);
  CHECK(run({"analyze", "--help"}).out.find("--eta") != std::string::npos);
}

TEST_CASE("analyze writes three outputs with identical bytes on rerun") {
  const auto a = scratch("a");
  const auto b = scratch("b");
  const std::string data = fixtures::path("reaction.csv");
  const auto r1 = run({"analyze", "--data", data, "--family", "dunnett,williams", "--out-dir", a.string()});
  const auto r2 = run({"analyze", "--data", data, "--family", "dunnett,williams", "--out-dir", b.string()});
  REQUIRE(r1.code == 0);
  REQUIRE(r2.code == 0);
  CHECK(r1.out.find("Claim: absolute") != std::string::npos);
  for (const auto* f : {"report.json", "report.txt", "intervals.csv"}) CHECK(fs::exists(a / f));
  const auto j1 = slurp(a / "report.json");
  const auto j2 = slurp(b / "report.json");
  // Only the command line (which names the output directory) differs.
  auto p1 = nlohmann::json::parse(j1);
  auto p2 = nlohmann::json::parse(j2);
  p1.erase("command");
  p2.erase("command");
  CHECK(p1.dump() == p2.dump());
  CHECK(p1["schema_version"] == 1);
  CHECK(p1["verdict"]["claim"] == "absolute");
  CHECK(slurp(a / "intervals.csv").rfind("family,label,lower,estimate,upper,scale\n", 0) == 0);

  const auto s1 = run({"analyze", "--data", data, "--format", "json"});
  const auto s2 = run({"analyze", "--data", data, "--format", "json"});
  CHECK(s1.out == s2.out);
}

TEST_CASE("config file with flag precedence") {
  const auto dir = scratch("cfg");
  write(dir / "run.cfg", "# case-control\nendpoint = binomial\nsuccesses_col = cases\nfailures_col = controls\nalpha = 0.01\n");
  const std::string data = fixtures::path("cc_ex.csv");
  const auto file_only = run({"trend-report", "--data", data, "--config", (dir / "run.cfg").string(), "--format", "json"});
  REQUIRE(file_only.code == 0);
  CHECK(nlohmann::json::parse(file_only.out)["config"]["alpha"] == 0.01);
  const auto flag = run({"trend-report", "--data", data, "--config", (dir / "run.cfg").string(), "--alpha", "0.05",
                         "--format", "json"});
  REQUIRE(flag.code == 0);
  const auto j = nlohmann::json::parse(flag.out);
  CHECK(j["config"]["alpha"] == 0.05);
  CHECK(j["config"]["ratio_scale"] == true);
  const double lower = j["decision"]["dunnett_marginal"]["rows"][0]["ratio_lower"];
  CHECK(std::abs(lower - 0.62) < 0.02);
}

TEST_CASE("validation failures exit 2 and leave no report") {
  const auto dir = scratch("bad");
  const std::string data = fixtures::path("reaction.csv");
  CHECK(run({"analyze"}).code == 2);
  CHECK(run({"analyze", "--data", data, "--bogus"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"analyze", "--data", (dir / "missing.csv").string()}).code == 2);
  CHECK(run({"analyze", "--data", data, "--alpha", "0.7", "--out-dir", dir.string()}).code == 2);
  CHECK(run({"analyze", "--data", data, "--family", "", "--out-dir", dir.string()}).code == 2);
  CHECK(run({"analyze", "--data", data, "--eta", "-1", "--out-dir", dir.string()}).code == 2);
  CHECK(run({"analyze", "--data", data, "--family", "scheffe"}).code == 2);
  write(dir / "single.csv", "dose,response\n0,1\n0,2\n");
  const auto single = run({"analyze", "--data", (dir / "single.csv").string(), "--out-dir", dir.string()});
  CHECK(single.code == 2);
  CHECK(single.err.find("SingleGroup") != std::string::npos);
  write(dir / "two.csv", "dose,response\n0,1\n0,2\n5,1\n5,3\n");
  CHECK(run({"tukey", "--data", (dir / "two.csv").string()}).code == 2);
  write(dir / "bad.cfg", "colour = blue\n");
  CHECK(run({"analyze", "--data", data, "--config", (dir / "bad.cfg").string()}).code == 2);
  CHECK(run({"simulate", "--shape", "flat", "--reps", "0"}).code == 2);
  CHECK(run({"simulate"}).code == 2);
  CHECK_FALSE(fs::exists(dir / "report.json"));
}

TEST_CASE("numerical failures exit 3") {
  const auto dir = scratch("num");
  write(dir / "sep.csv", "dose,s,f\n0,0,20\n1,20,0\n");
  const auto sep = run({"analyze", "--data", (dir / "sep.csv").string(), "--endpoint", "binomial", "--successes-col",
                        "s", "--failures-col", "f", "--out-dir", dir.string()});
  CHECK(sep.code == 3);
  CHECK(sep.err.find("SeparationDetected") != std::string::npos);
  // A sandwich on one aggregated row per group is undefined.
  const auto hc = run({"analyze", "--data", fixtures::path("cc_ex.csv"), "--endpoint", "binomial", "--successes-col",
                       "cases", "--failures-col", "controls", "--covariance", "HC0", "--out-dir", dir.string()});
  CHECK(hc.code == 3);
  CHECK_FALSE(fs::exists(dir / "report.json"));
}

TEST_CASE("tukey, simulate and contrasts subcommands") {
  const auto t = run({"tukey", "--data", fixtures::path("cc_ex.csv"), "--endpoint", "binomial", "--successes-col",
                      "cases", "--failures-col", "controls", "--format", "json"});
  REQUIRE(t.code == 0);
  const auto j = nlohmann::json::parse(t.out);
  CHECK(j["tukey"]["joint_p"].get<double>() < 0.05);
  CHECK(j["tukey"]["scorings"].size() == 3);

  const auto dir = scratch("sim");
  const auto s = run({"simulate", "--means", "0,0,0", "--reps", "100", "--seed", "4", "--out-dir", dir.string()});
  REQUIRE(s.code == 0);
  CHECK(slurp(dir / "rates.csv").rfind("claim,count,reps,rate,mc_se\n", 0) == 0);

  const auto c = run({"contrasts", "--data", fixtures::path("reaction.csv"), "--family", "changepoint"});
  REQUIRE(c.code == 0);
  CHECK(c.out.find("C 2") != std::string::npos);
}
