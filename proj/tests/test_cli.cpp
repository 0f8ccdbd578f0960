#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code;
  std::string out;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "cfcheck_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run(const std::string& args) {
  const fs::path out_file = work_dir() / "stdout.txt";
  const std::string cmd = std::string(CFCHECK_BIN) + " " + args + " > " +
                          out_file.string() + " 2> " +
                          (work_dir() / "stderr.txt").string();
  const int raw = std::system(cmd.c_str());
  std::ifstream in(out_file);
  std::ostringstream buf;
  buf << in.rdbuf();
  return {WEXITSTATUS(raw), buf.str()};
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = work_dir() / name;
  std::ofstream(p) << text;
  return p;
}

const std::string kGridModel = R"({"gridworld": {}, "policies": {}})";

std::string model_flag() {
  static const std::string flag =
      "--model " + write_file("grid.json", kGridModel).string();
  return flag;
}

}  // namespace

TEST_CASE("simulate writes deterministic traces") {
  const fs::path trace = work_dir() / "trace.json";
  const std::string cmd = model_flag() +
                          " --policy random --length 11 --count 1 --seed 7 "
                          "--out " +
                          trace.string();
  CHECK(run("simulate " + cmd).exit_code == 0);
  const json j1 = json::parse(std::ifstream(trace));
  CHECK(j1["policy"] == "random");
  CHECK(j1["steps"].size() == 11);
  CHECK(j1["steps"][0]["state"] == "0_0");
  CHECK(run("simulate " + cmd).exit_code == 0);
  CHECK(json::parse(std::ifstream(trace)) == j1);
}

TEST_CASE("simulate: multiple files, zero count, unknown policy") {
  CHECK(run("simulate " + model_flag() +
            " --policy random --length 5 --count 3 --seed 1 --out " +
            (work_dir() / "multi.json").string())
            .exit_code == 0);
  CHECK(fs::exists(work_dir() / "multi_0.json"));
  CHECK(fs::exists(work_dir() / "multi_2.json"));

  CHECK(run("simulate " + model_flag() +
            " --policy random --length 5 --count 0 --out " +
            (work_dir() / "none.json").string())
            .exit_code == 0);
  CHECK(!fs::exists(work_dir() / "none.json"));

  CHECK(run("simulate " + model_flag() + " --policy bogus --length 5")
            .exit_code == 2);
}

TEST_CASE("check verdicts map to exit codes") {
  const fs::path trace = work_dir() / "check_trace.json";
  REQUIRE(run("simulate " + model_flag() +
              " --policy random --length 11 --count 1 --seed 3 --out " +
              trace.string())
              .exit_code == 0);
  const std::string base =
      "check " + model_flag() + " --trace " + trace.string() + " --seed 5 ";

  const RunResult truthy =
      run(base + "--formula '[pi<-opt]@-1 . P>=0.5 [ F[0,10] \"target\" ]'");
  CHECK(truthy.exit_code == 0);
  const json doc = json::parse(truthy.out);
  CHECK(doc["verdict"] == "true");
  CHECK(doc["mean"].get<double>() > 0.5);
  CHECK(doc["ci"].size() == 2);
  CHECK(doc["method"] == "clopper-pearson");
  CHECK(doc["seed"] == 5);

  // The target is six steps from the start, so a window of three gives an
  // estimate of exactly zero and a definite rejection.
  CHECK(run(base + "--formula '[pi<-opt]@-1 . P>=0.5 [ F[0,3] \"target\" ]'")
            .exit_code == 1);

  const RunResult query =
      run(base + "--formula '[pi<-opt]@-1 . P=? [ F[0,10] \"target\" ]'");
  CHECK(query.exit_code == 0);
  CHECK(json::parse(query.out)["verdict"] == "quantitative");

  // Thresholds pinned at an unreachable exact value stay undecided.
  CHECK(run(base + "--formula 'P>=1 [ true U[0,10] true ]'").exit_code == 3);

  CHECK(run(base + "--formula 'P>0.9 [ \"a\" U[5,2] \"b\" ]'").exit_code == 4);
  CHECK(run(base + "--formula 'P>=['").exit_code == 4);
}

TEST_CASE("check rejects inconsistent traces with exit 5") {
  // A trace whose actions disagree with its declared policy.
  const std::string bad = R"({"policy": "opt", "steps": [
    {"state": "0_0", "action": "Right"}, {"state": "0_1", "action": "Right"}]})";
  const fs::path trace = write_file("bad_trace.json", bad);
  const RunResult r = run("check " + model_flag() + " --trace " +
                          trace.string() + " --formula 'P=?[ X true ]'");
  CHECK(r.exit_code == 5);
}

TEST_CASE("abduct dumps a posterior context matrix") {
  const fs::path trace = work_dir() / "abduct_trace.json";
  REQUIRE(run("simulate " + model_flag() +
              " --policy random --length 10 --count 1 --seed 11 --out " +
              trace.string())
              .exit_code == 0);
  const RunResult r = run("abduct " + model_flag() + " --trace " +
                          trace.string() + " --samples 20 --seed 2");
  CHECK(r.exit_code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "sample,step,state,gumbel_value");
  long rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 20L * 9L * 16L);  // samples x transitions x states
}

TEST_CASE("experiment emits CSV rows and a summary") {
  const fs::path csv = work_dir() / "exp.csv";
  const RunResult r = run(
      "experiment --name sanity --reps 5 --paths 10 --contexts 5 --seed 4 "
      "--out " +
      csv.string());
  CHECK(r.exit_code == 0);
  const json summary = json::parse(r.out);
  CHECK(summary["experiment"] == "sanity");
  CHECK(summary["arms"].size() == 2);
  CHECK(summary["arms"][0]["histogram"].size() == 20);

  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "repetition,arm,phi_probability");
  long rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2 * 5);

  CHECK(run("experiment --name nope --reps 1").exit_code == 2);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("check --formula 'true'").exit_code == 2);  // missing --model
  CHECK(run("frobnicate").exit_code == 2);
  CHECK(run("simulate " + model_flag() + " --policy random --length 5 "
            "--bogus-flag 1")
            .exit_code == 2);
}

TEST_CASE("CFCHECK_SEED seeds commands when --seed is absent") {
  const fs::path t1 = work_dir() / "env1.json";
  const fs::path t2 = work_dir() / "env2.json";
  const fs::path t3 = work_dir() / "env3.json";
  const std::string args = "simulate " + model_flag() +
                           " --policy random --length 8 --count 1 --out ";
  CHECK(std::system(("CFCHECK_SEED=123 " CFCHECK_BIN " " + args + t1.string() +
                     " > /dev/null 2>&1")
                        .c_str()) == 0);
  CHECK(std::system(("CFCHECK_SEED=123 " CFCHECK_BIN " " + args + t2.string() +
                     " > /dev/null 2>&1")
                        .c_str()) == 0);
  CHECK(std::system(("CFCHECK_SEED=77 " CFCHECK_BIN " " + args + t3.string() +
                     " > /dev/null 2>&1")
                        .c_str()) == 0);
  const json a = json::parse(std::ifstream(t1));
  const json b = json::parse(std::ifstream(t2));
  const json c = json::parse(std::ifstream(t3));
  CHECK(a == b);
  CHECK(a != c);
}
