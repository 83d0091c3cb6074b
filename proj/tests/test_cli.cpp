// End-to-end checks of the command-line surface: exit codes, output text,
// and the CSV artifact, run against the built binary.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  RunResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (std::fgets(buf.data(), buf.size(), pipe)) res.output += buf.data();
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string fixture(const std::string& name) {
  return std::string(FIXTURE_DIR) + "/" + name;
}

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "/tmp/effdispatch_test_" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("validate command", "[cli]") {
  CHECK(run_cli("validate " + fixture("case1.fleet")).exit_code == 0);
  CHECK(run_cli("validate " + fixture("case2.fleet")).exit_code == 0);

  const auto bad_curve = write_temp(
      "bad_curve.fleet",
      R"({"units": [{"id": "hot", "a": 0.03, "b": 0.0001, "p_max": 100}]})");
  const auto invalid = run_cli("validate " + bad_curve);
  CHECK(invalid.exit_code == 1);
  CHECK(invalid.output.find("hot") != std::string::npos);

  const auto broken = write_temp("broken.fleet", "{ not json");
  CHECK(run_cli("validate " + broken).exit_code == 2);

  CHECK(run_cli("validate /nonexistent.fleet").exit_code == 2);
}

TEST_CASE("allocate command", "[cli]") {
  const auto r = run_cli("allocate " + fixture("case1.fleet") + " --pt 200");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("p_u1 = 80") != std::string::npos);
  CHECK(r.output.find("p_u2 = 120") != std::string::npos);
  CHECK(r.output.find("eta_t = 0.88") != std::string::npos);
  CHECK(r.output.find("marginal_output") != std::string::npos);

  const auto single = run_cli("allocate " + fixture("case1.fleet") + " --pt 120");
  CHECK(single.exit_code == 0);
  CHECK(single.output.find("active_set: u2") != std::string::npos);

  const auto pinned = run_cli("allocate " + fixture("case1.fleet") +
                              " --pt 120 --units u1,u2");
  CHECK(pinned.exit_code == 0);
  CHECK(pinned.output.find("active_set: u1+u2") != std::string::npos);

  CHECK(run_cli("allocate " + fixture("case1.fleet") + " --pt 0").exit_code == 0);

  const auto infeasible =
      run_cli("allocate " + fixture("case1.fleet") + " --pt 4000");
  CHECK(infeasible.exit_code == 1);
  CHECK(infeasible.output.find("400") != std::string::npos);  // capacity

  CHECK(run_cli("allocate " + fixture("case1.fleet") +
                " --pt 10 --units nosuch")
            .exit_code == 2);
}

TEST_CASE("schedule command", "[cli]") {
  const auto r = run_cli("schedule " + fixture("case1.fleet") +
                         " --pt-min 1 --pt-max 300");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("breakpoint 96") != std::string::npos);
  CHECK(r.output.find("breakpoint 150") != std::string::npos);
  CHECK(r.output.find("MISMATCH") == std::string::npos);

  const auto solo = write_temp(
      "solo.fleet", R"({"units": [{"id": "only", "a": 0.022, "b": 0.0001375}]})");
  const auto single = run_cli("schedule " + solo + " --pt-min 1 --pt-max 150");
  CHECK(single.exit_code == 0);
  CHECK(single.output.find("1 regime(s), 0 breakpoint(s)") != std::string::npos);

  const auto dissimilar = run_cli("schedule " + fixture("case2.fleet") +
                                  " --pt-min 1 --pt-max 160");
  CHECK(dissimilar.exit_code == 0);
  CHECK(dissimilar.output.find("breakpoint 69.91") != std::string::npos);
}

TEST_CASE("sweep command", "[cli]") {
  const std::string out = "/tmp/effdispatch_test_sweep.csv";
  const auto r = run_cli("sweep " + fixture("case1.fleet") +
                         " --pt-min 1 --pt-max 300 --step 1 --out " + out);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("rows: 300") != std::string::npos);

  const std::string csv = read_file(out);
  CHECK(csv.rfind("pt,active_set,p_u1,p_u2,w_t,eta_t\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 301);

  // Byte-identical on a second run.
  const std::string out2 = "/tmp/effdispatch_test_sweep2.csv";
  run_cli("sweep " + fixture("case1.fleet") +
          " --pt-min 1 --pt-max 300 --step 1 --out " + out2);
  CHECK(read_file(out2) == csv);

  CHECK(run_cli("sweep " + fixture("case1.fleet") +
                " --pt-min 1 --pt-max 300 --step 500 --out " + out)
            .exit_code == 2);
  CHECK(run_cli("sweep " + fixture("case1.fleet") +
                " --pt-min 1 --pt-max 300 --step 1 --out /nonexistent/x.csv")
            .exit_code == 2);
}

TEST_CASE("min-input command", "[cli]") {
  const auto r = run_cli("min-input " + fixture("case1.fleet") + " --wt 123.75");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("p_t = 150\n") != std::string::npos);
  CHECK(r.output.find("w_t = 123.75") != std::string::npos);

  const auto zero = run_cli("min-input " + fixture("case1.fleet") + " --wt 0");
  CHECK(zero.exit_code == 0);
  CHECK(zero.output.find("p_t = 0") != std::string::npos);

  const auto beyond =
      run_cli("min-input " + fixture("case1.fleet") + " --wt 1000");
  CHECK(beyond.exit_code == 1);
  CHECK(beyond.output.find("208.59") != std::string::npos);  // max achievable
}

TEST_CASE("oracle-check command", "[cli]") {
  CHECK(run_cli("oracle-check " + fixture("case1.fleet") + " --pt 137")
            .exit_code == 0);

  const auto dissimilar = run_cli("oracle-check " + fixture("case2.fleet") +
                                  " --pt 103.36 --step 0.1");
  CHECK(dissimilar.exit_code == 0);
  CHECK(dissimilar.output.find("w_t = 84.45") != std::string::npos);

  const auto four = write_temp("four.fleet", R"({"units": [
    {"id": "a", "a": 0.022, "b": 0.0001375},
    {"id": "b", "a": 0.020, "b": 0.00012},
    {"id": "c", "a": 0.018, "b": 0.00011},
    {"id": "d", "a": 0.016, "b": 0.00010}]})");
  CHECK(run_cli("oracle-check " + four + " --pt 50").exit_code == 2);
}

TEST_CASE("usage errors", "[cli]") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("frobnicate x").exit_code == 2);
  CHECK(run_cli("allocate " + fixture("case1.fleet")).exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
}
