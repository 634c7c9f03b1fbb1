#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doco/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string("\"") + DOCO_CLI_PATH + "\" " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (const auto n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("list-algos prints the registry") {
  const auto r = run("list-algos");
  CHECK(r.code == 0);
  std::string expected;
  for (const auto& name : doco::registered_algorithms()) expected += name + "\n";
  CHECK(r.out == expected);
}

TEST_CASE("run writes the experiment files and is reproducible") {
  const auto base = fs::temp_directory_path() / "doco_test_cli";
  fs::remove_all(base);
  const std::string common =
      "run --env family=expconcave,n=3 --delay \"uniform(0,3)\" --algos dons-adaptive,dogd "
      "--T 50 --trials 2 --master-seed 5 --workers 2 --out ";
  const auto a = run(common + "\"" + (base / "a").string() + "\"");
  CHECK(a.code == 0);
  CHECK(a.out.find("dons-adaptive") != std::string::npos);
  const auto b = run(common + "\"" + (base / "b").string() + "\"");
  CHECK(b.code == 0);
  for (const auto* f : {"traces.csv", "aggregate.csv", "metadata.txt"}) {
    CHECK(fs::exists(base / "a" / f));
  }
  CHECK(slurp(base / "a" / "traces.csv") == slurp(base / "b" / "traces.csv"));
  CHECK(slurp(base / "a" / "aggregate.csv") == slurp(base / "b" / "aggregate.csv"));
  fs::remove_all(base);
}

TEST_CASE("run accepts a config file with overrides") {
  const auto base = fs::temp_directory_path() / "doco_test_cli_cfg";
  fs::remove_all(base);
  const auto cfg = fs::path(DOCO_SOURCE_DIR) / "configs" / "ridge.ini";
  const auto r = run("run --config \"" + cfg.string() + "\" --T 30 --trials 2 --out \"" +
                     base.string() + "\"");
  CHECK(r.code == 0);
  CHECK(fs::exists(base / "traces.csv"));
  fs::remove_all(base);
}

TEST_CASE("schedule-stats summarizes realized schedules") {
  const auto r = run("schedule-stats --delay \"fixed(2)\" --T 10 --trials 2");
  CHECK(r.code == 0);
  // Fixed delay 2 truncated at T = 10: sigma_max = 2, d_max = 2, d_tot = 2*8 + 1.
  CHECK(r.out.find("2          2           17") != std::string::npos);
}

TEST_CASE("errors map to distinct exit codes") {
  CHECK(run("run --algos no-such-algo --T 5 --trials 1 --out /tmp/doco_cli_unused").code == 2);
  CHECK(run("run --config /nonexistent/config.ini").code == 4);
  CHECK(run("schedule-stats --delay \"uniform(5,1)\" --T 10").code == 2);
  CHECK(run("schedule-stats --delay \"bogus(\" --T 10").code != 0);
  CHECK(run("").code != 0);
  CHECK(run("no-such-command").code != 0);
}
