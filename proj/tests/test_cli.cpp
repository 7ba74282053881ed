#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args) {
  const fs::path err_file = fs::temp_directory_path() / "mixsep_cli_test.err";
  const std::string cmd = std::string(MIXSEP_CLI_PATH) + " " + args + " 2>" + err_file.string();
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err_file);
  std::ostringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

std::string config(const std::string& name) { return std::string(MIXSEP_SOURCE_DIR) + "/configs/" + name; }

json error_line(const RunResult& r) {
  const auto first = r.err.substr(0, r.err.find('\n'));
  return json::parse(first);
}

}  // namespace

TEST(Cli, SeparateInstance) {
  const auto r = run_cli("separate --config " + config("separate_instance.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("status"), "unique");
  EXPECT_NEAR(j.at("x_hat")[1].get<double>(), 1.7, 1e-9);
  EXPECT_EQ(j.at("x_hat")[6].get<double>(), 1.0);
}

TEST(Cli, PhaseCsvAndJson) {
  const auto csv = run_cli("--trials 5 --format csv phase --config " + config("phase_sweep.json"));
  ASSERT_EQ(csv.code, 0) << csv.err;
  EXPECT_EQ(std::count(csv.out.begin(), csv.out.end(), '\n'), 13);
  EXPECT_EQ(csv.out.rfind("n,ell,R,k,s_bar,trials,", 0), 0u);

  const auto js = run_cli("--trials 5 phase --config " + config("phase_sweep.json"));
  ASSERT_EQ(js.code, 0) << js.err;
  const auto j = json::parse(js.out);
  EXPECT_EQ(j.at("records").size(), 12u);
  EXPECT_EQ(j.at("config").at("trials"), 5);
}

TEST(Cli, RerunsAreByteIdentical) {
  for (const std::string& args :
       {"--trials 20 --format csv phase --config " + config("phase_sweep.json"),
        "--trials 2000 --seed 5 --format csv concentration --config " + config("small_grid.json"),
        "separate --config " + config("separate_instance.json"),
        "boxdim --points " + config("segment_points.csv")}) {
    const auto a = run_cli(args);
    const auto b = run_cli(args);
    ASSERT_EQ(a.code, 0) << args << '\n' << a.err;
    EXPECT_EQ(a.out, b.out) << args;
    EXPECT_FALSE(a.out.empty());
  }
}

TEST(Cli, OutFileMatchesStdout) {
  const fs::path out = fs::temp_directory_path() / "mixsep_cli_test.out";
  const auto to_stdout = run_cli("boxdim --points " + config("segment_points.csv"));
  const auto to_file = run_cli("--out " + out.string() + " boxdim --points " + config("segment_points.csv"));
  ASSERT_EQ(to_file.code, 0);
  EXPECT_TRUE(to_file.out.empty());
  std::ifstream in(out);
  std::ostringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), to_stdout.out);
  fs::remove(out);
}

TEST(Cli, Transversality) {
  const auto r = run_cli("transversality --matrix " + config("transversal_3x5.csv") + " --s 3");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_TRUE(j.at("transversal").get<bool>());
  EXPECT_EQ(j.at("subsets_checked"), 10);
}

TEST(Cli, ErrorsAreStructured) {
  const auto missing = run_cli("separate --config /nonexistent.json");
  EXPECT_EQ(missing.code, 1);
  EXPECT_EQ(error_line(missing).at("error"), "io");

  const auto too_big = run_cli("transversality --matrix " + config("transversal_3x5.csv") + " --s 4");
  EXPECT_EQ(too_big.code, 1);
  EXPECT_EQ(error_line(too_big).at("error"), "precondition");

  const auto budget = run_cli("--budget 3 separate --config " + config("separate_instance.json"));
  EXPECT_EQ(budget.code, 1);
  EXPECT_EQ(error_line(budget).at("error"), "budget_exceeded");

  const auto wrong_format = run_cli("--format csv boxdim --points " + config("segment_points.csv"));
  EXPECT_EQ(wrong_format.code, 1);
  EXPECT_TRUE(wrong_format.out.empty());
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("frobnicate").code, 2);
  const auto bad = run_cli("--format xml boxdim --points x.csv");
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(error_line(bad).at("error"), "usage");
  EXPECT_EQ(run_cli("--help").code, 0);
}
