#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kTmp = fs::temp_directory_path() / "tfpdhg_cli_test";

int run(const std::string& args) {
  fs::create_directories(kTmp);
  const std::string cmd = std::string(PDHG_SDP_BIN) + " " + args + " 2>" + (kTmp / "stderr.txt").string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string last_line(const std::string& text) {
  std::string t = text;
  while (!t.empty() && t.back() == '\n') t.pop_back();
  return t.substr(t.rfind('\n') + 1);
}

std::string p(const char* name) { return (kTmp / name).string(); }

}  // namespace

TEST(Cli, SolveMaxcutWithTuningFree) {
  const int rc = run("solve --problem mc --n 8 --edges 10 --policy tf --out " + p("mc.csv"));
  ASSERT_TRUE(rc == 0 || rc == 2) << rc;
  const std::string csv = slurp(kTmp / "mc.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,p_norm,d_norm,combined,objective,alpha,beta,theta,wall_ms");
  if (rc == 0) {
    std::stringstream row(last_line(csv));
    std::string field;
    for (int i = 0; i < 4; ++i) std::getline(row, field, ',');
    EXPECT_LT(std::stod(field), 1e-6);
  }
}

TEST(Cli, IterationCapExitCode) {
  EXPECT_EQ(run("solve --problem rg --n 6 --m 4 --max-iters 3 --out " + p("cap.csv")), 2);
}

TEST(Cli, BadArgumentsExitOne) {
  EXPECT_EQ(run("solve --bogus-flag 1"), 1);
  EXPECT_EQ(run("solve --problem file:/nonexistent/instance.dat-s"), 1);
  EXPECT_EQ(run("solve --policy unknown"), 1);
}

TEST(Cli, InstanceFileRoundTrip) {
  ASSERT_EQ(run("instance --problem rg --seed 3 --n 6 --m 4 --out " + p("rg.dat-s")), 0);
  ASSERT_EQ(run("solve --problem file:" + p("rg.dat-s") + " --policy fixed --no-wall --max-iters 50 --tol 0 --out " +
                p("a.csv")),
            2);
  ASSERT_EQ(run("solve --problem rg --seed 3 --n 6 --m 4 --policy fixed --no-wall --max-iters 50 --tol 0 --out " +
                p("b.csv")),
            2);
  EXPECT_EQ(slurp(kTmp / "a.csv"), slurp(kTmp / "b.csv"));
}

TEST(Cli, NoWallOutputIsReproducible) {
  const std::string args = "solve --problem snl --seed 2 --anchors 4 --sensors 8 --policy bpdr --max-iters 200 --tol 0 --no-wall";
  ASSERT_EQ(run(args + " --out " + p("r1.csv")), 2);
  ASSERT_EQ(run(args + " --out " + p("r2.csv")), 2);
  EXPECT_EQ(slurp(kTmp / "r1.csv"), slurp(kTmp / "r2.csv"));
}

TEST(Cli, VerifySchedules) {
  EXPECT_EQ(run("verify --schedule constant --out " + p("v1.json") + " >/dev/null"), 0);
  EXPECT_EQ(run("verify --schedule geometric --out " + p("v2.json") + " >/dev/null"), 0);
  EXPECT_NE(slurp(kTmp / "v2.json").find("\"pass\": true"), std::string::npos);
  EXPECT_EQ(run("verify --schedule geometric --break-product --out " + p("v3.json") + " >/dev/null"), 3);
}

TEST(Cli, BenchWritesTableAndRuns) {
  {
    std::ofstream cfg(kTmp / "bench.json");
    cfg << R"({"families": ["rg"], "seeds": 2, "budgets": {"rg": [100, 1000]},
              "policies": ["fixed", "tf"], "sizes": {"rg_n": 5, "rg_m": 3}})";
  }
  fs::remove_all(kTmp / "bench_out");
  ASSERT_EQ(run("bench --config " + p("bench.json") + " --out-dir " + p("bench_out") + " --no-wall >/dev/null"), 0);
  const std::string table = slurp(kTmp / "bench_out" / "table.csv");
  EXPECT_NE(table.find("rg,tf,1000,"), std::string::npos);
  EXPECT_TRUE(fs::exists(kTmp / "bench_out" / "runs" / "rg_fixed_2.csv"));
}
