#include <cstdlib>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include <json.hpp>

#include "regpf/io.hpp"
#include "temp_dir.hpp"

namespace regpf {
namespace {

using testing::TempDir;

int run_cli(const std::string& args) {
  const std::string cmd = std::string(REGPF_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, SimulateDaily) {
  TempDir dir;
  ASSERT_EQ(run_cli("simulate --label daily --seed 1 --out " + dir.path().string()), 0);
  const auto meta = nlohmann::json::parse(read_file(dir / "dataset.meta.json"));
  EXPECT_EQ(meta["alpha"].get<double>(), 0.0);
  EXPECT_EQ(meta["phi"].get<double>(), 0.99);
  EXPECT_EQ(meta["sigma2"].get<double>(), 0.01);
  EXPECT_EQ(meta["T"].get<int>(), 1500);
}

TEST(Cli, SimulateIsByteIdentical) {
  TempDir a, b;
  ASSERT_EQ(run_cli("simulate --label weekly --seed 1 --out " + a.path().string()), 0);
  ASSERT_EQ(run_cli("simulate --label weekly --seed 1 --out " + b.path().string()), 0);
  EXPECT_EQ(read_file(a / "dataset.csv"), read_file(b / "dataset.csv"));
  EXPECT_EQ(read_file(a / "dataset.meta.json"), read_file(b / "dataset.meta.json"));
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  EXPECT_EQ(run_cli("simulate --phi 1.5 --out " + dir.path().string()), 1);
  EXPECT_EQ(run_cli("bench --runs 0 --out " + dir.path().string()), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("simulate --label weekly --out /proc/regpf_forbidden"), 2);
  EXPECT_EQ(run_cli("report --out " + (dir / "missing").string()), 2);
}

TEST(Cli, RunRecordsProvenanceAndRepeats) {
  TempDir a, b;
  const std::string common = "run --label weekly --horizon 150 --init-n 30 --burn-in 200 --algo APF --runs 1 --particles 300 --seed 4 --out ";
  ASSERT_EQ(run_cli(common + a.path().string()), 0);
  ASSERT_EQ(run_cli(common + b.path().string()), 0);
  const auto trace = a / "runs/run0/trace_APF.csv";
  const auto meta = nlohmann::json::parse(read_file(meta_path_for(trace)));
  EXPECT_EQ(meta["particles"].get<int>(), 300);
  EXPECT_EQ(read_file(trace), read_file(b / "runs/run0/trace_APF.csv"));
  EXPECT_EQ(read_file(meta_path_for(trace)), read_file(meta_path_for(b / "runs/run0/trace_APF.csv")));
}

TEST(Cli, InitThenRunFromFiles) {
  TempDir dir;
  const std::string out = dir.path().string();
  ASSERT_EQ(run_cli("simulate --label weekly --horizon 120 --seed 2 --out " + out), 0);
  ASSERT_EQ(run_cli("init --data " + out + "/dataset.csv --particles 200 --init-n 30 --burn-in 100 --out " + out), 0);
  ASSERT_EQ(run_cli("run --data " + out + "/dataset.csv --init " + out +
                    "/init.csv --particles 200 --init-n 30 --algo SIR --runs 1 --out " + out),
            0);
  EXPECT_EQ(read_trace(dir / "runs/run0/trace_SIR.csv").size(), 90u);
}

}  // namespace
}  // namespace regpf
