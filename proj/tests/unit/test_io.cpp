#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include <json.hpp>

#include "regpf/errors.hpp"
#include "regpf/io.hpp"
#include "temp_dir.hpp"

namespace regpf {
namespace {

using testing::TempDir;

TEST(Format, ShortestRoundTrip) {
  Rng rng(1);
  std::normal_distribution<double> z;
  for (int i = 0; i < 10000; ++i) {
    const double v = z(rng) * std::pow(10.0, static_cast<int>(z(rng) * 50));
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  for (double v : {0.0, -0.0, 1e-310, std::numeric_limits<double>::max(), 0.1}) {
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(NAN), "");
  EXPECT_TRUE(std::isnan(parse_double("")));
  EXPECT_THROW(parse_double("1.2x"), IoError);
}

TEST(Files, MetaPathAndMissingFile) {
  EXPECT_EQ(meta_path_for("a/trace_APF.csv"), std::filesystem::path("a/trace_APF.meta.json"));
  EXPECT_THROW(read_file("/nonexistent/regpf/file.csv"), IoError);
  EXPECT_THROW(write_file_atomic("/proc/regpf/forbidden.csv", "x"), IoError);
}

TEST(Dataset, RoundTrip) {
  TempDir dir;
  const auto data = simulate(daily_params(), 200, 9, DatasetLabel::daily);
  const auto csv = write_dataset(dir.path(), data);
  EXPECT_EQ(csv.filename(), "dataset.csv");
  const auto back = read_dataset(csv);
  EXPECT_EQ(back.y, data.y);
  EXPECT_EQ(back.x_true, data.x_true);
  EXPECT_EQ(back.params_true, data.params_true);
  EXPECT_EQ(back.seed, data.seed);
  EXPECT_EQ(back.label, DatasetLabel::daily);
  EXPECT_EQ(back.horizon, 200u);

  const auto text = read_file(csv);
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,y,x_true");
  const auto row0 = text.substr(text.find('\n') + 1);
  EXPECT_EQ(row0.substr(0, 3), "0,,");

  const auto meta = nlohmann::json::parse(read_file(dir / "dataset.meta.json"));
  for (const char* key : {"alpha", "phi", "sigma2", "T", "seed", "label"}) EXPECT_TRUE(meta.contains(key)) << key;
  EXPECT_EQ(meta["phi"].get<double>(), 0.99);
  EXPECT_EQ(meta["label"].get<std::string>(), "daily");
}

TEST(Dataset, CorruptHeader) {
  TempDir dir;
  write_file_atomic(dir / "dataset.csv", "t,y\n0,,1\n");
  EXPECT_THROW(read_dataset(dir / "dataset.csv"), IoError);
}

RunTrace sample_trace() {
  RunTrace t;
  t.algo = "SIR-r";
  t.n_particles = 10;
  t.start_index = 2;
  t.entries = {{3, 0.1, 0.01, 0.9, 0.1, 9.5, 0.2, false}, {4, -0.2, 0.02, 0.91, 0.12, 3.25, 0.3, true}};
  t.collapse_step = 4;
  return t;
}

TEST(Trace, RoundTrip) {
  TempDir dir;
  const auto data = simulate(weekly_params(), 4, 3);
  const auto trace = sample_trace();
  const auto csv = dir / "trace_SIR-r.csv";
  write_trace(csv, trace, data, {0, 7, 3, "weekly", 0.9, 0.98});
  const auto rows = read_trace(csv);
  EXPECT_EQ(rows, trace_rows(trace, data));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].x_true, data.x_true[4]);
  EXPECT_TRUE(rows[1].resampled);

  const auto text = read_file(csv);
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,algo,x_true,x_mean,alpha_mean,phi_mean,sigma2_mean,ess,rmse_cum,resampled");
  const auto meta = nlohmann::json::parse(read_file(meta_path_for(csv)));
  EXPECT_EQ(meta["particles"].get<std::size_t>(), 10u);
  EXPECT_EQ(meta["algo"].get<std::string>(), "SIR-r");
  EXPECT_EQ(meta["collapse_step"].get<std::size_t>(), 4u);
}

TEST(Init, RoundTrip) {
  TempDir dir;
  InitSample s;
  s.n = 100;
  s.x_n = {0.1, -0.25};
  s.theta = {{0.0, 5.2, -4.6}, {0.01, 5.3, -4.5}};
  s.seeds = {11, 12};
  s.iterations = 2002;
  s.burn_in = 2000;
  s.thin = 1;
  const auto csv = dir / "init.csv";
  write_init(csv, s);
  const auto back = read_init(csv);
  EXPECT_EQ(back.n, s.n);
  EXPECT_EQ(back.x_n, s.x_n);
  EXPECT_EQ(back.theta, s.theta);
  EXPECT_EQ(back.seeds, s.seeds);
  EXPECT_EQ(back.iterations, s.iterations);
  EXPECT_EQ(back.burn_in, s.burn_in);
  const auto text = read_file(csv);
  EXPECT_EQ(text.substr(0, text.find('\n')), "i,x_n,alpha,psi,lambda");
}

TEST(Summary, RoundTripAndRow) {
  TempDir dir;
  const SVParams truth{0.0, 0.9, 0.1};
  const auto row = summary_row({"APF", 3, {0.1, 0.8, 0.2}, 0.5, false}, truth);
  EXPECT_NEAR(row.mse_alpha, 0.01, 1e-15);
  EXPECT_NEAR(row.mse_phi, 0.01, 1e-15);
  EXPECT_NEAR(row.mse_sigma2, 0.01, 1e-15);
  const auto bad = summary_row({"SIS", 4, {NAN, NAN, NAN}, NAN, true}, truth);
  EXPECT_TRUE(bad.degenerate);

  const std::vector<SummaryRow> rows{row, bad};
  write_summary(dir / "summary.csv", rows);
  const auto back = read_summary(dir / "summary.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], row);
  EXPECT_TRUE(back[1].degenerate);
  EXPECT_TRUE(std::isnan(back[1].mse_phi));
  const auto text = read_file(dir / "summary.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "algo,run,mse_alpha,mse_phi,mse_sigma2,final_rmse,degenerate");
}

TEST(Envelope, RoundTrip) {
  TempDir dir;
  const std::vector<EnvelopeRow> rows{{3, "APF:ess", 1500.5, 900.0, 2000.0, 10}, {3, "SIS:rmse", 0.3, 0.1, 0.9, 7}};
  write_envelope(dir / "envelope.csv", rows);
  EXPECT_EQ(read_envelope(dir / "envelope.csv"), rows);
  const auto text = read_file(dir / "envelope.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,metric,mean,min,max,count");
}

}  // namespace
}  // namespace regpf
