#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "spoar/json_io.hpp"

using namespace spoar;
using spoar::io::json;

TEST(JsonIo, RegionRoundTrip) {
  for (const auto& r : {FeasibleRegion::covering_square(), FeasibleRegion::ball(Vector{{1.0, 2.0}}, 0.5)}) {
    const auto back = io::region_from_json(io::to_json(r));
    EXPECT_EQ(back.kind(), r.kind());
    EXPECT_EQ(io::to_json(back), io::to_json(r));
  }
  EXPECT_THROW(io::region_from_json(json::parse(R"({"kind":"ball","center":[0],"radius":1,"extra":2})")), Error);
  EXPECT_THROW(io::region_from_json(json::parse(R"({"kind":"simplex"})")), Error);
}

TEST(JsonIo, ModelRoundTripIsRowMajor) {
  const auto model = ArModel::from_mats({Matrix{{1.0, 2.0}, {3.0, 4.0}}, Matrix{{5.0, 6.0}, {7.0, 8.0}}});
  const json j = io::to_json(model);
  EXPECT_EQ(j.at("lag"), 2);
  EXPECT_EQ(j.at("dim"), 2);
  EXPECT_EQ(j.at("mats")[0], json::parse("[[1.0,2.0],[3.0,4.0]]"));
  EXPECT_EQ(io::model_from_json(j).stacked(), model.stacked());
  json bad = j;
  bad["lag"] = 3;
  EXPECT_THROW(io::model_from_json(bad), Error);
}

TEST(JsonIo, SystemDefaultsAndRoundTrip) {
  const auto spec = io::system_from_json(json::parse(R"({"A":[[0.8,0.5],[0,0.8]],"Q":[[0.1,0],[0,0.1]]})"));
  EXPECT_EQ(spec.deg, 1);
  EXPECT_EQ(spec.xi_halfwidth, 0.25);
  EXPECT_EQ(spec.burn_in, 200u);
  const auto back = io::system_from_json(io::to_json(spec));
  EXPECT_EQ(back.A, spec.A);
  EXPECT_EQ(back.observer(), Matrix::Identity(2, 2));
  EXPECT_THROW(io::system_from_json(json::parse(R"({"A":[[0.8]],"Q":[[0.1]],"sigma":1})")), Error);
  EXPECT_THROW(io::system_from_json(json::parse(R"({"A":[[0.8]],"Q":[[-0.1]]})")), Error);
}

TEST(JsonIo, TrainConfigRoundTrip) {
  TrainConfig cfg;
  cfg.loss = LossKind::l1;
  cfg.optimizer = OptimizerKind::adam;
  cfg.schedule = Schedule::inv_sqrt_t;
  cfg.batch_size = 32;
  cfg.seed = 123456789012345ULL;
  const auto back = io::train_config_from_json(io::to_json(cfg));
  EXPECT_EQ(io::to_json(back), io::to_json(cfg));
  EXPECT_THROW(io::train_config_from_json(json::parse(R"({"loss":"spo"})")), Error);
  EXPECT_THROW(io::train_config_from_json(json::parse(R"({"lr":0.1})")), Error);
  EXPECT_THROW(io::train_config_from_json(json::parse(R"({"max_epochs":-3})")), Error);
}

TEST(JsonIo, ExperimentRoundTrip) {
  ExperimentConfig cfg;
  cfg.lag.use_pacf = true;
  cfg.lag.max_lag = 10;
  cfg.losses = {TrainConfig{}};
  const auto back = io::experiment_from_json(io::to_json(cfg));
  EXPECT_EQ(io::to_json(back), io::to_json(cfg));
}

TEST(JsonIo, ShippedConfigsParse) {
  const std::filesystem::path dir = SPOAR_CONFIG_DIR;
  for (const char* name : {"benchmark_deg.json", "benchmark_deg8.json", "benchmark_a12.json"}) {
    const auto cfg = io::experiment_from_json(io::read_json_file(dir / name));
    EXPECT_EQ(cfg.losses.size(), 3u) << name;
    EXPECT_EQ(cfg.trials, 50u) << name;
  }
  EXPECT_NO_THROW(io::system_from_json(io::read_json_file(dir / "sys.json")));
}

TEST(JsonIo, Overrides) {
  json doc = json::parse(R"({"system":{"deg":2},"losses":[{"loss":"spo+"},{"loss":"l2"}]})");
  io::apply_override(doc, "system.deg=8");
  io::apply_override(doc, "losses.1.step_size=0.5");
  io::apply_override(doc, "region.kind=ball");
  io::apply_override(doc, "system.A=[[1,0],[0,1]]");
  EXPECT_EQ(doc["system"]["deg"], 8);
  EXPECT_EQ(doc["losses"][1]["step_size"], 0.5);
  EXPECT_EQ(doc["region"]["kind"], "ball");
  EXPECT_EQ(doc["system"]["A"][1][1], 1);
  EXPECT_THROW(io::apply_override(doc, "nokey"), Error);
  EXPECT_THROW(io::apply_override(doc, "losses.5.seed=1"), Error);
  EXPECT_THROW(io::apply_override(doc, "system.deg.x=1"), Error);
}

TEST(JsonIo, TrajectoryCsvRoundTrip) {
  const auto traj = simulate(SystemSpec::benchmark(3), 50, 4).data;
  std::stringstream ss;
  write_trajectory_csv(ss, traj);
  const auto back = io::read_trajectory_csv(ss);
  ASSERT_EQ(back.size(), traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) EXPECT_EQ(back[i], traj[i]);
  std::stringstream bad("t,y1,y2\n1,2\n");
  EXPECT_THROW(io::read_trajectory_csv(bad), Error);
}

TEST(JsonIo, AtomicWriteReplacesFile) {
  const auto path = std::filesystem::temp_directory_path() / "spoar_atomic_test" / "out.json";
  io::write_atomic(path, "first");
  io::write_atomic(path, "second");
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(content, "second");
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove_all(path.parent_path());
}
