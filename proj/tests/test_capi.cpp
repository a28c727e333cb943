#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gltt/gltt.h"

namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"({
  "seed": 2,
  "model": {"template_points": 32, "search_points": 64, "seeds": 16, "feature_dim": 8,
            "group_size": 4, "point_hidden": 6, "latent_dim": 4, "sparse_count": 4,
            "knn_count": 4, "proposals": 6},
  "train": {"steps": 6, "checkpoint_every": 3},
  "data": {"synthetic": {"frames": 5, "target_points": 64, "clutter": 10}, "eval_sequences": 2}
})";

const char* kTinySpec = R"({"frames": 4, "target_points": 64, "clutter": 10, "sequences": 2})";

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("gltt_capi_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STRNE(gltt_version(), "");
  EXPECT_STREQ(gltt_status_name(GLTT_OK), "ok");
  EXPECT_STREQ(gltt_status_name(GLTT_ERR_CONFIG), "config");
  EXPECT_STREQ(gltt_status_name(GLTT_ERR_NUMERIC), "numeric");
}

TEST(CApi, MetricsAndIou) {
  const double ones[4] = {1, 1, 1, 1};
  double v = 0;
  ASSERT_EQ(gltt_success_auc(ones, 4, &v), GLTT_OK);
  EXPECT_NEAR(v, 99.75, 1e-9);
  const double errs[2] = {1, 1};
  ASSERT_EQ(gltt_precision_auc(errs, 2, &v), GLTT_OK);
  EXPECT_NEAR(v, 49.75, 1e-9);
  EXPECT_EQ(gltt_success_auc(ones, 0, &v), GLTT_ERR_METRIC);
  EXPECT_STRNE(gltt_last_error(), "");
  EXPECT_EQ(gltt_success_auc(nullptr, 4, &v), GLTT_ERR_USAGE);

  const double a[7] = {0, 0, 0, 2, 2, 2, 0}, b[7] = {1, 0, 0, 2, 2, 2, 0};
  ASSERT_EQ(gltt_box_iou(a, b, &v), GLTT_OK);
  EXPECT_NEAR(v, 1.0 / 3.0, 1e-12);
  const double bad[7] = {0, 0, 0, -1, 2, 2, 0};
  EXPECT_NE(gltt_box_iou(a, bad, &v), GLTT_OK);
}

TEST(CApi, ModelHandles) {
  TempDir dir;
  gltt_model* m = nullptr;
  ASSERT_EQ(gltt_model_create(kTinyConfig, &m), GLTT_OK) << gltt_last_error();
  size_t n = 0;
  ASSERT_EQ(gltt_model_parameter_count(m, &n), GLTT_OK);
  EXPECT_GT(n, 0u);
  ASSERT_EQ(gltt_model_save(m, (dir / "m.gltt").c_str()), GLTT_OK) << gltt_last_error();

  gltt_model* loaded = nullptr;
  ASSERT_EQ(gltt_model_load((dir / "m.gltt").c_str(), &loaded), GLTT_OK) << gltt_last_error();
  size_t n2 = 0;
  gltt_model_parameter_count(loaded, &n2);
  EXPECT_EQ(n2, n);

  ASSERT_EQ(gltt_generate(kTinySpec, (dir / "data").c_str()), GLTT_OK) << gltt_last_error();
  ASSERT_EQ(gltt_model_track(loaded, (dir / "data/seq_000").c_str(), (dir / "a.csv").c_str()), GLTT_OK)
      << gltt_last_error();
  ASSERT_EQ(gltt_track((dir / "m.gltt").c_str(), (dir / "data/seq_000").c_str(), (dir / "b.csv").c_str()),
            GLTT_OK);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_EQ(slurp(dir / "a.csv").rfind("frame,cx,cy,cz,w,h,l,yaw\n", 0), 0u);

  gltt_model_destroy(m);
  gltt_model_destroy(loaded);
  gltt_model_destroy(nullptr);

  gltt_model* none = nullptr;
  EXPECT_EQ(gltt_model_create("{\"model\": {\"seeds\": -1}}", &none), GLTT_ERR_CONFIG);
  EXPECT_EQ(none, nullptr);
  EXPECT_EQ(gltt_model_load((dir / "missing.gltt").c_str(), &none), GLTT_ERR_DATA);
  EXPECT_EQ(gltt_model_create(kTinyConfig, nullptr), GLTT_ERR_USAGE);
}

TEST(CApi, TrainEvaluateAndAblate) {
  TempDir dir;
  ASSERT_EQ(gltt_train(kTinyConfig, (dir / "run").c_str()), GLTT_OK) << gltt_last_error();
  for (const char* f : {"config.json", "loss.csv", "checkpoint.gltt", "step_000003.gltt", "step_000006.gltt"})
    EXPECT_TRUE(fs::exists(dir.path / "run" / f)) << f;
  EXPECT_EQ(slurp(dir / "run/loss.csv").rfind("step,l_off,l_imp,l_score,l_center_rot,total\n", 0), 0u);

  ASSERT_EQ(gltt_generate(kTinySpec, (dir / "data").c_str()), GLTT_OK);
  ASSERT_EQ(gltt_evaluate((dir / "run/checkpoint.gltt").c_str(), (dir / "data").c_str(),
                          (dir / "r.json").c_str(), (dir / "frames.csv").c_str()),
            GLTT_OK)
      << gltt_last_error();
  EXPECT_NE(slurp(dir / "r.json").find("\"success\""), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.path / "frames.csv"));
  EXPECT_EQ(gltt_evaluate((dir / "run/checkpoint.gltt").c_str(), (dir / "nothing").c_str(),
                          (dir / "r2.json").c_str(), nullptr),
            GLTT_ERR_DATA);

  ASSERT_EQ(gltt_ablate(kTinyConfig, "m", "4", (dir / "ab.csv").c_str()), GLTT_OK) << gltt_last_error();
  EXPECT_EQ(slurp(dir / "ab.csv").rfind("axis,value,", 0), 0u);
  EXPECT_EQ(gltt_ablate(kTinyConfig, "q", "4", (dir / "ab.csv").c_str()), GLTT_ERR_CONFIG);
  EXPECT_EQ(gltt_ablate(kTinyConfig, "m", "5", (dir / "ab.csv").c_str()), GLTT_ERR_CONFIG);
}

TEST(CApi, CheckpointConfigMismatchIsVersionError) {
  TempDir dir;
  gltt_model* m = nullptr;
  ASSERT_EQ(gltt_model_create(kTinyConfig, &m), GLTT_OK);
  ASSERT_EQ(gltt_model_save(m, (dir / "m.gltt").c_str()), GLTT_OK);
  gltt_model_destroy(m);
  std::string text = slurp(dir / "m.gltt");
  const auto at = text.find("backbone.proj.w");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 15, "backbone.proj.x");
  write_file(dir / "bad.gltt", text);
  EXPECT_EQ(gltt_model_load((dir / "bad.gltt").c_str(), &m), GLTT_ERR_VERSION);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GLTT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  write_file(dir / "tiny.json", kTinyConfig);
  write_file(dir / "spec.json", kTinySpec);
  write_file(dir / "bad.json", R"({"model": {"sparse_count": 999}})");
  write_file(dir / "nan.json", R"({"model": {"template_points": 32, "search_points": 64, "seeds": 16,
      "feature_dim": 8, "group_size": 4, "point_hidden": 6, "latent_dim": 4, "sparse_count": 4,
      "knn_count": 4, "proposals": 6},
      "train": {"steps": 10, "lr": 1e200, "momentum": 0, "grad_clip": 0},
      "data": {"synthetic": {"frames": 5, "target_points": 64, "clutter": 10}}})");

  EXPECT_EQ(run_cli("gen --spec " + (dir / "spec.json") + " --out " + (dir / "data")), 0);
  EXPECT_EQ(run_cli("train --config " + (dir / "tiny.json") + " --out " + (dir / "run")), 0);
  EXPECT_EQ(run_cli("track --checkpoint " + (dir / "run/checkpoint.gltt") + " --sequence " +
                    (dir / "data/seq_001") + " --out " + (dir / "t.csv")), 0);
  EXPECT_EQ(run_cli("eval --checkpoint " + (dir / "run/checkpoint.gltt") + " --data " + (dir / "data") +
                    " --report " + (dir / "r.json")), 0);
  EXPECT_TRUE(fs::exists(dir.path / "r_frames.csv"));
  EXPECT_EQ(run_cli("ablate --config " + (dir / "tiny.json") + " --axis n --values 8,16 --out " +
                    (dir / "ab.csv")), 0);

  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("train --out " + (dir / "x")), 2);
  EXPECT_EQ(run_cli("train --config " + (dir / "bad.json") + " --out " + (dir / "x")), 2);
  EXPECT_EQ(run_cli("train --config " + (dir / "missing.json") + " --out " + (dir / "x")), 2);
  EXPECT_EQ(run_cli("ablate --axis k --values 1 --out " + (dir / "x.csv")), 2);
  EXPECT_EQ(run_cli("track --checkpoint " + (dir / "missing.gltt") + " --sequence " +
                    (dir / "data/seq_000") + " --out " + (dir / "t.csv")), 3);
  EXPECT_EQ(run_cli("eval --checkpoint " + (dir / "run/checkpoint.gltt") + " --data " + (dir / "empty") +
                    " --report " + (dir / "r.json")), 3);
  EXPECT_EQ(run_cli("train --config " + (dir / "nan.json") + " --out " + (dir / "nan")), 4);
}

}  // namespace
