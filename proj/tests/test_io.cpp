#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "gltt/checkpoint.hpp"
#include "gltt/config.hpp"
#include "gltt/error.hpp"
#include "gltt/model.hpp"
#include "gltt/sequence.hpp"
#include "gltt/synthetic.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace gltt {
namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("gltt_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  TempDir dir;
  std::mt19937_64 rng(1);
  ParamStore store(42);
  store.add("a", 3, 4).value = test::random_matrix(rng, 3, 4, -1e3, 1e3);
  store.add("b.c", 1, 2).value = Matrix{{1.0 / 3.0, -0.0}};
  const std::string cfg = "{\"x\": 1,\n \"y\": \"two words\"}";
  save_checkpoint(dir / "c.gltt", store, cfg);
  const Checkpoint ck = load_checkpoint(dir / "c.gltt");
  EXPECT_TRUE(ck.params.values_equal(store));
  EXPECT_EQ(ck.params.seed(), 42u);
  EXPECT_EQ(ck.config_json, cfg);
}

TEST(Checkpoint, ModelParametersSurviveRoundTrip) {
  TempDir dir;
  ModelConfig m;
  m.backbone = {32, 64, 16, 8, 4, 6};
  m.attention = {8, 4, 4, 4};
  m.proposals = 6;
  const ParamStore params = init_model_params(m, 5);
  save_checkpoint(dir / "m.gltt", params, dump_model_config(m));
  const Checkpoint ck = load_checkpoint(dir / "m.gltt");
  EXPECT_TRUE(ck.params.values_equal(params));
  EXPECT_NO_THROW(Model(m, ck.params));
}

TEST(Checkpoint, BadInputsMapToErrors) {
  TempDir dir;
  EXPECT_THROW(load_checkpoint(dir / "missing.gltt"), DataError);
  write_file(dir / "magic.gltt", "NOT-A-CHECKPOINT 1\n");
  EXPECT_THROW(load_checkpoint(dir / "magic.gltt"), VersionError);
  write_file(dir / "version.gltt", "GLTT-CHECKPOINT 99\n");
  EXPECT_THROW(load_checkpoint(dir / "version.gltt"), VersionError);
  write_file(dir / "short.gltt", "GLTT-CHECKPOINT 1\nseed 1\nconfig 2\n{}\nparams 1\nw 2 2\n1 2\n");
  EXPECT_THROW(load_checkpoint(dir / "short.gltt"), DataError);
}

Sequence small_sequence() {
  SyntheticSpec spec;
  spec.frames = 4;
  spec.target_points = 20;
  spec.clutter = 5;
  spec.category = "van";
  return generate_synthetic_sequence(spec);
}

TEST(SequenceFiles, RoundTripIsBitExact) {
  TempDir dir;
  Sequence seq = small_sequence();
  seq.name = "s";
  seq.frames[2].gt.reset();
  write_sequence(dir / "s", seq);
  const Sequence back = read_sequence(dir / "s");
  EXPECT_EQ(back.category, "van");
  ASSERT_EQ(back.frames.size(), seq.frames.size());
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    EXPECT_EQ(back.frames[k].cloud.coords, seq.frames[k].cloud.coords);
    ASSERT_EQ(back.frames[k].gt.has_value(), seq.frames[k].gt.has_value());
    if (seq.frames[k].gt) {
      EXPECT_EQ(back.frames[k].gt->center, seq.frames[k].gt->center);
      EXPECT_EQ(back.frames[k].gt->size, seq.frames[k].gt->size);
      EXPECT_EQ(back.frames[k].gt->yaw, seq.frames[k].gt->yaw);
    }
  }
}

TEST(SequenceFiles, DatasetIsReadInNameOrder) {
  TempDir dir;
  std::vector<Sequence> seqs(3, small_sequence());
  write_dataset(dir.path.string(), seqs);
  fs::create_directories(dir.path / "not_a_sequence");
  const auto back = read_dataset(dir.path.string());
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].name, "seq_000");
  EXPECT_EQ(back[2].name, "seq_002");
}

TEST(SequenceFiles, MalformedInputsAreDataErrors) {
  TempDir dir;
  EXPECT_THROW(read_sequence(dir / "nowhere"), DataError);
  write_sequence(dir / "s", small_sequence());
  write_file(dir / "s/manifest.txt", "gltt-sequence 2\n");
  EXPECT_THROW(read_sequence(dir / "s"), Error);
  write_sequence(dir / "t", small_sequence());
  std::ifstream in(dir / "t/manifest.txt");
  std::string line, first_points;
  for (int i = 0; i < 4 && std::getline(in, line); ++i) first_points = line;
  write_file(dir / ("t/" + first_points), "1 2\n");
  EXPECT_THROW(read_sequence(dir / "t"), DataError);

  Sequence one;
  one.frames.resize(1);
  EXPECT_THROW(one.validate(false), DataError);
}

TEST(ConfigFile, RoundTripAndDefaults) {
  const Config defaults = parse_config("{}");
  EXPECT_EQ(dump_config(parse_config(dump_config(defaults))), dump_config(defaults));
  const Config c = parse_config(R"({"seed": 9, "model": {"sparse_count": 8},
                                    "loss": {"lambda_score": 2.5}, "train": {"lr": 0.05}})");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.model.attention.sparse_count, 8u);
  EXPECT_EQ(c.weights.score, 2.5);
  EXPECT_EQ(c.train.sgd.lr, 0.05);
  EXPECT_EQ(dump_config(parse_config(dump_config(c))), dump_config(c));
}

TEST(ConfigFile, InvalidConfigsAreConfigErrors) {
  for (const char* text : {"not json", "[]", R"({"sed": 1})", R"({"model": {"seeds": "many"}})",
                           R"({"model": {"sparse_count": 1000}})", R"({"model": {"proposals": 500}})",
                           R"({"loss": {"lambda_score": -1}})", R"({"train": {"lr_final": 2}})",
                           R"({"model": {"feature_dim": 0}})", R"({"model": {"head_norm": "group"}})"})
    EXPECT_THROW(parse_config(text), ConfigError) << text;
}

TEST(ConfigFile, SyntheticSpecRoundTrip) {
  SyntheticSpec spec;
  spec.shape = ShapeKind::cylinder_shell;
  spec.sequences = 4;
  const SyntheticSpec back = parse_synthetic_spec(dump_synthetic_spec(spec));
  EXPECT_EQ(dump_synthetic_spec(back), dump_synthetic_spec(spec));
  EXPECT_THROW(parse_synthetic_spec(R"({"frames": 1})"), ConfigError);
  EXPECT_THROW(parse_synthetic_spec(R"({"shape": "sphere"})"), ConfigError);
}

}  // namespace
}  // namespace gltt
