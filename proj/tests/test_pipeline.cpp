#include <gtest/gtest.h>

#include <cmath>

#include "gltt/error.hpp"
#include "gltt/pipeline.hpp"
#include "gltt/synthetic.hpp"
#include "support.hpp"

namespace gltt {
namespace {

Config tiny_config() {
  Config cfg;
  cfg.seed = 4;
  auto& m = cfg.model;
  m.backbone.template_points = 48;
  m.backbone.search_points = 96;
  m.backbone.seeds = 24;
  m.backbone.feature_dim = 8;
  m.backbone.group_size = 6;
  m.backbone.point_hidden = 8;
  m.attention.feature_dim = 8;
  m.attention.latent_dim = 6;
  m.attention.sparse_count = 8;
  m.attention.knn_count = 8;
  m.proposals = 8;
  cfg.train.steps = 20;
  SyntheticSpec spec;
  spec.frames = 6;
  spec.target_points = 128;
  spec.clutter = 30;
  cfg.data.synthetic = spec;
  cfg.validate();
  return cfg;
}

TEST(Crop, BoundaryIsInclusiveAndRowsKeepOrder) {
  const Box3D prev{{0, 0, 0}, {2, 2, 2}, 0.0};
  PointCloud cloud{Matrix{{1.5, 0, 0}, {0, 0, 0}, {1.5000001, 0, 0}, {0, -1.5, 1.5}}, {}};
  std::mt19937_64 rng(1);
  const CropResult c = crop_search_region(cloud, prev, 0.5, 3, rng);
  EXPECT_EQ(c.raw_count, 3u);
  EXPECT_EQ(c.cloud.coords, (Matrix{{1.5, 0, 0}, {0, 0, 0}, {0, -1.5, 1.5}}));
}

TEST(Crop, EmptyRegionAndResampling) {
  const Box3D prev{{0, 0, 0}, {1, 1, 1}, 0.0};
  std::mt19937_64 rng(2);
  PointCloud far{Matrix{{10, 0, 0}, {0, 10, 0}}, {}};
  const CropResult empty = crop_search_region(far, prev, 1.0, 8, rng);
  EXPECT_TRUE(empty.empty());
  EXPECT_EQ(empty.cloud.size(), 0u);

  PointCloud cloud{test::random_coords(rng, 30, 1.0), {}};
  const CropResult up = crop_search_region(cloud, prev, 5.0, 50, rng);
  EXPECT_EQ(up.raw_count, 30u);
  EXPECT_EQ(up.cloud.size(), 50u);
  const CropResult down = crop_search_region(cloud, prev, 5.0, 10, rng);
  EXPECT_EQ(down.cloud.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    bool found = false;
    for (std::size_t j = 0; j < 30 && !found; ++j)
      found = cloud.coords(j, 0) == down.cloud.coords(i, 0) && cloud.coords(j, 1) == down.cloud.coords(i, 1);
    EXPECT_TRUE(found);
  }
  EXPECT_THROW(crop_search_region(cloud, prev, 0.0, 10, rng), ParameterError);
}

TEST(Crop, HugeMarginTakesWholeCloud) {
  std::mt19937_64 rng(3);
  PointCloud cloud{test::random_coords(rng, 40, 20.0), {}};
  const CropResult c = crop_search_region(cloud, {{0, 0, 0}, {1, 1, 1}, 0.4}, 1e6, 40, rng);
  EXPECT_EQ(c.raw_count, 40u);
  EXPECT_EQ(c.cloud.coords, cloud.coords);
}

TEST(Frames, BoxRoundTripAndPointTransform) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const Box3D ref{{u(rng), u(rng), u(rng)}, {1, 2, 3}, u(rng)};
    const Box3D world{{u(rng), u(rng), u(rng)}, {2, 1, 4}, u(rng)};
    const Box3D back = box_from_frame(box_in_frame(world, ref), ref);
    for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(back.center[a], world.center[a], 1e-12);
    EXPECT_NEAR(wrap_angle(back.yaw - world.yaw), 0.0, 1e-12);
    EXPECT_EQ(back.size, world.size);
    const PointCloud p{Matrix{{world.center[0], world.center[1], world.center[2]}}, {}};
    const PointCloud q = to_box_frame(p, ref);
    const Box3D local = box_in_frame(world, ref);
    for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(q.coords(0, a), local.center[a], 1e-12);
  }
}

TEST(Template, PointsLieInsideTheCenteredBox) {
  const Sequence seq = generate_synthetic_sequence(*tiny_config().data.synthetic);
  std::mt19937_64 rng(5);
  const Box3D box = seq.template_box();
  const PointCloud t = make_template(seq.frames[0].cloud, box, 64, rng);
  EXPECT_EQ(t.size(), 64u);
  const Box3D centered{{0, 0, 0}, box.size, 0.0};
  for (auto in : points_in_box(t.coords, centered)) EXPECT_TRUE(in);
  PointCloud far{Matrix{{50, 50, 50}}, {}};
  EXPECT_THROW(make_template(far, box, 8, rng), DataError);
}

TEST(Synthetic, SameSeedSameSequence) {
  const SyntheticSpec spec = *tiny_config().data.synthetic;
  const Sequence a = generate_synthetic_sequence(spec), b = generate_synthetic_sequence(spec);
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    EXPECT_EQ(a.frames[k].cloud.coords, b.frames[k].cloud.coords);
    EXPECT_EQ(a.frames[k].gt->center, b.frames[k].gt->center);
  }
  SyntheticSpec other = spec;
  other.seed = spec.seed + 1;
  EXPECT_NE(generate_synthetic_sequence(other).frames[1].cloud.coords, a.frames[1].cloud.coords);
}

TEST(Synthetic, NoiselessTargetMovesRigidly) {
  for (ShapeKind shape : {ShapeKind::box_surface, ShapeKind::l_shape, ShapeKind::cylinder_shell}) {
    SyntheticSpec spec = *tiny_config().data.synthetic;
    spec.shape = shape;
    spec.noise = 0.0;
    spec.clutter = 0;
    const Sequence seq = generate_synthetic_sequence(spec);
    for (std::size_t k = 0; k + 1 < seq.frames.size(); ++k) {
      const Box3D& a = *seq.frames[k].gt;
      const Box3D& b = *seq.frames[k + 1].gt;
      const Matrix& pa = seq.frames[k].cloud.coords;
      const Matrix& pb = seq.frames[k + 1].cloud.coords;
      ASSERT_EQ(pa.rows(), pb.rows());
      for (std::size_t i = 0; i < pa.rows(); ++i) {
        const Vec3 mapped = b.to_world(a.to_local({pa(i, 0), pa(i, 1), pa(i, 2)}));
        for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(mapped[c], pb(i, c), 1e-9);
      }
    }
  }
}

TEST(Synthetic, GroundTruthContainsTargetPoints) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec spec = *tiny_config().data.synthetic;
    spec.clutter = 0;
    spec.noise = 0.02;
    spec.seed = seed;
    const Sequence seq = generate_synthetic_sequence(spec);
    for (const Frame& f : seq.frames) {
      std::size_t inside = 0;
      for (auto in : points_in_box(f.cloud.coords, *f.gt)) inside += in ? 1 : 0;
      EXPECT_GE(static_cast<double>(inside), 0.95 * f.cloud.size());
    }
  }
}

TEST(Synthetic, ClutterStaysOutsideTheBox) {
  SyntheticSpec spec = *tiny_config().data.synthetic;
  spec.noise = 0.0;
  spec.clutter = 200;
  const Sequence seq = generate_synthetic_sequence(spec);
  for (const Frame& f : seq.frames) {
    std::size_t inside = 0;
    for (auto in : points_in_box(f.cloud.coords, *f.gt)) inside += in ? 1 : 0;
    EXPECT_EQ(inside, spec.target_points);
  }
}

TEST(Tracker, DeterministicAndKeepsTemplateSize) {
  Config cfg = tiny_config();
  Model model(cfg.model, cfg.seed);
  const Sequence seq = generate_synthetic_sequence(*cfg.data.synthetic);
  const auto a = track_sequence(model, seq, cfg.tracker, 7);
  const auto b = track_sequence(model, seq, cfg.tracker, 7);
  ASSERT_EQ(a.size(), seq.frames.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].center, b[k].center);
    EXPECT_EQ(a[k].yaw, b[k].yaw);
    EXPECT_EQ(a[k].size, seq.template_box().size);
  }
}

TEST(Tracker, EmptyFrameIsFlaggedAndKeepsPreviousBox) {
  Config cfg = tiny_config();
  Model model(cfg.model, cfg.seed);
  Sequence seq = generate_synthetic_sequence(*cfg.data.synthetic);
  seq.frames[2].cloud.coords = Matrix{{100, 100, 100}};
  std::size_t flagged = 0;
  const auto boxes = track_sequence(model, seq, cfg.tracker, 7, &flagged);
  EXPECT_EQ(flagged, 1u);
  EXPECT_EQ(boxes[2].center, boxes[1].center);
  Tracker fresh(model, cfg.tracker, 1);
  EXPECT_THROW(fresh.track_frame(seq.frames[1]), UsageError);
}

TEST(Training, ZeroLearningRateLeavesParametersBitwise) {
  Config cfg = tiny_config();
  cfg.train.sgd.lr = 0.0;
  Model model(cfg.model, cfg.seed);
  const ParamStore before = model.params();
  const auto result = train(model, load_training_data(cfg), cfg);
  EXPECT_EQ(result.curve.size(), cfg.train.steps);
  EXPECT_TRUE(model.params().values_equal(before));
}

TEST(Training, SameSeedSameCurve) {
  Config cfg = tiny_config();
  const auto data = load_training_data(cfg);
  Model a(cfg.model, cfg.seed), b(cfg.model, cfg.seed);
  const auto ca = train(a, data, cfg).curve, cb = train(b, data, cfg).curve;
  ASSERT_EQ(ca.size(), cb.size());
  for (std::size_t i = 0; i < ca.size(); ++i) EXPECT_EQ(ca[i].total, cb[i].total);
  EXPECT_TRUE(a.params().values_equal(b.params()));
}

TEST(Training, HookRunsOnSchedule) {
  Config cfg = tiny_config();
  cfg.train.steps = 7;
  cfg.train.checkpoint_every = 3;
  Model model(cfg.model, cfg.seed);
  std::vector<std::size_t> steps;
  train(model, load_training_data(cfg), cfg, [&](std::size_t s, const ParamStore&) { steps.push_back(s); });
  EXPECT_EQ(steps, (std::vector<std::size_t>{3, 6}));
}

TEST(Training, LossDecreasesOnOneScene) {
  Config cfg = tiny_config();
  cfg.train.steps = 200;
  cfg.train.batch_size = 2;
  Model model(cfg.model, cfg.seed);
  const auto curve = train(model, load_training_data(cfg), cfg).curve;
  auto window = [&](std::size_t from) {
    double s = 0.0;
    for (std::size_t i = from; i < from + 20; ++i) s += curve[i].total;
    return s / 20.0;
  };
  EXPECT_LT(window(180), window(0));
}

}  // namespace
}  // namespace gltt
