#include <gtest/gtest.h>

#include <set>

#include "gltt/error.hpp"
#include "gltt/head.hpp"
#include "gltt/voting.hpp"
#include "support.hpp"

namespace gltt {
namespace {

constexpr std::size_t D = 5;

TEST(Vote, ZeroFinalLayerLeavesSeedsUnchanged) {
  std::mt19937_64 rng(1);
  ParamStore store;
  init_voting(store, D, NormKind::layer, rng);
  store.at(kVoting + ".l2.w").value.fill(0.0);
  store.at(kVoting + ".l2.b").value.fill(0.0);
  const Matrix f = test::random_matrix(rng, 6, D), c = test::random_coords(rng, 6);
  Tape t;
  const VoteSet v = vote(t.constant(f), c, store, NormKind::layer).values();
  EXPECT_EQ(v.features, f);
  EXPECT_EQ(v.coords, c);
  EXPECT_EQ(v.offsets, Matrix(6, 3));
}

TEST(Vote, ResidualBookkeepingIsExact) {
  std::mt19937_64 rng(2);
  for (NormKind norm : {NormKind::none, NormKind::layer, NormKind::batch}) {
    ParamStore store;
    init_voting(store, D, norm, rng);
    const Matrix f = test::random_matrix(rng, 9, D), c = test::random_coords(rng, 9);
    Tape t;
    const VoteSet v = vote(t.constant(f), c, store, norm).values();
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ(v.coords(i, a), c(i, a) + v.offsets(i, a));
  }
}

TEST(Vote, RejectsMismatchedRows) {
  std::mt19937_64 rng(3);
  ParamStore store;
  init_voting(store, D, NormKind::layer, rng);
  Tape t;
  EXPECT_THROW(vote(t.constant(Matrix(4, D)), Matrix(5, 3), store, NormKind::layer), ShapeError);
}

TEST(Vote, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  ParamStore store;
  init_voting(store, D, NormKind::layer, rng);
  const Matrix f = test::random_matrix(rng, 6, D), c = test::random_coords(rng, 6);
  const auto res = test::check_gradients(store, [&](Tape& t) {
    const VoteVars v = vote(t.constant(f), c, store, NormKind::layer);
    return add(mean(v.coords), scale(mean(v.features), 0.3));
  }, 1e-4);
  EXPECT_TRUE(res.ok) << res.worst;
}

TEST(SelectProposals, IdenticalVotesTieToLowestIndices) {
  const ProposalSet p = select_proposals(Matrix(8, 3, 1.5), 5);
  EXPECT_EQ(p.source_indices, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(select_proposals(Matrix(8, 3, 1.5), 1).source_indices, (std::vector<std::size_t>{0}));
}

TEST(SelectProposals, MatchesFpsOracleAndCopiesCenters) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t M = 10 + rng() % 40, K = 1 + rng() % (M - 1);
    const Matrix votes = test::random_coords(rng, M);
    const ProposalSet p = select_proposals(votes, K);
    EXPECT_EQ(p.source_indices, test::oracle_fps(votes, K, 0));
    EXPECT_EQ(std::set<std::size_t>(p.source_indices.begin(), p.source_indices.end()).size(), K);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ(p.centers(k, a), votes(p.source_indices[k], a));
  }
}

TEST(SelectProposals, RequiresFewerProposalsThanVotes) {
  EXPECT_THROW(select_proposals(Matrix(4, 3), 4), ParameterError);
  EXPECT_THROW(select_proposals(Matrix(4, 3), 0), ParameterError);
}

struct HeadFixture {
  std::mt19937_64 rng{7};
  ParamStore store;
  HeadConfig cfg;
  Matrix f, c;

  explicit HeadFixture(HeadConfig hc = {}) : cfg(hc) {
    init_voting(store, D, NormKind::layer, rng);
    init_head(store, D, cfg, rng);
    f = test::random_matrix(rng, 12, D);
    c = test::random_coords(rng, 12);
  }
  HeadOutput run(Tape& t) {
    const VoteVars v = vote(t.constant(f), c, store, NormKind::layer);
    const ProposalSet p = select_proposals(v.coords.value(), 6);
    return predict(p, v, store, cfg).values();
  }
};

TEST(Head, ZeroWeightHeadsGiveNeutralOutputs) {
  HeadFixture h;
  for (std::size_t i = 0; i < h.store.entry_count(); ++i)
    if (h.store.entry(i).name.rfind("head.", 0) == 0) h.store.entry(i).value.fill(0.0);
  Tape t;
  const HeadOutput out = h.run(t);
  EXPECT_EQ(out.scores, std::vector<double>(6, 0.5));
  EXPECT_EQ(out.yaws, std::vector<double>(6, 0.0));
  EXPECT_EQ(out.refinements, Matrix(6, 3));
}

TEST(Head, ScoresInOpenUnitInterval) {
  HeadFixture h;
  Tape t;
  for (double s : h.run(t).scores) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
}

TEST(Head, PerturbingOneHeadLeavesOthersBitwiseUnchanged) {
  HeadFixture h;
  Tape t0;
  const HeadOutput base = h.run(t0);
  for (auto& [prefix, which] : std::vector<std::pair<std::string, int>>{
           {kScoreHead, 0}, {kYawHead, 1}, {kCenterHead, 2}}) {
    HeadFixture g;
    for (std::size_t i = 0; i < g.store.entry_count(); ++i)
      if (g.store.entry(i).name.rfind(prefix, 0) == 0)
        for (double& v : g.store.entry(i).value.values()) v += 0.37;
    Tape t;
    const HeadOutput out = g.run(t);
    if (which != 0) EXPECT_EQ(out.scores, base.scores) << prefix;
    if (which != 1) EXPECT_EQ(out.yaws, base.yaws) << prefix;
    if (which != 2) EXPECT_EQ(out.refinements, base.refinements) << prefix;
  }
}

TEST(Head, GradientsOfAllHeadsMatchFiniteDifferences) {
  for (bool decoupled : {true, false}) {
    HeadFixture h(HeadConfig{NormKind::layer, decoupled});
    const Matrix w = test::random_matrix(h.rng, 6, 3);
    const auto res = test::check_gradients(h.store, [&](Tape& t) {
      const VoteVars v = vote(t.constant(h.f), h.c, h.store, NormKind::layer);
      const ProposalSet p = select_proposals(v.coords.value(), 6);
      const HeadVars hv = predict(p, v, h.store, h.cfg);
      return add(add(sum(hv.scores), scale(sum(hv.yaws), 0.5)),
                 sum(mul(add(hv.centers, hv.refinements), t.constant(w))));
    }, 1e-4);
    EXPECT_TRUE(res.ok) << "decoupled=" << decoupled << ": " << res.worst;
  }
}

ProposalSet two_proposals() {
  ProposalSet p;
  p.centers = Matrix{{1, 0, 0}, {0, 2, 0}};
  p.source_indices = {0, 1};
  return p;
}

TEST(AssembleBox, PicksHighestScoreAndCopiesSize) {
  const ProposalSet p = two_proposals();
  HeadOutput out{{0.9, 0.2}, {0.1, -0.4}, Matrix{{0.5, 0, 0}, {0, 0, 0}}};
  const Vec3 size{2, 1.5, 4};
  const Box3D b = assemble_box(out, p, size);
  EXPECT_EQ(b.center, (Vec3{1.5, 0, 0}));
  EXPECT_EQ(b.yaw, 0.1);
  EXPECT_EQ(b.size, size);
  out.scores = {0.4, 0.4};  // tie → lowest index
  EXPECT_EQ(assemble_box(out, p, size).center[0], 1.5);
  out.scores = {0.1, 0.7};
  EXPECT_EQ(assemble_box(out, p, size).center, (Vec3{0, 2, 0}));
}

TEST(AssembleBox, SingleProposalAndMonotoneInvariance) {
  ProposalSet one;
  one.centers = Matrix{{3, 3, 3}};
  one.source_indices = {0};
  HeadOutput out{{0.01}, {0.0}, Matrix(1, 3)};
  EXPECT_EQ(assemble_box(out, one, {1, 1, 1}).center, (Vec3{3, 3, 3}));

  std::mt19937_64 rng(8);
  ProposalSet p;
  p.centers = test::random_coords(rng, 10);
  for (std::size_t i = 0; i < 10; ++i) p.source_indices.push_back(i);
  HeadOutput h{{}, std::vector<double>(10, 0.0), Matrix(10, 3)};
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int i = 0; i < 10; ++i) h.scores.push_back(u(rng));
  const Box3D ref = assemble_box(h, p, {1, 1, 1});
  HeadOutput g = h;
  for (double& s : g.scores) s = 1.0 / (1.0 + std::exp(-3.0 * std::log(s / (1 - s)) - 2.0));
  EXPECT_EQ(assemble_box(g, p, {1, 1, 1}).center, ref.center);
  EXPECT_THROW(assemble_box(HeadOutput{}, ProposalSet{}, {1, 1, 1}), Error);
}

}  // namespace
}  // namespace gltt
