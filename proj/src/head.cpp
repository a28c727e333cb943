#include "gltt/head.hpp"

#include "gltt/error.hpp"

namespace gltt {

namespace {

MlpSpec head_spec(std::size_t feature_dim, std::size_t out, NormKind norm) {
  const std::size_t w = feature_dim + 3;
  return MlpSpec::three_layer(w, w, w, out, norm);
}

std::vector<double> column(const Matrix& m, std::size_t c) {
  std::vector<double> v(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, c);
  return v;
}

}  // namespace

HeadOutput HeadVars::values() const {
  return {column(scores.value(), 0), column(yaws.value(), 0), refinements.value()};
}

void init_head(ParamStore& store, std::size_t feature_dim, const HeadConfig& cfg,
               std::mt19937_64& rng) {
  if (cfg.decoupled) {
    init_mlp(store, kScoreHead, head_spec(feature_dim, 1, cfg.norm), rng);
    init_mlp(store, kYawHead, head_spec(feature_dim, 1, cfg.norm), rng);
    init_mlp(store, kCenterHead, head_spec(feature_dim, 3, cfg.norm), rng);
  } else {
    init_mlp(store, kCoupledHead, head_spec(feature_dim, 5, cfg.norm), rng);
  }
}

HeadVars predict(const ProposalSet& proposals, const VoteVars& votes, ParamStore& store,
                 const HeadConfig& cfg) {
  if (proposals.size() == 0) throw ParameterError("predict: empty proposal set");
  const std::size_t D = votes.features.cols();
  if (votes.coords.rows() != votes.features.rows() || votes.coords.cols() != 3)
    throw ShapeError("predict: vote features and coordinates disagree");
  Var centers = gather_rows(votes.coords, proposals.source_indices);
  Var input = concat_cols({gather_rows(votes.features, proposals.source_indices), centers});
  if (cfg.decoupled) {
    return {sigmoid(mlp_forward(input, head_spec(D, 1, cfg.norm), store, kScoreHead)),
            mlp_forward(input, head_spec(D, 1, cfg.norm), store, kYawHead),
            mlp_forward(input, head_spec(D, 3, cfg.norm), store, kCenterHead), centers};
  }
  Var joint = mlp_forward(input, head_spec(D, 5, cfg.norm), store, kCoupledHead);
  return {sigmoid(slice_cols(joint, 0, 1)), slice_cols(joint, 1, 1), slice_cols(joint, 2, 3),
          centers};
}

Box3D assemble_box(const HeadOutput& out, const ProposalSet& proposals, const Vec3& template_size) {
  const std::size_t K = proposals.size();
  if (K == 0) throw ParameterError("assemble_box: empty proposal set");
  if (out.scores.size() != K || out.yaws.size() != K || out.refinements.rows() != K ||
      out.refinements.cols() != 3)
    throw ShapeError("assemble_box: head output does not match " + std::to_string(K) +
                     " proposals");
  std::size_t best = 0;
  for (std::size_t p = 1; p < K; ++p)
    if (out.scores[p] > out.scores[best]) best = p;
  Box3D box;
  for (std::size_t a = 0; a < 3; ++a)
    box.center[a] = proposals.centers(best, a) + out.refinements(best, a);
  box.size = template_size;
  box.yaw = wrap_angle(out.yaws[best]);
  return box;
}

}  // namespace gltt
