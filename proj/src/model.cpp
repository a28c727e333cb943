#include "gltt/model.hpp"

#include <random>

#include "gltt/error.hpp"

namespace gltt {

ParamStore init_model_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ParamStore store(seed);
  std::mt19937_64 rng(seed);
  init_backbone(store, config.backbone, rng);
  if (config.switches.global_block) init_transformer_block(store, kGlobalBlock, config.attention, rng);
  if (config.switches.local_block) init_transformer_block(store, kLocalBlock, config.attention, rng);
  if (config.switches.importance)
    init_importance_branch(store, kImportanceBranch, config.attention.feature_dim, rng);
  init_voting(store, config.attention.feature_dim, config.vote_norm, rng);
  init_head(store, config.attention.feature_dim, config.head, rng);
  return store;
}

Model::Model(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)), params_(init_model_params(config_, seed)) {}

Model::Model(ModelConfig config, ParamStore params)
    : config_(std::move(config)), params_(std::move(params)) {
  const ParamStore reference = init_model_params(config_, params_.seed());
  if (reference.entry_count() != params_.entry_count())
    throw VersionError("checkpoint has " + std::to_string(params_.entry_count()) +
                       " parameter entries, config expects " +
                       std::to_string(reference.entry_count()));
  for (std::size_t i = 0; i < reference.entry_count(); ++i) {
    const Param& want = reference.entry(i);
    if (!params_.contains(want.name))
      throw VersionError("checkpoint lacks parameter '" + want.name + "'");
    const Param& have = params_.at(want.name);
    if (!have.value.same_shape(want.value))
      throw VersionError("parameter '" + want.name + "' is " + have.value.shape_string() +
                         ", config expects " + want.value.shape_string());
  }
}

ForwardPass Model::forward(Tape& tape, const PointCloud& templ, const PointCloud& search,
                           const Vec3& template_size) {
  const Box3D reference{{0.0, 0.0, 0.0}, template_size, 0.0};
  ForwardPass pass;
  pass.seeds = extract_seeds(tape, templ, reference, search, config_.backbone, params_);
  pass.glt = glt_forward(pass.seeds.features, pass.seeds.coords, config_.attention,
                         config_.switches, params_);
  pass.votes = vote(pass.glt.local_features, pass.seeds.coords, params_, config_.vote_norm);
  pass.proposals = select_proposals(pass.votes.coords.value(), config_.proposals);
  pass.head = predict(pass.proposals, pass.votes, params_, config_.head);
  const HeadOutput out = pass.head.values();
  pass.proposals.scores = out.scores;
  pass.proposals.yaws = out.yaws;
  return pass;
}

}  // namespace gltt
