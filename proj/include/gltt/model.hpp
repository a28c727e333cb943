#pragma once

#include <cstdint>

#include "gltt/backbone.hpp"
#include "gltt/config.hpp"
#include "gltt/glt.hpp"
#include "gltt/head.hpp"
#include "gltt/voting.hpp"

namespace gltt {

/// Intermediate results of one template/search forward pass.
struct ForwardPass {
  SeedExtraction seeds;
  GltOutput glt;
  VoteVars votes;
  ProposalSet proposals;
  HeadVars head;
};

/// The full tracking network: backbone → global/local transformer →
/// voting → proposals → decoupled head.
class Model {
 public:
  /// Fresh parameters, initialised from `seed`.
  Model(ModelConfig config, std::uint64_t seed);
  /// Adopts existing parameters; throws VersionError unless every expected
  /// entry is present with the expected shape and nothing else is.
  Model(ModelConfig config, ParamStore params);

  const ModelConfig& config() const noexcept { return config_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  /// Both clouds are expressed in the frame of their reference box, i.e.
  /// a box of `template_size` centred at the origin with zero yaw.
  ForwardPass forward(Tape& tape, const PointCloud& templ, const PointCloud& search,
                      const Vec3& template_size);

 private:
  ModelConfig config_;
  ParamStore params_;
};

/// Parameters for `config`, in the canonical initialisation order.
ParamStore init_model_params(const ModelConfig& config, std::uint64_t seed);

}  // namespace gltt
