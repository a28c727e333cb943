#pragma once

#include <random>
#include <string>
#include <vector>

#include "gltt/diffcore.hpp"
#include "gltt/geometry.hpp"
#include "gltt/voting.hpp"

namespace gltt {

struct HeadOutput {
  std::vector<double> scores;  // sigmoid, (0, 1)
  std::vector<double> yaws;    // radians
  Matrix refinements;          // K×3, added to the proposal centers
};

struct HeadVars {
  Var scores;       // K×1
  Var yaws;         // K×1
  Var refinements;  // K×3
  Var centers;      // K×3 proposal centers, differentiable through the votes

  HeadOutput values() const;
};

struct HeadConfig {
  NormKind norm = NormKind::layer;
  /// false selects a single shared MLP (ablation only).
  bool decoupled = true;
};

inline const std::string kScoreHead = "head.score";
inline const std::string kYawHead = "head.yaw";
inline const std::string kCenterHead = "head.center";
inline const std::string kCoupledHead = "head.coupled";

void init_head(ParamStore& store, std::size_t feature_dim, const HeadConfig& cfg,
               std::mt19937_64& rng);

/// Each proposal's input is [f^v; x_p, y_p, z_p] of its source vote.
HeadVars predict(const ProposalSet& proposals, const VoteVars& votes, ParamStore& store,
                 const HeadConfig& cfg);

/// Highest score wins (ties → lowest index); center = proposal center +
/// refinement, size copied from the template.
Box3D assemble_box(const HeadOutput& out, const ProposalSet& proposals, const Vec3& template_size);

}  // namespace gltt
