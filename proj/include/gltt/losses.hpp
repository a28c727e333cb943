#pragma once

#include <cstdint>
#include <vector>

#include "gltt/diffcore.hpp"
#include "gltt/geometry.hpp"
#include "gltt/head.hpp"

namespace gltt {

struct TrainingTarget {
  Box3D gt_box;
  Vec3 center{};                         // c^l, equals gt_box.center
  std::vector<std::uint8_t> seed_labels;  // o_i = 1 iff seed i inside gt_box

  static TrainingTarget from_box(const Box3D& gt_box, const Matrix& seed_coords);
  std::size_t positive_count() const;
};

/// λ1 (importance), λ2 (score), λ3 (center/rotation).
struct LossWeights {
  double importance = 0.5;
  double score = 1.0;
  double center_rot = 1.0;

  void validate() const;
};

struct LossOptions {
  double positive_radius = 0.3;  // r_pos, meters
  double negative_radius = 0.6;  // r_neg, meters
  /// When true, L_off also back-propagates into the importance branch
  /// through its (1 + I_i) weights. Off by default: the branch then learns
  /// from L_imp alone.
  bool offset_grad_into_importance = false;
};

/// A scalar loss node; `degenerate` marks the contractual-zero cases (no
/// positive seed, no labelled proposal).
struct LossTerm {
  Var value;
  bool degenerate = false;

  double scalar() const { return value.value()(0, 0); }
};

struct LossBreakdown {
  double l_off = 0.0;
  double l_imp = 0.0;
  double l_score = 0.0;
  double l_center_rot = 0.0;
  double total = 0.0;
};

/// Mean binary cross entropy of I (M×1) against the seed labels.
LossTerm loss_importance(Var importance, const std::vector<std::uint8_t>& labels);

/// Importance-weighted smooth-L1 of the vote coordinates against c^l over
/// positive seeds, normalised by their count. `importance` may be invalid,
/// in which case every weight is 1.
LossTerm loss_offset(Var vote_coords, Var importance, const TrainingTarget& target,
                     const LossOptions& options = {});

/// Score labels: 1 within r_pos of c^l, 0 beyond r_neg, otherwise ignored.
std::vector<int> proposal_labels(const Matrix& proposal_centers, const Vec3& center,
                                 const LossOptions& options);

/// BCE of proposal scores against `proposal_labels`, mean over labelled ones.
LossTerm loss_score(const HeadVars& head, const Matrix& proposal_centers,
                    const TrainingTarget& target, const LossOptions& options = {});

/// Over positive proposals: smooth-L1 of refined center vs c^l (summed over
/// x, y, z) plus smooth-L1 of the wrapped yaw error; mean over positives.
LossTerm loss_center_rot(const HeadVars& head, const Matrix& proposal_centers,
                         const TrainingTarget& target, const LossOptions& options = {});

struct LossParts {
  LossTerm offset;
  LossTerm importance;  // value may be invalid (branch disabled) → 0
  LossTerm score;
  LossTerm center_rot;
};

struct TotalLoss {
  Var total;
  LossBreakdown breakdown;
};

/// L = L_off + λ1 L_imp + λ2 L_score + λ3 L_center,rot. Throws NumericError
/// naming the first non-finite part.
TotalLoss loss_total(const LossParts& parts, const LossWeights& weights);

}  // namespace gltt
