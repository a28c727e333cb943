#include "gltt/losses.hpp"

#include <cmath>

#include "gltt/error.hpp"

namespace gltt {

TrainingTarget TrainingTarget::from_box(const Box3D& gt_box, const Matrix& seed_coords) {
  return {gt_box, gt_box.center, points_in_box(seed_coords, gt_box)};
}

std::size_t TrainingTarget::positive_count() const {
  std::size_t n = 0;
  for (auto o : seed_labels) n += o ? 1 : 0;
  return n;
}

void LossWeights::validate() const {
  for (double w : {importance, score, center_rot})
    if (!std::isfinite(w) || w < 0.0)
      throw ConfigError("LossWeights: lambdas must be finite and non-negative");
}

namespace {

Var zero_scalar(Tape& tape) { return tape.constant(Matrix(1, 1, 0.0)); }

}  // namespace

LossTerm loss_importance(Var importance, const std::vector<std::uint8_t>& labels) {
  if (importance.cols() != 1 || importance.rows() != labels.size())
    throw ShapeError("loss_importance: " + importance.value().shape_string() + " vs " +
                     std::to_string(labels.size()) + " labels");
  Matrix targets(labels.size(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) targets(i, 0) = labels[i] ? 1.0 : 0.0;
  return {mean(binary_cross_entropy(importance, targets))};
}

LossTerm loss_offset(Var vote_coords, Var importance, const TrainingTarget& target,
                     const LossOptions& options) {
  Tape& tape = *vote_coords.tape;
  const std::size_t M = vote_coords.rows();
  if (vote_coords.cols() != 3 || target.seed_labels.size() != M)
    throw ShapeError("loss_offset: votes " + vote_coords.value().shape_string() + " vs " +
                     std::to_string(target.seed_labels.size()) + " labels");
  const std::size_t positives = target.positive_count();
  if (positives == 0) return {zero_scalar(tape), true};

  Matrix center(M, 3);
  Matrix norm_labels(M, 1);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t a = 0; a < 3; ++a) center(i, a) = target.center[a];
    norm_labels(i, 0) = target.seed_labels[i] ? 1.0 / static_cast<double>(positives) : 0.0;
  }
  Var per_seed = matmul(smooth_l1(sub(vote_coords, tape.constant(std::move(center)))),
                        tape.constant(Matrix(3, 1, 1.0)));
  Var weights = tape.constant(std::move(norm_labels));
  if (importance.valid()) {
    if (importance.rows() != M || importance.cols() != 1)
      throw ShapeError("loss_offset: importance must be Mx1");
    Var imp = options.offset_grad_into_importance ? importance : detach(importance);
    weights = mul(add(imp, tape.constant(Matrix(M, 1, 1.0))), weights);
  }
  return {sum(mul(per_seed, weights))};
}

std::vector<int> proposal_labels(const Matrix& proposal_centers, const Vec3& center,
                                 const LossOptions& options) {
  std::vector<int> labels(proposal_centers.rows(), -1);
  for (std::size_t p = 0; p < proposal_centers.rows(); ++p) {
    const double dx = proposal_centers(p, 0) - center[0];
    const double dy = proposal_centers(p, 1) - center[1];
    const double dz = proposal_centers(p, 2) - center[2];
    const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (d < options.positive_radius)
      labels[p] = 1;
    else if (d > options.negative_radius)
      labels[p] = 0;
  }
  return labels;
}

LossTerm loss_score(const HeadVars& head, const Matrix& proposal_centers,
                    const TrainingTarget& target, const LossOptions& options) {
  Tape& tape = *head.scores.tape;
  if (head.scores.rows() != proposal_centers.rows())
    throw ShapeError("loss_score: score/proposal count mismatch");
  const auto labels = proposal_labels(proposal_centers, target.center, options);
  std::vector<std::size_t> rows;
  std::vector<double> y;
  for (std::size_t p = 0; p < labels.size(); ++p)
    if (labels[p] >= 0) {
      rows.push_back(p);
      y.push_back(labels[p]);
    }
  if (rows.empty()) return {zero_scalar(tape), true};
  Matrix targets(rows.size(), 1, std::move(y));
  return {mean(binary_cross_entropy(gather_rows(head.scores, rows), targets))};
}

LossTerm loss_center_rot(const HeadVars& head, const Matrix& proposal_centers,
                         const TrainingTarget& target, const LossOptions& options) {
  Tape& tape = *head.scores.tape;
  const auto labels = proposal_labels(proposal_centers, target.center, options);
  std::vector<std::size_t> rows;
  for (std::size_t p = 0; p < labels.size(); ++p)
    if (labels[p] == 1) rows.push_back(p);
  if (rows.empty()) return {zero_scalar(tape), true};

  const std::size_t P = rows.size();
  Matrix center(P, 3);
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t a = 0; a < 3; ++a) center(i, a) = target.center[a];
  Var refined = gather_rows(add(head.centers, head.refinements), rows);
  Var center_err = sum(smooth_l1(sub(refined, tape.constant(std::move(center)))));
  Var yaw_err = wrap_angles(
      sub(gather_rows(head.yaws, rows), tape.constant(Matrix(P, 1, target.gt_box.yaw))));
  return {scale(add(center_err, sum(smooth_l1(yaw_err))), 1.0 / static_cast<double>(P))};
}

TotalLoss loss_total(const LossParts& parts, const LossWeights& weights) {
  weights.validate();
  Tape& tape = *parts.offset.value.tape;
  const Var imp = parts.importance.value.valid() ? parts.importance.value : zero_scalar(tape);
  const std::pair<const char*, Var> named[] = {{"l_off", parts.offset.value},
                                               {"l_imp", imp},
                                               {"l_score", parts.score.value},
                                               {"l_center_rot", parts.center_rot.value}};
  for (const auto& [name, v] : named) {
    if (v.rows() != 1 || v.cols() != 1) throw ShapeError(std::string("loss_total: ") + name + " is not scalar");
    if (!std::isfinite(v.value()(0, 0)))
      throw NumericError(std::string("loss_total: non-finite ") + name);
  }
  Var total = add(add(add(parts.offset.value, scale(imp, weights.importance)),
                      scale(parts.score.value, weights.score)),
                  scale(parts.center_rot.value, weights.center_rot));
  LossBreakdown b;
  b.l_off = parts.offset.value.value()(0, 0);
  b.l_imp = imp.value()(0, 0);
  b.l_score = parts.score.value.value()(0, 0);
  b.l_center_rot = parts.center_rot.value.value()(0, 0);
  b.total = total.value()(0, 0);
  return {total, b};
}

}  // namespace gltt
