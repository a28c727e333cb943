#include "gltt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gltt/error.hpp"
#include "gltt/synthetic.hpp"

namespace gltt {

namespace {

PointCloud resample(const Matrix& coords, std::vector<std::size_t> rows, std::size_t count,
                    std::mt19937_64& rng) {
  std::vector<std::size_t> chosen;
  if (rows.size() >= count) {
    std::sample(rows.begin(), rows.end(), std::back_inserter(chosen), count, rng);
  } else {
    chosen = rows;
    std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
    while (chosen.size() < count) chosen.push_back(rows[pick(rng)]);
    std::sort(chosen.begin(), chosen.end());
  }
  PointCloud out;
  out.coords = Matrix(chosen.size(), 3);
  for (std::size_t i = 0; i < chosen.size(); ++i)
    for (std::size_t a = 0; a < 3; ++a) out.coords(i, a) = coords(chosen[i], a);
  return out;
}

}  // namespace

CropResult crop_search_region(const PointCloud& cloud, const Box3D& prev, double margin,
                              std::size_t count, std::mt19937_64& rng) {
  if (!(margin > 0)) throw ParameterError("crop_search_region: margin must be positive");
  if (count == 0) throw ParameterError("crop_search_region: count must be positive");
  prev.validate();
  const Vec3 h = prev.half_extents();
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 q = prev.to_local({cloud.coords(i, 0), cloud.coords(i, 1), cloud.coords(i, 2)});
    if (std::abs(q[0]) <= h[0] + margin && std::abs(q[1]) <= h[1] + margin &&
        std::abs(q[2]) <= h[2] + margin)
      rows.push_back(i);
  }
  CropResult out;
  out.raw_count = rows.size();
  if (rows.empty()) {
    out.cloud.coords = Matrix(0, 3);
    return out;
  }
  out.cloud = resample(cloud.coords, std::move(rows), count, rng);
  return out;
}

PointCloud to_box_frame(const PointCloud& cloud, const Box3D& reference) {
  PointCloud out;
  out.coords = Matrix(cloud.size(), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 q = reference.to_local({cloud.coords(i, 0), cloud.coords(i, 1), cloud.coords(i, 2)});
    for (std::size_t a = 0; a < 3; ++a) out.coords(i, a) = q[a];
  }
  out.features = cloud.features;
  return out;
}

Box3D box_in_frame(const Box3D& world, const Box3D& reference) {
  return {reference.to_local(world.center), world.size, wrap_angle(world.yaw - reference.yaw)};
}

Box3D box_from_frame(const Box3D& local, const Box3D& reference) {
  return {reference.to_world(local.center), local.size, wrap_angle(local.yaw + reference.yaw)};
}

PointCloud make_template(const PointCloud& cloud, const Box3D& box, std::size_t count,
                         std::mt19937_64& rng) {
  const auto mask = points_in_box(cloud.coords, box);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) rows.push_back(i);
  if (rows.empty()) throw DataError("make_template: no point inside the template box");
  return to_box_frame(resample(cloud.coords, std::move(rows), count, rng), box);
}

// ---------------------------------------------------------------------------
// Tracking

Tracker::Tracker(Model& model, TrackConfig config, std::uint64_t seed)
    : model_(&model), config_(config), seed_(seed), rng_(seed) {}

void Tracker::init(const Frame& first, const Box3D& box) {
  box.validate();
  rng_.seed(seed_);
  template_ = make_template(first.cloud, box, model_->config().backbone.template_points, rng_);
  size_ = box.size;
  prev_ = box.normalized();
  flagged_ = 0;
  ready_ = true;
}

Box3D Tracker::track_frame(const Frame& frame) {
  if (!ready_) throw UsageError("Tracker::track_frame before init");
  const auto& bb = model_->config().backbone;
  CropResult crop = crop_search_region(frame.cloud, prev_, config_.search_margin,
                                       bb.search_points, rng_);
  if (crop.empty()) {
    ++flagged_;
    debug_warn("track_frame: empty search region, keeping previous box");
    return prev_;
  }
  const PointCloud search = to_box_frame(crop.cloud, prev_);
  Tape tape;
  const ForwardPass pass = model_->forward(tape, template_, search, size_);
  const Box3D local = assemble_box(pass.head.values(), pass.proposals, size_);
  prev_ = box_from_frame(local, prev_);
  return prev_;
}

std::vector<Box3D> track_sequence(Model& model, const Sequence& seq, const TrackConfig& config,
                                  std::uint64_t seed, std::size_t* flagged) {
  seq.validate(false);
  Tracker tracker(model, config, seed);
  tracker.init(seq.frames[0], seq.template_box());
  std::vector<Box3D> out{seq.template_box().normalized()};
  for (std::size_t k = 1; k < seq.frames.size(); ++k) out.push_back(tracker.track_frame(seq.frames[k]));
  if (flagged) *flagged = tracker.flagged_frames();
  return out;
}

// ---------------------------------------------------------------------------
// Training

std::optional<TrainingSample> make_training_sample(const Sequence& seq, std::size_t t,
                                                   const Config& cfg, std::mt19937_64& rng) {
  if (t == 0 || t >= seq.frames.size())
    throw ParameterError("make_training_sample: frame index out of range");
  const Box3D& prev_gt = *seq.frames[t - 1].gt;
  const Box3D& cur_gt = *seq.frames[t].gt;
  std::normal_distribution<double> unit(0.0, 1.0);
  Box3D crop_box = prev_gt;
  crop_box.center[0] += cfg.train.crop_jitter * unit(rng);
  crop_box.center[1] += cfg.train.crop_jitter * unit(rng);
  crop_box.yaw = wrap_angle(crop_box.yaw + cfg.train.yaw_jitter * unit(rng));

  const auto& bb = cfg.model.backbone;
  TrainingSample s;
  s.templ = make_template(seq.frames[t - 1].cloud, prev_gt, bb.template_points, rng);
  CropResult crop = crop_search_region(seq.frames[t].cloud, crop_box, cfg.tracker.search_margin,
                                       bb.search_points, rng);
  if (crop.empty()) return std::nullopt;
  s.search = to_box_frame(crop.cloud, crop_box);
  s.size = prev_gt.size;
  s.target = box_in_frame(cur_gt, crop_box);
  return s;
}

LossParts compute_losses(const ForwardPass& pass, const Box3D& target, const Config& cfg,
                         TrainingTarget* target_out) {
  const TrainingTarget tt = TrainingTarget::from_box(target, pass.seeds.coords);
  LossParts parts;
  parts.offset = loss_offset(pass.votes.coords, pass.glt.importance, tt, cfg.loss);
  if (pass.glt.importance.valid()) parts.importance = loss_importance(pass.glt.importance, tt.seed_labels);
  parts.score = loss_score(pass.head, pass.proposals.centers, tt, cfg.loss);
  parts.center_rot = loss_center_rot(pass.head, pass.proposals.centers, tt, cfg.loss);
  if (target_out) *target_out = tt;
  return parts;
}

namespace {

std::string describe(const LossBreakdown& b) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "l_off=%g l_imp=%g l_score=%g l_center_rot=%g total=%g", b.l_off,
                b.l_imp, b.l_score, b.l_center_rot, b.total);
  return buf;
}

}  // namespace

TrainResult train(Model& model, const std::vector<Sequence>& data, const Config& cfg,
                  const CheckpointHook& hook) {
  cfg.validate();
  if (data.empty()) throw DataError("train: no training sequences");
  for (const auto& seq : data) seq.validate(true);

  std::mt19937_64 rng(cfg.seed + 0x5bd1e995ULL);
  std::uniform_int_distribution<std::size_t> pick_seq(0, data.size() - 1);
  ParamStore& params = model.params();
  const std::size_t B = cfg.train.batch_size;
  TrainResult result;
  result.curve.reserve(cfg.train.steps);

  for (std::size_t step = 0; step < cfg.train.steps; ++step) {
    params.zero_grad();
    LossBreakdown acc;
    for (std::size_t b = 0; b < B; ++b) {
      std::optional<TrainingSample> sample;
      for (int attempt = 0; attempt < 100 && !sample; ++attempt) {
        const Sequence& seq = data[pick_seq(rng)];
        std::uniform_int_distribution<std::size_t> pick_t(1, seq.frames.size() - 1);
        sample = make_training_sample(seq, pick_t(rng), cfg, rng);
      }
      if (!sample) throw DataError("train: could not draw a non-empty search region");

      Tape tape;
      const ForwardPass pass = model.forward(tape, sample->templ, sample->search, sample->size);
      TrainingTarget tt;
      const LossParts parts = compute_losses(pass, sample->target, cfg, &tt);
      if (parts.offset.degenerate) ++result.no_positive_seed_samples;
      TotalLoss total;
      try {
        total = loss_total(parts, cfg.weights);
      } catch (const NumericError& e) {
        throw NumericError("train: step " + std::to_string(step) + ": " + e.what());
      }
      if (!std::isfinite(total.breakdown.total))
        throw NumericError("train: step " + std::to_string(step) + ": non-finite loss (" +
                           describe(total.breakdown) + ")");
      tape.backward(total.total);
      acc.l_off += total.breakdown.l_off;
      acc.l_imp += total.breakdown.l_imp;
      acc.l_score += total.breakdown.l_score;
      acc.l_center_rot += total.breakdown.l_center_rot;
      if (B == 1) acc.total = total.breakdown.total;
    }
    if (B > 1) {
      const double inv = 1.0 / static_cast<double>(B);
      acc.l_off *= inv;
      acc.l_imp *= inv;
      acc.l_score *= inv;
      acc.l_center_rot *= inv;
      acc.total = acc.l_off + cfg.weights.importance * acc.l_imp + cfg.weights.score * acc.l_score +
                  cfg.weights.center_rot * acc.l_center_rot;
      for (std::size_t i = 0; i < params.entry_count(); ++i)
        for (double& g : params.entry(i).grad.values()) g *= inv;
    }
    SgdOptions sgd = cfg.train.sgd;
    if (cfg.train.steps > 1) {
      const double progress = static_cast<double>(step) / static_cast<double>(cfg.train.steps - 1);
      sgd.lr *= 1.0 - (1.0 - cfg.train.lr_final) * progress;
    }
    try {
      sgd_step(params, sgd);
    } catch (const NumericError& e) {
      throw NumericError("train: step " + std::to_string(step) + ": " + e.what() + " (" +
                         describe(acc) + ")");
    }
    result.curve.push_back(acc);
    if (hook && cfg.train.checkpoint_every && (step + 1) % cfg.train.checkpoint_every == 0)
      hook(step + 1, params);
  }
  return result;
}

void write_loss_csv(const std::string& path, const std::vector<LossBreakdown>& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "step,l_off,l_imp,l_score,l_center_rot,total\n";
  char buf[256];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& b = curve[i];
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g,%.10g\n", i + 1, b.l_off, b.l_imp,
                  b.l_score, b.l_center_rot, b.total);
    out << buf;
  }
}

std::vector<Sequence> load_training_data(const Config& cfg) {
  if (!cfg.data.dir.empty()) return read_dataset(cfg.data.dir);
  return generate_synthetic_dataset(cfg.data.synthetic.value_or(SyntheticSpec{}),
                                    cfg.data.train_sequences);
}

std::vector<Sequence> load_eval_data(const Config& cfg) {
  SyntheticSpec spec = cfg.data.synthetic.value_or(SyntheticSpec{});
  spec.seed += cfg.data.eval_seed_offset;
  return generate_synthetic_dataset(spec, cfg.data.eval_sequences);
}

}  // namespace gltt
