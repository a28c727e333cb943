#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gltt/config.hpp"
#include "gltt/losses.hpp"
#include "gltt/model.hpp"
#include "gltt/sequence.hpp"

namespace gltt {

struct CropResult {
  PointCloud cloud;           // exactly `count` points unless empty
  std::size_t raw_count = 0;  // points found inside the region before resampling

  bool empty() const noexcept { return raw_count == 0; }
};

/// Points inside `prev` enlarged by `margin` on every axis (boundary
/// inclusive), resampled to `count`: all points plus uniform draws with
/// replacement when short, a uniform subset when over. Kept rows stay in
/// their original order.
CropResult crop_search_region(const PointCloud& cloud, const Box3D& prev, double margin,
                              std::size_t count, std::mt19937_64& rng);

/// Expresses world points in the frame of `reference`.
PointCloud to_box_frame(const PointCloud& cloud, const Box3D& reference);
/// World box → box relative to `reference`.
Box3D box_in_frame(const Box3D& world, const Box3D& reference);
/// Box relative to `reference` → world box.
Box3D box_from_frame(const Box3D& local, const Box3D& reference);

/// Points of `cloud` inside `box`, resampled to `count` and expressed in the
/// box frame. Throws DataError when the box holds no point.
PointCloud make_template(const PointCloud& cloud, const Box3D& box, std::size_t count,
                         std::mt19937_64& rng);

/// Frame-by-frame tracker with a fixed first-frame template. Search regions
/// are cropped around the previous estimate and processed in its frame.
class Tracker {
 public:
  Tracker(Model& model, TrackConfig config, std::uint64_t seed);

  /// Resets state from the first frame and its box.
  void init(const Frame& first, const Box3D& box);
  /// Predicts the box in `frame`. An empty search region keeps the previous
  /// box and counts the frame as flagged.
  Box3D track_frame(const Frame& frame);

  const Box3D& previous_box() const noexcept { return prev_; }
  const PointCloud& template_cloud() const noexcept { return template_; }
  std::size_t flagged_frames() const noexcept { return flagged_; }

 private:
  Model* model_;
  TrackConfig config_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  PointCloud template_;
  Vec3 size_{};
  Box3D prev_;
  std::size_t flagged_ = 0;
  bool ready_ = false;
};

/// Crop-sampling seed for the `index`-th sequence of a run.
inline std::uint64_t sequence_seed(std::uint64_t seed, std::size_t index) {
  return seed * 1000003ULL + index;
}

/// Tracks every frame after the first; element 0 is the first-frame box.
std::vector<Box3D> track_sequence(Model& model, const Sequence& seq, const TrackConfig& config,
                                  std::uint64_t seed, std::size_t* flagged = nullptr);

struct TrainingSample {
  PointCloud templ;   // in the template box frame
  PointCloud search;  // in the (jittered) previous-box frame
  Vec3 size{};
  Box3D target;       // ground truth in the search frame
};

/// Template from frame t-1, search region of frame t cropped around the
/// jittered t-1 box. Empty crops yield nullopt.
std::optional<TrainingSample> make_training_sample(const Sequence& seq, std::size_t t,
                                                   const Config& cfg, std::mt19937_64& rng);

/// Builds all loss terms for a forward pass against a target box expressed
/// in the search frame.
LossParts compute_losses(const ForwardPass& pass, const Box3D& target, const Config& cfg,
                         TrainingTarget* target_out = nullptr);

struct TrainResult {
  std::vector<LossBreakdown> curve;
  std::size_t no_positive_seed_samples = 0;
};

using CheckpointHook = std::function<void(std::size_t step, const ParamStore& params)>;

/// SGD over consecutive-frame pairs sampled uniformly from `data`. Calls
/// `hook` every `train.checkpoint_every` steps. Throws NumericError (with
/// the step index and loss breakdown) on a non-finite loss.
TrainResult train(Model& model, const std::vector<Sequence>& data, const Config& cfg,
                  const CheckpointHook& hook = {});

/// CSV header: step,l_off,l_imp,l_score,l_center_rot,total
void write_loss_csv(const std::string& path, const std::vector<LossBreakdown>& curve);

/// Training sequences come from `data.dir` when set, else from the synthetic
/// generator (default spec when absent). Evaluation sequences are always
/// synthetic, with seeds shifted by `data.eval_seed_offset`.
std::vector<Sequence> load_training_data(const Config& cfg);
std::vector<Sequence> load_eval_data(const Config& cfg);

}  // namespace gltt
