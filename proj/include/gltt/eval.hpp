#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gltt/config.hpp"
#include "gltt/model.hpp"
#include "gltt/sequence.hpp"

namespace gltt {

struct FrameResult {
  std::string sequence;
  std::size_t frame = 0;
  double overlap = 0.0;  // 3D IoU
  double error = 0.0;    // center distance, meters
  Box3D predicted;
  Box3D truth;
};

struct OPEReport {
  double success = 0.0;    // ×100
  double precision = 0.0;  // ×100
  std::vector<FrameResult> frames;
  std::size_t flagged_frames = 0;

  std::size_t frame_count() const noexcept { return frames.size(); }
};

inline constexpr std::size_t kThresholdCount = 201;
inline constexpr double kPrecisionRange = 2.0;  // meters

/// Trapezoid AUC of the fraction of overlaps strictly above τ, τ on a
/// uniform 201-point grid over [0,1]; ×100. Throws MetricError on empty
/// input or overlaps outside [0,1].
double success_auc(const std::vector<double>& overlaps);
/// Same over errors strictly below τ, τ on [0,2] m, normalised by the
/// range; ×100. Throws MetricError on empty input or negative errors.
double precision_auc(const std::vector<double>& errors);

FrameResult score_frame(const Box3D& predicted, const Box3D& truth);

/// Predicted boxes for every frame of a sequence (index 0 is the given
/// first-frame box). `index` is the sequence's position in the dataset.
using SequenceTracker = std::function<std::vector<Box3D>(const Sequence& seq, std::size_t index)>;

SequenceTracker oracle_tracker();
SequenceTracker static_tracker();
/// Per-sequence crop seeds are derived from `seed` and the sequence index.
SequenceTracker model_tracker(Model& model, const TrackConfig& config, std::uint64_t seed,
                              std::size_t* flagged = nullptr);

/// Runs `tracker` over every sequence and pools frames 1.. with ground
/// truth across sequences.
OPEReport evaluate(const std::vector<Sequence>& sequences, const SequenceTracker& tracker);
OPEReport evaluate_model(Model& model, const Config& cfg, const std::vector<Sequence>& sequences);

/// Header: sequence,frame,overlap,error,pred_cx,pred_cy,pred_cz,pred_yaw,gt_cx,gt_cy,gt_cz,gt_yaw
void write_frame_csv(const std::string& path, const OPEReport& report);
std::string report_json(const OPEReport& report);
void write_report_json(const std::string& path, const OPEReport& report);

/// Boxes of one tracked sequence, one row per frame.
void write_track_csv(const std::string& path, const std::vector<Box3D>& boxes);

enum class AblationAxis { m, n, components };
AblationAxis parse_ablation_axis(const std::string& text);
const char* to_string(AblationAxis axis);

struct AblationRow {
  std::string value;
  GltSwitches switches;
  std::size_t sparse_count = 0;
  std::size_t knn_count = 0;
  std::size_t parameter_count = 0;
  double final_loss = 0.0;
  double success = 0.0;
  double precision = 0.0;
};

/// Applies one ablation value to a config. Components are no-GLT, GT-only,
/// GT+LT and +TS. Throws ConfigError on values outside the axis.
Config ablation_variant(const Config& base, AblationAxis axis, const std::string& value);

/// Trains and evaluates one variant per value on the same seeded data.
std::vector<AblationRow> ablate(const Config& base, AblationAxis axis,
                                const std::vector<std::string>& values);
void write_ablation_csv(const std::string& path, AblationAxis axis,
                        const std::vector<AblationRow>& rows);

}  // namespace gltt
