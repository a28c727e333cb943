#include "gltt/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "gltt/error.hpp"
#include "gltt/pipeline.hpp"
#include "json.hpp"

namespace gltt {

namespace {

template <typename Above>
double trapezoid_auc(std::size_t n, Above fraction_at) {
  const std::size_t last = kThresholdCount - 1;
  double area = 0.0;
  double prev = fraction_at(0, n);
  for (std::size_t j = 1; j <= last; ++j) {
    const double cur = fraction_at(j, n);
    area += 0.5 * (prev + cur);
    prev = cur;
  }
  return 100.0 * area / static_cast<double>(last);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

}  // namespace

double success_auc(const std::vector<double>& overlaps) {
  if (overlaps.empty()) throw MetricError("success_auc: no frames");
  for (double o : overlaps)
    if (!(o >= 0.0 && o <= 1.0)) throw MetricError("success_auc: overlap outside [0,1]");
  return trapezoid_auc(overlaps.size(), [&](std::size_t j, std::size_t n) {
    const double tau = static_cast<double>(j) / static_cast<double>(kThresholdCount - 1);
    std::size_t hit = 0;
    for (double o : overlaps) hit += o > tau;
    return static_cast<double>(hit) / static_cast<double>(n);
  });
}

double precision_auc(const std::vector<double>& errors) {
  if (errors.empty()) throw MetricError("precision_auc: no frames");
  for (double e : errors)
    if (!(e >= 0.0) || std::isnan(e)) throw MetricError("precision_auc: negative or NaN error");
  return trapezoid_auc(errors.size(), [&](std::size_t j, std::size_t n) {
    const double tau = kPrecisionRange * static_cast<double>(j) / static_cast<double>(kThresholdCount - 1);
    std::size_t hit = 0;
    for (double e : errors) hit += e < tau;
    return static_cast<double>(hit) / static_cast<double>(n);
  });
}

FrameResult score_frame(const Box3D& predicted, const Box3D& truth) {
  FrameResult r;
  r.overlap = box_iou_3d(predicted, truth);
  r.error = center_distance(predicted, truth);
  r.predicted = predicted;
  r.truth = truth;
  return r;
}

SequenceTracker oracle_tracker() {
  return [](const Sequence& seq, std::size_t) {
    std::vector<Box3D> out;
    for (const auto& f : seq.frames) out.push_back(f.gt ? *f.gt : seq.template_box());
    return out;
  };
}

SequenceTracker static_tracker() {
  return [](const Sequence& seq, std::size_t) {
    return std::vector<Box3D>(seq.frames.size(), seq.template_box());
  };
}

SequenceTracker model_tracker(Model& model, const TrackConfig& config, std::uint64_t seed,
                              std::size_t* flagged) {
  return [&model, config, seed, flagged](const Sequence& seq, std::size_t index) {
    std::size_t count = 0;
    auto boxes = track_sequence(model, seq, config, sequence_seed(seed, index), &count);
    if (flagged) *flagged += count;
    return boxes;
  };
}

OPEReport evaluate(const std::vector<Sequence>& sequences, const SequenceTracker& tracker) {
  if (sequences.empty()) throw DataError("evaluate: no sequences");
  OPEReport report;
  std::vector<double> overlaps, errors;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const Sequence& seq = sequences[s];
    seq.validate(false);
    const std::vector<Box3D> boxes = tracker(seq, s);
    if (boxes.size() != seq.frames.size())
      throw UsageError("evaluate: tracker returned a wrong number of boxes");
    for (std::size_t k = 1; k < seq.frames.size(); ++k) {
      if (!seq.frames[k].gt) continue;
      FrameResult r = score_frame(boxes[k], *seq.frames[k].gt);
      r.sequence = seq.name;
      r.frame = k;
      overlaps.push_back(r.overlap);
      errors.push_back(r.error);
      report.frames.push_back(std::move(r));
    }
  }
  report.success = success_auc(overlaps);
  report.precision = precision_auc(errors);
  return report;
}

OPEReport evaluate_model(Model& model, const Config& cfg, const std::vector<Sequence>& sequences) {
  std::size_t flagged = 0;
  OPEReport report = evaluate(sequences, model_tracker(model, cfg.tracker, cfg.seed, &flagged));
  report.flagged_frames = flagged;
  return report;
}

void write_frame_csv(const std::string& path, const OPEReport& report) {
  auto out = open_out(path);
  out << "sequence,frame,overlap,error,pred_cx,pred_cy,pred_cz,pred_yaw,gt_cx,gt_cy,gt_cz,gt_yaw\n";
  char buf[512];
  for (const auto& r : report.frames) {
    const auto& p = r.predicted;
    const auto& g = r.truth;
    std::snprintf(buf, sizeof buf, "%s,%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  r.sequence.c_str(), r.frame, r.overlap, r.error, p.center[0], p.center[1],
                  p.center[2], p.yaw, g.center[0], g.center[1], g.center[2], g.yaw);
    out << buf;
  }
}

std::string report_json(const OPEReport& report) {
  double mean_overlap = 0.0, mean_error = 0.0;
  for (const auto& r : report.frames) {
    mean_overlap += r.overlap;
    mean_error += r.error;
  }
  if (!report.frames.empty()) {
    mean_overlap /= static_cast<double>(report.frames.size());
    mean_error /= static_cast<double>(report.frames.size());
  }
  nlohmann::ordered_json j;
  j["success"] = report.success;
  j["precision"] = report.precision;
  j["frames"] = report.frames.size();
  j["flagged_frames"] = report.flagged_frames;
  j["mean_overlap"] = mean_overlap;
  j["mean_error"] = mean_error;
  j["thresholds"] = kThresholdCount;
  return j.dump(2) + "\n";
}

void write_report_json(const std::string& path, const OPEReport& report) {
  auto out = open_out(path);
  out << report_json(report);
}

void write_track_csv(const std::string& path, const std::vector<Box3D>& boxes) {
  auto out = open_out(path);
  out << "frame,cx,cy,cz,w,h,l,yaw\n";
  char buf[320];
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    const auto& b = boxes[k];
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", k, b.center[0],
                  b.center[1], b.center[2], b.size[0], b.size[1], b.size[2], b.yaw);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// Ablation

AblationAxis parse_ablation_axis(const std::string& text) {
  if (text == "m") return AblationAxis::m;
  if (text == "n") return AblationAxis::n;
  if (text == "components") return AblationAxis::components;
  throw ConfigError("unknown ablation axis '" + text + "' (expected m, n or components)");
}

const char* to_string(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::m: return "m";
    case AblationAxis::n: return "n";
    case AblationAxis::components: return "components";
  }
  return "?";
}

namespace {

std::size_t parse_count(const std::string& value, std::initializer_list<std::size_t> allowed,
                        const char* axis) {
  for (std::size_t a : allowed)
    if (value == std::to_string(a)) return a;
  throw ConfigError(std::string("ablation value '") + value + "' not allowed on axis " + axis);
}

}  // namespace

Config ablation_variant(const Config& base, AblationAxis axis, const std::string& value) {
  Config cfg = base;
  switch (axis) {
    case AblationAxis::m:
      cfg.model.attention.sparse_count = parse_count(value, {4, 8, 16, 32}, "m");
      break;
    case AblationAxis::n:
      cfg.model.attention.knn_count = parse_count(value, {8, 16, 24}, "n");
      break;
    case AblationAxis::components:
      if (value == "no-GLT") cfg.model.switches = {false, false, false};
      else if (value == "GT-only") cfg.model.switches = {true, false, false};
      else if (value == "GT+LT") cfg.model.switches = {true, true, false};
      else if (value == "+TS") cfg.model.switches = {true, true, true};
      else throw ConfigError("ablation value '" + value + "' not allowed on axis components");
      break;
  }
  cfg.validate();
  return cfg;
}

std::vector<AblationRow> ablate(const Config& base, AblationAxis axis,
                                const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("ablate: no values");
  std::vector<Config> variants;
  for (const auto& v : values) variants.push_back(ablation_variant(base, axis, v));
  const std::vector<Sequence> train_data = load_training_data(base);
  const std::vector<Sequence> eval_data = load_eval_data(base);

  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Config& cfg = variants[i];
    Model model(cfg.model, cfg.seed);
    const TrainResult tr = train(model, train_data, cfg);
    const OPEReport rep = evaluate_model(model, cfg, eval_data);
    AblationRow row;
    row.value = values[i];
    row.switches = cfg.model.switches;
    row.sparse_count = cfg.model.attention.sparse_count;
    row.knn_count = cfg.model.attention.knn_count;
    row.parameter_count = model.params().parameter_count();
    row.final_loss = tr.curve.empty() ? 0.0 : tr.curve.back().total;
    row.success = rep.success;
    row.precision = rep.precision;
    rows.push_back(row);
  }
  return rows;
}

void write_ablation_csv(const std::string& path, AblationAxis axis,
                        const std::vector<AblationRow>& rows) {
  auto out = open_out(path);
  out << "axis,value,global_block,local_block,importance,m,n,parameters,final_loss,success,precision\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%d,%zu,%zu,%zu,%.10g,%.4f,%.4f\n", to_string(axis),
                  r.value.c_str(), r.switches.global_block, r.switches.local_block,
                  r.switches.importance, r.sparse_count, r.knn_count, r.parameter_count,
                  r.final_loss, r.success, r.precision);
    out << buf;
  }
}

}  // namespace gltt
