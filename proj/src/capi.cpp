#include "gltt/gltt.h"

#include <cstdio>
#include <filesystem>
#include <memory>
#include <sstream>
#include <string>

#include "gltt/checkpoint.hpp"
#include "gltt/config.hpp"
#include "gltt/error.hpp"
#include "gltt/eval.hpp"
#include "gltt/model.hpp"
#include "gltt/pipeline.hpp"
#include "gltt/synthetic.hpp"

struct gltt_model {
  gltt::Config config;
  gltt::Model model;
};

namespace {

thread_local std::string last_error;

int status_for(gltt::ErrorCode code) {
  using gltt::ErrorCode;
  switch (code) {
    case ErrorCode::config: return GLTT_ERR_CONFIG;
    case ErrorCode::data: return GLTT_ERR_DATA;
    case ErrorCode::numeric: return GLTT_ERR_NUMERIC;
    case ErrorCode::version: return GLTT_ERR_VERSION;
    case ErrorCode::parameter: return GLTT_ERR_PARAMETER;
    case ErrorCode::input: return GLTT_ERR_INPUT;
    case ErrorCode::shape: return GLTT_ERR_SHAPE;
    case ErrorCode::metric: return GLTT_ERR_METRIC;
    case ErrorCode::usage: return GLTT_ERR_USAGE;
  }
  return GLTT_ERR_INTERNAL;
}

template <typename F>
int guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return GLTT_OK;
  } catch (const gltt::Error& e) {
    last_error = e.what();
    return status_for(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return GLTT_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return GLTT_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw gltt::UsageError(std::string(what) + " must not be NULL");
}

gltt::Config config_from(const char* json) {
  gltt::Config cfg = json ? gltt::parse_config(json) : gltt::Config{};
  cfg.validate();
  return cfg;
}

std::unique_ptr<gltt_model> load_model(const char* path) {
  gltt::Checkpoint ck = gltt::load_checkpoint(path);
  gltt::Config cfg;
  try {
    cfg = gltt::parse_config(ck.config_json);
  } catch (const gltt::ConfigError& e) {
    throw gltt::VersionError(std::string("checkpoint config: ") + e.what());
  }
  gltt::Model model(cfg.model, std::move(ck.params));
  return std::unique_ptr<gltt_model>(new gltt_model{cfg, std::move(model)});
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw gltt::DataError("cannot create '" + dir + "': " + ec.message());
}

void track_to_csv(gltt_model& model, const char* sequence_dir, const char* out_csv) {
  require(sequence_dir, "sequence_dir");
  require(out_csv, "out_csv");
  const gltt::Sequence seq = gltt::read_sequence(sequence_dir);
  const auto boxes =
      gltt::track_sequence(model.model, seq, model.config.tracker, gltt::sequence_seed(model.config.seed, 0));
  gltt::write_track_csv(out_csv, boxes);
}

gltt::Box3D box_from(const double* v) {
  gltt::Box3D b{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, v[6]};
  b.validate();
  return b;
}

}  // namespace

extern "C" {

const char* gltt_version(void) { return "0.1.0"; }

const char* gltt_last_error(void) { return last_error.c_str(); }

const char* gltt_status_name(int status) {
  switch (status) {
    case GLTT_OK: return "ok";
    case GLTT_ERR_INTERNAL: return "internal";
    case GLTT_ERR_CONFIG: return "config";
    case GLTT_ERR_DATA: return "data";
    case GLTT_ERR_NUMERIC: return "numeric";
    case GLTT_ERR_VERSION: return "version";
    case GLTT_ERR_PARAMETER: return "parameter";
    case GLTT_ERR_INPUT: return "input";
    case GLTT_ERR_SHAPE: return "shape";
    case GLTT_ERR_METRIC: return "metric";
    case GLTT_ERR_USAGE: return "usage";
  }
  return "unknown";
}

int gltt_model_create(const char* config_json, gltt_model** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    gltt::Config cfg = config_from(config_json);
    gltt::Model model(cfg.model, cfg.seed);
    *out = new gltt_model{cfg, std::move(model)};
  });
}

int gltt_model_load(const char* checkpoint_path, gltt_model** out) {
  return guarded([&] {
    require(out, "out");
    require(checkpoint_path, "checkpoint_path");
    *out = nullptr;
    *out = load_model(checkpoint_path).release();
  });
}

int gltt_model_save(const gltt_model* model, const char* checkpoint_path) {
  return guarded([&] {
    require(model, "model");
    require(checkpoint_path, "checkpoint_path");
    gltt::save_checkpoint(checkpoint_path, model->model.params(), gltt::dump_config(model->config, 2));
  });
}

int gltt_model_parameter_count(const gltt_model* model, size_t* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = model->model.params().parameter_count();
  });
}

int gltt_model_track(gltt_model* model, const char* sequence_dir, const char* out_csv) {
  return guarded([&] {
    require(model, "model");
    track_to_csv(*model, sequence_dir, out_csv);
  });
}

void gltt_model_destroy(gltt_model* model) { delete model; }

int gltt_train(const char* config_json, const char* out_dir) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out_dir, "out_dir");
    const gltt::Config cfg = config_from(config_json);
    const std::string dir = out_dir;
    ensure_dir(dir);
    const std::string cfg_text = gltt::dump_config(cfg, 2);
    {
      std::FILE* f = std::fopen((dir + "/config.json").c_str(), "wb");
      if (!f) throw gltt::DataError("cannot write '" + dir + "/config.json'");
      std::fputs(cfg_text.c_str(), f);
      std::fputc('\n', f);
      std::fclose(f);
    }
    const auto data = gltt::load_training_data(cfg);
    gltt::Model model(cfg.model, cfg.seed);
    const auto hook = [&](std::size_t step, const gltt::ParamStore& params) {
      char name[32];
      std::snprintf(name, sizeof name, "/step_%06zu.gltt", step);
      gltt::save_checkpoint(dir + name, params, cfg_text);
    };
    const gltt::TrainResult result = gltt::train(model, data, cfg, hook);
    gltt::write_loss_csv(dir + "/loss.csv", result.curve);
    gltt::save_checkpoint(dir + "/checkpoint.gltt", model.params(), cfg_text);
  });
}

int gltt_track(const char* checkpoint_path, const char* sequence_dir, const char* out_csv) {
  return guarded([&] {
    require(checkpoint_path, "checkpoint_path");
    track_to_csv(*load_model(checkpoint_path), sequence_dir, out_csv);
  });
}

int gltt_evaluate(const char* checkpoint_path, const char* data_dir, const char* report_json,
                  const char* frames_csv) {
  return guarded([&] {
    require(checkpoint_path, "checkpoint_path");
    require(data_dir, "data_dir");
    require(report_json, "report_json");
    auto model = load_model(checkpoint_path);
    const auto data = gltt::read_dataset(data_dir);
    const gltt::OPEReport report = gltt::evaluate_model(model->model, model->config, data);
    gltt::write_report_json(report_json, report);
    if (frames_csv) gltt::write_frame_csv(frames_csv, report);
  });
}

int gltt_ablate(const char* config_json, const char* axis, const char* values, const char* out_csv) {
  return guarded([&] {
    require(axis, "axis");
    require(values, "values");
    require(out_csv, "out_csv");
    const gltt::Config cfg = config_from(config_json);
    const gltt::AblationAxis ax = gltt::parse_ablation_axis(axis);
    std::vector<std::string> list;
    std::stringstream ss(values);
    for (std::string item; std::getline(ss, item, ',');)
      if (!item.empty()) list.push_back(item);
    const auto rows = gltt::ablate(cfg, ax, list);
    gltt::write_ablation_csv(out_csv, ax, rows);
  });
}

int gltt_generate(const char* spec_json, const char* out_dir) {
  return guarded([&] {
    require(spec_json, "spec_json");
    require(out_dir, "out_dir");
    const gltt::SyntheticSpec spec = gltt::parse_synthetic_spec(spec_json);
    ensure_dir(out_dir);
    gltt::write_dataset(out_dir, gltt::generate_synthetic_dataset(spec, spec.sequences));
  });
}

int gltt_success_auc(const double* overlaps, size_t count, double* out) {
  return guarded([&] {
    require(out, "out");
    if (count) require(overlaps, "overlaps");
    *out = gltt::success_auc(std::vector<double>(overlaps, overlaps + count));
  });
}

int gltt_precision_auc(const double* errors, size_t count, double* out) {
  return guarded([&] {
    require(out, "out");
    if (count) require(errors, "errors");
    *out = gltt::precision_auc(std::vector<double>(errors, errors + count));
  });
}

int gltt_box_iou(const double* a, const double* b, double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = gltt::box_iou_3d(box_from(a), box_from(b));
  });
}

}  // extern "C"
