#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "gltt/backbone.hpp"
#include "gltt/glt.hpp"
#include "gltt/head.hpp"
#include "gltt/losses.hpp"
#include "gltt/synthetic.hpp"

namespace gltt {

struct ModelConfig {
  BackboneConfig backbone;
  AttentionConfig attention;
  std::size_t proposals = 64;  // K
  NormKind vote_norm = NormKind::layer;
  HeadConfig head;
  GltSwitches switches;

  /// Cross-checks widths (backbone D equals attention D) and counts
  /// (m, n ≤ M_s, K < M_s). Throws ConfigError.
  void validate() const;
};

struct TrainConfig {
  std::size_t steps = 1000;
  std::size_t batch_size = 1;  // pairs whose gradients are averaged per step
  SgdOptions sgd{0.01, 0.9, 5.0};
  double lr_final = 1.0;             // lr decays linearly to lr·lr_final at the last step
  std::size_t checkpoint_every = 0;  // 0: only the final checkpoint
  double crop_jitter = 0.1;          // sigma of the training crop center (meters, x/y)
  double yaw_jitter = 0.05;          // sigma of the training crop heading (radians)
};

struct TrackConfig {
  double search_margin = 2.0;  // meters
};

struct DataConfig {
  std::string dir;                         // sequence root; empty → synthetic
  std::optional<SyntheticSpec> synthetic;  // used when dir is empty
  std::size_t train_sequences = 1;
  std::size_t eval_sequences = 10;
  std::uint64_t eval_seed_offset = 10000;  // held-out seeds start at spec.seed + offset
};

/// Every tunable constant of the tracker. Parsed from JSON; unknown keys are
/// rejected so typos surface as ConfigError.
struct Config {
  std::uint64_t seed = 1;
  ModelConfig model;
  LossWeights weights;
  LossOptions loss;
  TrainConfig train;
  TrackConfig tracker;
  DataConfig data;

  void validate() const;
};

Config parse_config(const std::string& json_text);
std::string dump_config(const Config& cfg, int indent = -1);
/// Only the model section, used to compare a checkpoint against a config.
std::string dump_model_config(const ModelConfig& cfg);

SyntheticSpec parse_synthetic_spec(const std::string& json_text);
std::string dump_synthetic_spec(const SyntheticSpec& spec, int indent = -1);

/// Reads a whole file; throws DataError when unreadable.
std::string read_text_file(const std::string& path);

}  // namespace gltt
