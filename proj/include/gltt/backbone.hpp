#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "gltt/diffcore.hpp"
#include "gltt/geometry.hpp"

namespace gltt {

/// Single set-abstraction stage plus a box-aware correlation, standing in
/// for a full multi-scale point backbone.
struct BackboneConfig {
  std::size_t template_points = 512;  // N_t
  std::size_t search_points = 1024;   // N_s
  std::size_t seeds = 128;            // M_s
  std::size_t feature_dim = 128;      // D
  std::size_t group_size = 16;        // KNN group per point
  std::size_t point_hidden = 64;      // width of the shared point MLP

  void validate() const;
};

inline const std::string kPointMlp = "backbone.point";
inline const std::string kCorrelation = "backbone.proj";

inline constexpr std::size_t kBoxPriorWidth = 9;

MlpSpec point_mlp_spec(const BackboneConfig& cfg);
void init_backbone(ParamStore& store, const BackboneConfig& cfg, std::mt19937_64& rng);

/// Per point: offset to the box center in the box frame (3) followed by the
/// distances to the six extent planes (+x, -x, +y, -y, +z, -z faces).
Matrix box_prior(const Matrix& coords, const Box3D& box);

/// Shared MLP over KNN-grouped relative coordinates (neighbor - anchor),
/// max-pooled per anchor: anchors × H.
Var local_point_features(Tape& tape, const Matrix& coords, std::span<const std::size_t> anchors,
                         const BackboneConfig& cfg, ParamStore& store);

struct SeedExtraction {
  Var features;                      // M_s×D
  Matrix coords;                     // M_s×3, rows of the search cloud
  std::vector<std::size_t> indices;  // search rows the seeds came from
};

/// Template and search share the point MLP. The template is summarised by a
/// max-pooled global feature; every search seed concatenates its local
/// feature, that summary and its box prior relative to `template_box`, then
/// projects to width D. Seeds are chosen by FPS over the search cloud,
/// starting from its lexicographically smallest point.
///
/// `search` must be expressed in the frame in which `template_box` is given.
SeedExtraction extract_seeds(Tape& tape, const PointCloud& templ, const Box3D& template_box,
                             const PointCloud& search, const BackboneConfig& cfg,
                             ParamStore& store);

}  // namespace gltt
