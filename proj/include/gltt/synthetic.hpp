#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gltt/geometry.hpp"

namespace gltt {

struct Sequence;

enum class ShapeKind { box_surface, l_shape, cylinder_shell };

const char* to_string(ShapeKind kind) noexcept;
ShapeKind parse_shape_kind(const std::string& text);

/// Synthetic single-target scene generator settings.
///
/// The target is a rigid point sample of `shape` whose bounding box is the
/// ground-truth box shrunk by `surface_pad` on every side. Each frame moves
/// the target by `translation` (expressed in the target's own frame) and
/// turns it by `yaw_rate`, then adds Gaussian jitter and clutter points
/// scattered uniformly around (but never inside) the target box.
struct SyntheticSpec {
  ShapeKind shape = ShapeKind::box_surface;
  Vec3 size{2.0, 1.6, 4.0};  // w, h, l
  std::size_t frames = 20;
  Vec3 translation{0.5, 0.0, 0.0};
  double yaw_rate = 0.03;
  double noise = 0.02;  // sigma, meters
  std::size_t clutter = 50;
  double clutter_extent = 2.5;  // meters beyond the box on each horizontal side
  std::size_t target_points = 256;
  double surface_pad = 0.1;
  Vec3 initial_center{0.0, 0.0, 0.8};
  double initial_yaw = 0.0;
  /// Relative per-sequence variation of speed and turn rate plus a random
  /// initial heading; 0 keeps every sequence on the nominal trajectory.
  double motion_jitter = 0.0;
  std::string category = "synthetic";
  std::uint64_t seed = 1;
  std::size_t sequences = 1;  // how many sequences `gen` writes

  void validate() const;
};

/// Points of the rigid target in its own box frame (no noise).
Matrix sample_target_shape(const SyntheticSpec& spec, std::uint64_t seed);

/// Ground-truth pose of frame k for a trajectory that starts at `start` and
/// moves by (translation, yaw_rate) per frame.
Box3D trajectory_pose(const Box3D& start, const Vec3& translation, double yaw_rate, std::size_t k);

Sequence generate_synthetic_sequence(const SyntheticSpec& spec);

/// `count` sequences from `spec`, sequence i seeded with `spec.seed + i`.
std::vector<Sequence> generate_synthetic_dataset(const SyntheticSpec& spec, std::size_t count);

}  // namespace gltt
