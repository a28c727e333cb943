#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gltt/matrix.hpp"

namespace gltt {

using Vec3 = std::array<double, 3>;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double radians);

/// Point coordinates (M×3, meters, z up) with optional per-point features.
struct PointCloud {
  Matrix coords;
  std::optional<Matrix> features;

  std::size_t size() const noexcept { return coords.rows(); }
  /// Throws InputError on non-finite coordinates or mismatched feature rows.
  void validate() const;
};

/// Oriented 3D box rotated about the up (z) axis.
///
/// `size` is (w, h, l): l spans the box-frame x axis (heading), w the y axis
/// and h the vertical z axis.
struct Box3D {
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 size{1.0, 1.0, 1.0};
  double yaw = 0.0;

  /// Half extents along box-frame x, y, z.
  Vec3 half_extents() const noexcept { return {size[2] / 2, size[0] / 2, size[1] / 2}; }
  double volume() const noexcept { return size[0] * size[1] * size[2]; }
  /// Throws ParameterError when a size entry is not strictly positive or
  /// any field is non-finite.
  void validate() const;
  /// Copy with yaw wrapped to (-pi, pi].
  Box3D normalized() const;

  /// World point → box frame (translate by -center, rotate by -yaw).
  Vec3 to_local(const Vec3& world) const noexcept;
  /// Box frame → world.
  Vec3 to_world(const Vec3& local) const noexcept;
  /// The 8 corners in world coordinates.
  std::array<Vec3, 8> corners() const noexcept;
};

/// Symmetric, zero-diagonal pairwise Euclidean distances.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(Matrix d) : d_(std::move(d)) {}
  std::size_t size() const noexcept { return d_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return d_(i, j); }
  const Matrix& matrix() const noexcept { return d_; }

 private:
  Matrix d_;
};

/// Per-anchor neighbor lists, `k` entries per row.
struct NeighborIndex {
  std::size_t anchors = 0;
  std::size_t k = 0;
  std::vector<std::size_t> indices;  // anchors × k, row-major

  std::span<const std::size_t> row(std::size_t i) const {
    return {indices.data() + i * k, k};
  }
};

DistanceMatrix distance_matrix(const Matrix& coords);

/// Sorted-stride sampling: each row sorted by ascending distance (ties by
/// index), then positions 0, s, 2s, ..., (m-1)s with s = floor(M/m).
NeighborIndex sparse_sample(const DistanceMatrix& dist, std::size_t m);

/// The n nearest indices per row, ascending, ties by index; includes self.
NeighborIndex knn_sample(const DistanceMatrix& dist, std::size_t n);

/// The n nearest points of `coords` for each listed anchor row, ascending,
/// ties by index; the anchor itself comes first.
NeighborIndex knn_query(const Matrix& coords, std::span<const std::size_t> anchors, std::size_t n);

/// Greedy farthest point sampling starting at `start`; ties go to the
/// smallest index. Returns `count` distinct indices in pick order.
std::vector<std::size_t> farthest_point_sample(const Matrix& coords, std::size_t count,
                                               std::size_t start = 0);

/// Index of the lexicographically smallest (x, y, z) row. Depends only on
/// the point set, not on row order (ties resolved to the first occurrence).
std::size_t lexicographic_min_index(const Matrix& coords);

/// Boundary-inclusive containment in the box frame.
std::vector<std::uint8_t> points_in_box(const Matrix& coords, const Box3D& box);

/// Area of the intersection of the ground-plane footprints of two boxes.
double footprint_intersection_area(const Box3D& a, const Box3D& b);

/// Volume IoU of two up-axis-rotated boxes, in [0, 1].
double box_iou_3d(const Box3D& a, const Box3D& b);

double center_distance(const Box3D& a, const Box3D& b) noexcept;

}  // namespace gltt
