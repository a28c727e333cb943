#include "gltt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "gltt/error.hpp"

namespace gltt {

double wrap_angle(double radians) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(radians, two_pi);  // (-2pi, 2pi)
  if (r > std::numbers::pi) r -= two_pi;
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

void PointCloud::validate() const {
  if (coords.cols() != 3)
    throw InputError("PointCloud: coords must be Mx3, got " + coords.shape_string());
  if (!coords.all_finite()) throw InputError("PointCloud: non-finite coordinate");
  if (features && features->rows() != coords.rows())
    throw InputError("PointCloud: feature rows " + std::to_string(features->rows()) +
                     " != point count " + std::to_string(coords.rows()));
}

void Box3D::validate() const {
  for (double v : center)
    if (!std::isfinite(v)) throw ParameterError("Box3D: non-finite center");
  for (double s : size)
    if (!(s > 0.0) || !std::isfinite(s))
      throw ParameterError("Box3D: size entries must be finite and > 0");
  if (!std::isfinite(yaw)) throw ParameterError("Box3D: non-finite yaw");
}

Box3D Box3D::normalized() const {
  Box3D b = *this;
  b.yaw = wrap_angle(yaw);
  return b;
}

Vec3 Box3D::to_local(const Vec3& p) const noexcept {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double dx = p[0] - center[0], dy = p[1] - center[1];
  return {c * dx + s * dy, -s * dx + c * dy, p[2] - center[2]};
}

Vec3 Box3D::to_world(const Vec3& q) const noexcept {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {c * q[0] - s * q[1] + center[0], s * q[0] + c * q[1] + center[1],
          q[2] + center[2]};
}

std::array<Vec3, 8> Box3D::corners() const noexcept {
  const Vec3 h = half_extents();
  std::array<Vec3, 8> out{};
  std::size_t k = 0;
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0})
      for (double sz : {-1.0, 1.0}) out[k++] = to_world({sx * h[0], sy * h[1], sz * h[2]});
  return out;
}

DistanceMatrix distance_matrix(const Matrix& coords) {
  if (coords.cols() != 3)
    throw ShapeError("distance_matrix: coords must be Mx3, got " + coords.shape_string());
  if (coords.rows() == 0) throw ParameterError("distance_matrix: empty point set");
  if (!coords.all_finite()) throw InputError("distance_matrix: non-finite coordinate");
  const std::size_t n = coords.rows();
  Matrix d(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = coords(i, 0) - coords(j, 0);
      const double dy = coords(i, 1) - coords(j, 1);
      const double dz = coords(i, 2) - coords(j, 2);
      const double v = std::sqrt(dx * dx + dy * dy + dz * dz);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return DistanceMatrix(std::move(d));
}

namespace {

// Row i ordered by (distance, index); only the first `keep` entries are
// guaranteed sorted.
std::vector<std::size_t> sorted_row(const DistanceMatrix& dist, std::size_t i,
                                    std::size_t keep) {
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) {
    const double da = dist(i, a), db = dist(i, b);
    return da < db || (da == db && a < b);
  };
  if (keep >= order.size())
    std::sort(order.begin(), order.end(), less);
  else
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                      order.end(), less);
  return order;
}

}  // namespace

NeighborIndex sparse_sample(const DistanceMatrix& dist, std::size_t m) {
  const std::size_t n = dist.size();
  if (m == 0 || m > n)
    throw ParameterError("sparse_sample: m=" + std::to_string(m) + " outside [1, " +
                         std::to_string(n) + "]");
  const std::size_t stride = n / m;
  NeighborIndex out{n, m, std::vector<std::size_t>(n * m)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto order = sorted_row(dist, i, (m - 1) * stride + 1);
    for (std::size_t p = 0; p < m; ++p) out.indices[i * m + p] = order[p * stride];
  }
  return out;
}

NeighborIndex knn_sample(const DistanceMatrix& dist, std::size_t k) {
  const std::size_t n = dist.size();
  if (k == 0 || k > n)
    throw ParameterError("knn_sample: n=" + std::to_string(k) + " outside [1, " +
                         std::to_string(n) + "]");
  NeighborIndex out{n, k, std::vector<std::size_t>(n * k)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto order = sorted_row(dist, i, k);
    std::copy_n(order.begin(), k, out.indices.begin() + static_cast<std::ptrdiff_t>(i * k));
  }
  return out;
}

NeighborIndex knn_query(const Matrix& coords, std::span<const std::size_t> anchors, std::size_t n) {
  const std::size_t N = coords.rows();
  if (coords.cols() != 3) throw ShapeError("knn_query: coords must be Mx3");
  if (n == 0 || n > N)
    throw ParameterError("knn_query: n=" + std::to_string(n) + " outside [1, " +
                         std::to_string(N) + "]");
  NeighborIndex out{anchors.size(), n, std::vector<std::size_t>(anchors.size() * n)};
  std::vector<double> d(N);
  std::vector<std::size_t> order(N);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const std::size_t i = anchors[a];
    if (i >= N) throw ParameterError("knn_query: anchor out of range");
    for (std::size_t j = 0; j < N; ++j) {
      const double dx = coords(i, 0) - coords(j, 0);
      const double dy = coords(i, 1) - coords(j, 1);
      const double dz = coords(i, 2) - coords(j, 2);
      d[j] = std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::size_t x, std::size_t y) { return d[x] < d[y] || (d[x] == d[y] && x < y); });
    std::copy_n(order.begin(), n, out.indices.begin() + static_cast<std::ptrdiff_t>(a * n));
  }
  return out;
}

std::vector<std::size_t> farthest_point_sample(const Matrix& coords, std::size_t count,
                                               std::size_t start) {
  const std::size_t n = coords.rows();
  if (coords.cols() != 3) throw ShapeError("farthest_point_sample: coords must be Mx3");
  if (count == 0 || count > n)
    throw ParameterError("farthest_point_sample: K=" + std::to_string(count) +
                         " outside [1, " + std::to_string(n) + "]");
  if (start >= n) throw ParameterError("farthest_point_sample: start out of range");

  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> picked(n, false);
  std::vector<std::size_t> out;
  out.reserve(count);
  std::size_t current = start;
  for (std::size_t step = 0; step < count; ++step) {
    out.push_back(current);
    picked[current] = true;
    if (step + 1 == count) break;
    std::size_t best = n;
    double best_d = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (picked[j]) continue;
      const double dx = coords(j, 0) - coords(current, 0);
      const double dy = coords(j, 1) - coords(current, 1);
      const double dz = coords(j, 2) - coords(current, 2);
      min_d2[j] = std::min(min_d2[j], dx * dx + dy * dy + dz * dz);
      if (min_d2[j] > best_d) {
        best_d = min_d2[j];
        best = j;
      }
    }
    current = best;
  }
  return out;
}

std::size_t lexicographic_min_index(const Matrix& coords) {
  if (coords.rows() == 0) throw ParameterError("lexicographic_min_index: empty point set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < coords.rows(); ++i) {
    const auto a = coords.row(i), b = coords.row(best);
    if (std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end())) best = i;
  }
  return best;
}

std::vector<std::uint8_t> points_in_box(const Matrix& coords, const Box3D& box) {
  box.validate();
  if (coords.cols() != 3) throw ShapeError("points_in_box: coords must be Mx3");
  const Vec3 h = box.half_extents();
  std::vector<std::uint8_t> mask(coords.rows(), 0);
  for (std::size_t i = 0; i < coords.rows(); ++i) {
    const Vec3 q = box.to_local({coords(i, 0), coords(i, 1), coords(i, 2)});
    mask[i] = std::abs(q[0]) <= h[0] && std::abs(q[1]) <= h[1] && std::abs(q[2]) <= h[2];
  }
  return mask;
}

namespace {

struct P2 {
  double x, y;
};

double cross(const P2& o, const P2& a, const P2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::vector<P2> footprint(const Box3D& b) {
  const Vec3 h = b.half_extents();
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  std::vector<P2> poly;
  for (auto [lx, ly] : {std::pair{h[0], h[1]}, {-h[0], h[1]}, {-h[0], -h[1]}, {h[0], -h[1]}})
    poly.push_back({c * lx - s * ly + b.center[0], s * lx + c * ly + b.center[1]});
  return poly;  // counter-clockwise
}

double polygon_area(const std::vector<P2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const P2& p = poly[i];
    const P2& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return std::abs(a) / 2.0;
}

}  // namespace

double footprint_intersection_area(const Box3D& a, const Box3D& b) {
  std::vector<P2> subject = footprint(a);
  const std::vector<P2> clip = footprint(b);
  // Sutherland-Hodgman against each counter-clockwise edge of `clip`.
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const P2& c0 = clip[e];
    const P2& c1 = clip[(e + 1) % clip.size()];
    std::vector<P2> next;
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const P2& p = subject[i];
      const P2& q = subject[(i + 1) % subject.size()];
      const double sp = cross(c0, c1, p), sq = cross(c0, c1, q);
      if (sp >= 0) next.push_back(p);
      if ((sp >= 0) != (sq >= 0)) {
        const double t = sp / (sp - sq);
        next.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
      }
    }
    subject = std::move(next);
  }
  return subject.size() < 3 ? 0.0 : polygon_area(subject);
}

double box_iou_3d(const Box3D& a, const Box3D& b) {
  a.validate();
  b.validate();
  const double ha = a.size[1] / 2, hb = b.size[1] / 2;
  const double z_overlap = std::min(a.center[2] + ha, b.center[2] + hb) -
                           std::max(a.center[2] - ha, b.center[2] - hb);
  if (z_overlap <= 0.0) return 0.0;
  const double area = footprint_intersection_area(a, b);
  if (area <= 0.0) return 0.0;
  const double inter = area * z_overlap;
  const double iou = inter / (a.volume() + b.volume() - inter);
  return std::clamp(iou, 0.0, 1.0);
}

double center_distance(const Box3D& a, const Box3D& b) noexcept {
  const double dx = a.center[0] - b.center[0];
  const double dy = a.center[1] - b.center[1];
  const double dz = a.center[2] - b.center[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace gltt
