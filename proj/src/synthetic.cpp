#include "gltt/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gltt/error.hpp"
#include "gltt/sequence.hpp"

namespace gltt {

const char* to_string(ShapeKind kind) noexcept {
  switch (kind) {
    case ShapeKind::box_surface: return "box_surface";
    case ShapeKind::l_shape: return "l_shape";
    case ShapeKind::cylinder_shell: return "cylinder_shell";
  }
  return "box_surface";
}

ShapeKind parse_shape_kind(const std::string& text) {
  if (text == "box_surface") return ShapeKind::box_surface;
  if (text == "l_shape") return ShapeKind::l_shape;
  if (text == "cylinder_shell") return ShapeKind::cylinder_shell;
  throw ConfigError("unknown shape kind '" + text + "'");
}

void SyntheticSpec::validate() const {
  if (frames < 2) throw ConfigError("SyntheticSpec: need at least 2 frames");
  for (double s : size)
    if (!(s > 2 * surface_pad)) throw ConfigError("SyntheticSpec: size must exceed 2*surface_pad");
  if (surface_pad < 0 || noise < 0 || clutter_extent < 0 || motion_jitter < 0)
    throw ConfigError("SyntheticSpec: pad, noise, clutter extent and jitter must be >= 0");
  if (target_points == 0) throw ConfigError("SyntheticSpec: target_points must be positive");
}

Matrix sample_target_shape(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double hx = spec.size[2] / 2 - spec.surface_pad;
  const double hy = spec.size[0] / 2 - spec.surface_pad;
  const double hz = spec.size[1] / 2 - spec.surface_pad;
  Matrix pts(spec.target_points, 3);

  // Faces as (fixed axis, sign, area).
  struct Face {
    int axis;
    double sign;
    double area;
  };
  std::vector<Face> faces;
  switch (spec.shape) {
    case ShapeKind::box_surface:
      for (double s : {-1.0, 1.0}) {
        faces.push_back({0, s, hy * hz});
        faces.push_back({1, s, hx * hz});
        faces.push_back({2, s, hx * hy});
      }
      break;
    case ShapeKind::l_shape:
      faces.push_back({0, -1.0, hy * hz});
      faces.push_back({1, 1.0, hx * hz});
      break;
    case ShapeKind::cylinder_shell:
      break;
  }

  const double half[3] = {hx, hy, hz};
  double total_area = 0.0;
  for (const auto& f : faces) total_area += f.area;
  std::uniform_real_distribution<double> pick(0.0, total_area);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  const double radius = std::min(hx, hy);

  for (std::size_t i = 0; i < spec.target_points; ++i) {
    if (spec.shape == ShapeKind::cylinder_shell) {
      const double a = angle(rng);
      pts(i, 0) = radius * std::cos(a);
      pts(i, 1) = radius * std::sin(a);
      pts(i, 2) = hz * u(rng);
      continue;
    }
    double r = pick(rng);
    std::size_t f = 0;
    while (f + 1 < faces.size() && r > faces[f].area) r -= faces[f++].area;
    for (int a = 0; a < 3; ++a)
      pts(i, static_cast<std::size_t>(a)) =
          a == faces[f].axis ? faces[f].sign * half[a] : half[a] * u(rng);
  }
  return pts;
}

Box3D trajectory_pose(const Box3D& start, const Vec3& translation, double yaw_rate, std::size_t k) {
  Box3D pose = start;
  for (std::size_t step = 0; step < k; ++step) {
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    pose.center[0] += c * translation[0] - s * translation[1];
    pose.center[1] += s * translation[0] + c * translation[1];
    pose.center[2] += translation[2];
    pose.yaw = wrap_angle(pose.yaw + yaw_rate);
  }
  return pose;
}

Sequence generate_synthetic_sequence(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Matrix body = sample_target_shape(spec, spec.seed ^ 0x9e3779b97f4a7c15ULL);

  Vec3 translation = spec.translation;
  double yaw_rate = spec.yaw_rate;
  Box3D start{spec.initial_center, spec.size, spec.initial_yaw};
  if (spec.motion_jitter > 0) {
    std::uniform_real_distribution<double> j(1.0 - spec.motion_jitter, 1.0 + spec.motion_jitter);
    std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
    const double speed = j(rng);
    for (double& t : translation) t *= speed;
    yaw_rate *= j(rng);
    start.yaw = wrap_angle(start.yaw + heading(rng));
  }

  start = start.normalized();
  std::normal_distribution<double> jitter(0.0, spec.noise);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  Sequence seq;
  seq.category = spec.category;
  seq.frames.reserve(spec.frames);
  for (std::size_t k = 0; k < spec.frames; ++k) {
    const Box3D pose = trajectory_pose(start, translation, yaw_rate, k);
    Frame frame;
    frame.gt = pose;
    Matrix cloud(body.rows() + spec.clutter, 3);
    for (std::size_t i = 0; i < body.rows(); ++i) {
      const Vec3 w = pose.to_world({body(i, 0), body(i, 1), body(i, 2)});
      for (std::size_t a = 0; a < 3; ++a)
        cloud(i, a) = w[a] + (spec.noise > 0 ? jitter(rng) : 0.0);
    }
    // Clutter: uniform in a world-axis-aligned slab around the target,
    // rejected when it falls inside the ground-truth box.
    const Vec3 h = pose.half_extents();
    const double reach = std::hypot(h[0], h[1]) + spec.clutter_extent;
    for (std::size_t c = 0; c < spec.clutter; ++c) {
      Vec3 p{};
      do {
        p = {pose.center[0] + reach * unit(rng), pose.center[1] + reach * unit(rng),
             pose.center[2] + h[2] * unit(rng)};
        const Vec3 q = pose.to_local(p);
        if (!(std::abs(q[0]) <= h[0] && std::abs(q[1]) <= h[1] && std::abs(q[2]) <= h[2])) break;
      } while (true);
      for (std::size_t a = 0; a < 3; ++a) cloud(body.rows() + c, a) = p[a];
    }
    frame.cloud.coords = std::move(cloud);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

std::vector<Sequence> generate_synthetic_dataset(const SyntheticSpec& spec, std::size_t count) {
  std::vector<Sequence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SyntheticSpec s = spec;
    s.seed = spec.seed + i;
    Sequence seq = generate_synthetic_sequence(s);
    char name[32];
    std::snprintf(name, sizeof name, "seq_%03zu", i);
    seq.name = name;
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace gltt
