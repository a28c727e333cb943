#include "gltt/backbone.hpp"

#include <numeric>

#include "gltt/error.hpp"

namespace gltt {

void BackboneConfig::validate() const {
  if (template_points == 0 || search_points == 0 || seeds == 0 || feature_dim < 2 ||
      group_size == 0 || point_hidden == 0)
    throw ConfigError("BackboneConfig: sizes must be positive (D >= 2)");
  if (seeds > search_points)
    throw ConfigError("BackboneConfig: M_s=" + std::to_string(seeds) + " exceeds N_s=" +
                      std::to_string(search_points));
  if (group_size > template_points || group_size > search_points)
    throw ConfigError("BackboneConfig: group size exceeds point counts");
}

MlpSpec point_mlp_spec(const BackboneConfig& cfg) {
  return MlpSpec{3,
                 {{cfg.point_hidden, NormKind::none, Activation::relu},
                  {cfg.point_hidden, NormKind::none, Activation::relu}}};
}

void init_backbone(ParamStore& store, const BackboneConfig& cfg, std::mt19937_64& rng) {
  init_mlp(store, kPointMlp, point_mlp_spec(cfg), rng);
  init_linear(store, kCorrelation, 2 * cfg.point_hidden + kBoxPriorWidth, cfg.feature_dim, rng);
}

Matrix box_prior(const Matrix& coords, const Box3D& box) {
  box.validate();
  const Vec3 h = box.half_extents();
  Matrix out(coords.rows(), kBoxPriorWidth);
  for (std::size_t i = 0; i < coords.rows(); ++i) {
    const Vec3 q = box.to_local({coords(i, 0), coords(i, 1), coords(i, 2)});
    for (std::size_t a = 0; a < 3; ++a) {
      out(i, a) = q[a];
      out(i, 3 + 2 * a) = h[a] - q[a];
      out(i, 4 + 2 * a) = h[a] + q[a];
    }
  }
  return out;
}

Var local_point_features(Tape& tape, const Matrix& coords, std::span<const std::size_t> anchors,
                         const BackboneConfig& cfg, ParamStore& store) {
  const NeighborIndex groups = knn_query(coords, anchors, cfg.group_size);
  Matrix rel(anchors.size() * groups.k, 3);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const auto row = groups.row(a);
    for (std::size_t j = 0; j < groups.k; ++j)
      for (std::size_t c = 0; c < 3; ++c)
        rel(a * groups.k + j, c) = coords(row[j], c) - coords(anchors[a], c);
  }
  Var h = mlp_forward(tape.constant(std::move(rel)), point_mlp_spec(cfg), store, kPointMlp);
  return segment_max(h, groups.k);
}

SeedExtraction extract_seeds(Tape& tape, const PointCloud& templ, const Box3D& template_box,
                             const PointCloud& search, const BackboneConfig& cfg,
                             ParamStore& store) {
  cfg.validate();
  templ.validate();
  search.validate();
  if (search.size() < cfg.seeds)
    throw InputError("extract_seeds: search region has " + std::to_string(search.size()) +
                     " points, need at least " + std::to_string(cfg.seeds));
  if (templ.size() < cfg.group_size || search.size() < cfg.group_size)
    throw InputError("extract_seeds: fewer points than the KNN group size");

  std::vector<std::size_t> all_template(templ.size());
  std::iota(all_template.begin(), all_template.end(), std::size_t{0});
  Var template_points = local_point_features(tape, templ.coords, all_template, cfg, store);
  Var template_summary = segment_max(template_points, templ.size());  // 1×H

  SeedExtraction out;
  out.indices = farthest_point_sample(search.coords, cfg.seeds,
                                      lexicographic_min_index(search.coords));
  out.coords = Matrix(cfg.seeds, 3);
  for (std::size_t s = 0; s < cfg.seeds; ++s)
    for (std::size_t a = 0; a < 3; ++a) out.coords(s, a) = search.coords(out.indices[s], a);

  Var seed_local = local_point_features(tape, search.coords, out.indices, cfg, store);
  const std::vector<std::size_t> broadcast(cfg.seeds, 0);
  Var correlated = concat_cols({seed_local, gather_rows(template_summary, broadcast),
                                tape.constant(box_prior(out.coords, template_box))});
  out.features = linear(correlated, store, kCorrelation);
  return out;
}

}  // namespace gltt
