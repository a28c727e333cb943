#include "gltt/glt.hpp"

#include "gltt/error.hpp"

namespace gltt {

void SeedSet::validate() const {
  if (coords.cols() != 3) throw InputError("SeedSet: coords must be Mx3");
  if (features.rows() != coords.rows())
    throw InputError("SeedSet: " + std::to_string(features.rows()) + " feature rows vs " +
                     std::to_string(coords.rows()) + " coordinates");
  if (!coords.all_finite() || !features.all_finite())
    throw InputError("SeedSet: non-finite entry");
}

void AttentionConfig::validate(std::size_t seed_count) const {
  if (feature_dim < 2 || latent_dim == 0 || sparse_count == 0 || knn_count == 0)
    throw ConfigError("AttentionConfig: D must be >= 2 and C, m, n positive");
  if (sparse_count > seed_count)
    throw ConfigError("AttentionConfig: m=" + std::to_string(sparse_count) +
                      " exceeds seed count " + std::to_string(seed_count));
  if (knn_count > seed_count)
    throw ConfigError("AttentionConfig: n=" + std::to_string(knn_count) +
                      " exceeds seed count " + std::to_string(seed_count));
}

MlpSpec position_mlp_spec(const AttentionConfig& cfg) {
  return MlpSpec::two_layer_relu(3, cfg.latent_dim, cfg.latent_dim);
}

MlpSpec attention_mlp_spec(const AttentionConfig& cfg) {
  return MlpSpec::two_layer_relu(cfg.latent_dim, cfg.latent_dim, cfg.latent_dim);
}

MlpSpec importance_mlp_spec(std::size_t feature_dim) {
  return MlpSpec::three_layer(feature_dim, feature_dim, std::max<std::size_t>(feature_dim / 2, 1),
                              1, NormKind::none);
}

void init_transformer_block(ParamStore& store, const std::string& prefix,
                            const AttentionConfig& cfg, std::mt19937_64& rng) {
  const std::size_t D = cfg.feature_dim, C = cfg.latent_dim;
  init_mlp(store, prefix + ".pos", position_mlp_spec(cfg), rng);
  init_linear(store, prefix + ".q", D, C, rng);
  init_linear(store, prefix + ".k", D, C, rng);
  init_linear(store, prefix + ".v", D, C, rng);
  init_mlp(store, prefix + ".attn", attention_mlp_spec(cfg), rng);
  init_linear(store, prefix + ".ffn", C, D, rng);
  store.add(prefix + ".norm.g", 1, D).value.fill(1.0);
  store.add(prefix + ".norm.b", 1, D);
}

void init_importance_branch(ParamStore& store, const std::string& prefix,
                            std::size_t feature_dim, std::mt19937_64& rng) {
  init_mlp(store, prefix, importance_mlp_spec(feature_dim), rng);
}

Matrix relative_offsets(const Matrix& coords, const NeighborIndex& neighbors) {
  if (neighbors.anchors != coords.rows())
    throw ShapeError("relative_offsets: neighbor index has " + std::to_string(neighbors.anchors) +
                     " anchors for " + std::to_string(coords.rows()) + " points");
  Matrix rel(neighbors.anchors * neighbors.k, 3);
  for (std::size_t i = 0; i < neighbors.anchors; ++i) {
    const auto row = neighbors.row(i);
    for (std::size_t j = 0; j < neighbors.k; ++j) {
      if (row[j] >= coords.rows()) throw ShapeError("relative_offsets: neighbor out of range");
      for (std::size_t a = 0; a < 3; ++a)
        rel(i * neighbors.k + j, a) = coords(i, a) - coords(row[j], a);
    }
  }
  return rel;
}

Var position_encoding(Tape& tape, const Matrix& coords, const NeighborIndex& neighbors,
                      ParamStore& store, const std::string& block_prefix,
                      const AttentionConfig& cfg) {
  Var rel = tape.constant(relative_offsets(coords, neighbors));
  return mlp_forward(rel, position_mlp_spec(cfg), store, block_prefix + ".pos");
}

AttentionResult vector_attention(Var features, const NeighborIndex& neighbors, Var pos,
                                 ParamStore& store, const std::string& block_prefix,
                                 const AttentionConfig& cfg) {
  const std::size_t M = features.rows(), k = neighbors.k;
  if (neighbors.anchors != M)
    throw ShapeError("vector_attention: " + std::to_string(neighbors.anchors) +
                     " neighbor rows for " + std::to_string(M) + " feature rows");
  if (pos.rows() != M * k || pos.cols() != cfg.latent_dim)
    throw ShapeError("vector_attention: position encoding is " + pos.value().shape_string() +
                     ", expected " + std::to_string(M * k) + "x" + std::to_string(cfg.latent_dim));

  Var q = linear(features, store, block_prefix + ".q");
  Var key = linear(features, store, block_prefix + ".k");
  Var val = linear(features, store, block_prefix + ".v");

  std::vector<std::size_t> anchors(M * k);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < k; ++j) anchors[i * k + j] = i;

  Var q_rep = gather_rows(q, anchors);
  Var k_nb = gather_rows(key, neighbors.indices);
  Var v_nb = gather_rows(val, neighbors.indices);

  Var logits = mlp_forward(add(sub(q_rep, k_nb), pos), attention_mlp_spec(cfg), store,
                           block_prefix + ".attn");
  Var weights = segment_softmax(logits, k);
  Var out = segment_sum(mul(weights, add(v_nb, pos)), k);
  return {out, weights};
}

Var transformer_block(Var features, const Matrix& coords, const NeighborIndex& neighbors,
                      ParamStore& store, const std::string& block_prefix,
                      const AttentionConfig& cfg) {
  if (features.cols() != cfg.feature_dim)
    throw ShapeError("transformer_block: feature width " + std::to_string(features.cols()) +
                     " != D=" + std::to_string(cfg.feature_dim));
  Tape& tape = *features.tape;
  Var pos = position_encoding(tape, coords, neighbors, store, block_prefix, cfg);
  Var attended = vector_attention(features, neighbors, pos, store, block_prefix, cfg).output;
  Var residual = add(linear(attended, store, block_prefix + ".ffn"), features);
  return layer_norm(residual, tape.parameter(store, block_prefix + ".norm.g"),
                    tape.parameter(store, block_prefix + ".norm.b"));
}

Var global_transformer_block(Var features, const Matrix& coords, const DistanceMatrix& dist,
                             const AttentionConfig& cfg, ParamStore& store) {
  cfg.validate(coords.rows());
  return transformer_block(features, coords, sparse_sample(dist, cfg.sparse_count), store,
                           kGlobalBlock, cfg);
}

Var global_transformer_block(Var features, const Matrix& coords, const AttentionConfig& cfg,
                             ParamStore& store) {
  return global_transformer_block(features, coords, distance_matrix(coords), cfg, store);
}

Var local_transformer_block(Var features, const Matrix& coords, const DistanceMatrix& dist,
                            const AttentionConfig& cfg, ParamStore& store) {
  cfg.validate(coords.rows());
  return transformer_block(features, coords, knn_sample(dist, cfg.knn_count), store,
                           kLocalBlock, cfg);
}

Var local_transformer_block(Var features, const Matrix& coords, const AttentionConfig& cfg,
                            ParamStore& store) {
  return local_transformer_block(features, coords, distance_matrix(coords), cfg, store);
}

Var importance_branch(Var global_features, ParamStore& store) {
  const std::size_t D = global_features.cols();
  return sigmoid(mlp_forward(global_features, importance_mlp_spec(D), store, kImportanceBranch));
}

GltOutput glt_forward(Var features, const Matrix& coords, const AttentionConfig& cfg,
                      const GltSwitches& switches, ParamStore& store) {
  GltOutput out{features, features, Var{}};
  if (!switches.global_block && !switches.local_block && !switches.importance) return out;
  const DistanceMatrix dist = distance_matrix(coords);
  if (switches.global_block)
    out.global_features = global_transformer_block(features, coords, dist, cfg, store);
  if (switches.importance) out.importance = importance_branch(out.global_features, store);
  out.local_features = switches.local_block
                           ? local_transformer_block(out.global_features, coords, dist, cfg, store)
                           : out.global_features;
  return out;
}

}  // namespace gltt
