#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "gltt/diffcore.hpp"
#include "gltt/geometry.hpp"

namespace gltt {

/// Seed points: features f (M×D) paired with coordinates c (M×3).
struct SeedSet {
  Matrix features;
  Matrix coords;

  std::size_t size() const noexcept { return coords.rows(); }
  /// Throws InputError on mismatched rows or non-finite entries.
  void validate() const;
};

struct AttentionConfig {
  std::size_t feature_dim = 128;  // D
  std::size_t latent_dim = 64;    // C
  std::size_t sparse_count = 16;  // m
  std::size_t knn_count = 16;     // n

  /// Throws ConfigError for zero sizes or m, n larger than `seed_count`.
  void validate(std::size_t seed_count) const;
};

inline const std::string kGlobalBlock = "glt.global";
inline const std::string kLocalBlock = "glt.local";
inline const std::string kImportanceBranch = "glt.importance";

/// Parameters of one transformer block under `prefix`:
///   .pos   relative-position MLP 3 → C → C
///   .q .k .v  linear D → C
///   .attn  attention MLP C → C → C
///   .ffn   linear C → D
///   .norm.g / .norm.b  layer norm over D
void init_transformer_block(ParamStore& store, const std::string& prefix,
                            const AttentionConfig& cfg, std::mt19937_64& rng);
/// Importance MLP D → D → D/2 → 1 under `prefix`.
void init_importance_branch(ParamStore& store, const std::string& prefix,
                            std::size_t feature_dim, std::mt19937_64& rng);

MlpSpec position_mlp_spec(const AttentionConfig& cfg);
MlpSpec attention_mlp_spec(const AttentionConfig& cfg);
MlpSpec importance_mlp_spec(std::size_t feature_dim);

/// Relative offsets c_i - c_j for every anchor i and neighbor j, as an
/// (M·k)×3 matrix.
Matrix relative_offsets(const Matrix& coords, const NeighborIndex& neighbors);

/// Encodes c_i - c_j through the block's position MLP: (M·k)×C.
Var position_encoding(Tape& tape, const Matrix& coords, const NeighborIndex& neighbors,
                      ParamStore& store, const std::string& block_prefix,
                      const AttentionConfig& cfg);

struct AttentionResult {
  Var output;   // M×C
  Var weights;  // (M·k)×C, each anchor's k rows sum to 1 per channel
};

/// Vector self-attention. Queries come from the anchor itself, keys and
/// values from its sampled neighbors; the softmax runs over the neighbor
/// axis independently for each channel.
AttentionResult vector_attention(Var features, const NeighborIndex& neighbors, Var pos,
                                 ParamStore& store, const std::string& block_prefix,
                                 const AttentionConfig& cfg);

/// Norm(FFN(attention(f)) + f) over the given neighbor sets.
Var transformer_block(Var features, const Matrix& coords, const NeighborIndex& neighbors,
                      ParamStore& store, const std::string& block_prefix,
                      const AttentionConfig& cfg);

/// Global block: sparse-sampled neighbors (m per seed) from the distance matrix.
Var global_transformer_block(Var features, const Matrix& coords, const AttentionConfig& cfg,
                             ParamStore& store);
Var global_transformer_block(Var features, const Matrix& coords, const DistanceMatrix& dist,
                             const AttentionConfig& cfg, ParamStore& store);
/// Local block: KNN neighbors (n per seed).
Var local_transformer_block(Var features, const Matrix& coords, const AttentionConfig& cfg,
                            ParamStore& store);
Var local_transformer_block(Var features, const Matrix& coords, const DistanceMatrix& dist,
                            const AttentionConfig& cfg, ParamStore& store);

/// Per-seed importance in (0, 1): sigmoid(MLP(f^g)), M×1.
Var importance_branch(Var global_features, ParamStore& store);

struct GltSwitches {
  bool global_block = true;
  bool local_block = true;
  bool importance = true;
};

struct GltOutput {
  Var global_features;  // f^g
  Var local_features;   // f^gl
  Var importance;       // invalid when the branch is off
};

/// Cascaded global → local blocks with the importance branch after the
/// global block. Disabled blocks pass features through unchanged. A single
/// distance matrix serves both blocks.
GltOutput glt_forward(Var features, const Matrix& coords, const AttentionConfig& cfg,
                      const GltSwitches& switches, ParamStore& store);

}  // namespace gltt
