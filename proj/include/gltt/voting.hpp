#pragma once

#include <random>
#include <string>
#include <vector>

#include "gltt/diffcore.hpp"
#include "gltt/geometry.hpp"

namespace gltt {

/// Votes: f^v = f^gl + Δf, c^v = c + Δc.
struct VoteSet {
  Matrix features;  // M×D
  Matrix coords;    // M×3
  Matrix offsets;   // M×3, Δc
};

struct VoteVars {
  Var features;
  Var coords;
  Var offsets;

  VoteSet values() const { return {features.value(), coords.value(), offsets.value()}; }
};

/// Candidate centers drawn from the votes; scores and yaws are filled in from
/// the prediction head.
struct ProposalSet {
  Matrix centers;                           // K×3
  std::vector<std::size_t> source_indices;  // rows of the vote set
  std::vector<double> scores;
  std::vector<double> yaws;

  std::size_t size() const noexcept { return source_indices.size(); }
};

inline const std::string kVoting = "voting";

/// (D+3) → (D+3) → (D+3) → (D+3), normalisation and ReLU on the hidden layers.
MlpSpec voting_mlp_spec(std::size_t feature_dim, NormKind norm);
void init_voting(ParamStore& store, std::size_t feature_dim, NormKind norm, std::mt19937_64& rng);

/// Runs the voting MLP on [f^gl; c] and applies the residuals.
VoteVars vote(Var seed_features, const Matrix& coords, ParamStore& store, NormKind norm);

/// FPS over vote coordinates, starting at vote 0. Requires K < M.
ProposalSet select_proposals(const Matrix& vote_coords, std::size_t count);

}  // namespace gltt
