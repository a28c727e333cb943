#include "gltt/voting.hpp"

#include "gltt/error.hpp"

namespace gltt {

MlpSpec voting_mlp_spec(std::size_t feature_dim, NormKind norm) {
  const std::size_t w = feature_dim + 3;
  return MlpSpec::three_layer(w, w, w, w, norm);
}

void init_voting(ParamStore& store, std::size_t feature_dim, NormKind norm, std::mt19937_64& rng) {
  init_mlp(store, kVoting, voting_mlp_spec(feature_dim, norm), rng);
}

VoteVars vote(Var seed_features, const Matrix& coords, ParamStore& store, NormKind norm) {
  const std::size_t M = seed_features.rows(), D = seed_features.cols();
  if (coords.rows() != M || coords.cols() != 3)
    throw ShapeError("vote: coords " + coords.shape_string() + " for " + std::to_string(M) +
                     " seeds");
  Tape& tape = *seed_features.tape;
  Var c = tape.constant(coords);
  Var delta = mlp_forward(concat_cols({seed_features, c}), voting_mlp_spec(D, norm), store, kVoting);
  Var df = slice_cols(delta, 0, D);
  Var dc = slice_cols(delta, D, 3);
  return {add(seed_features, df), add(c, dc), dc};
}

ProposalSet select_proposals(const Matrix& vote_coords, std::size_t count) {
  if (count == 0 || count >= vote_coords.rows())
    throw ParameterError("select_proposals: K=" + std::to_string(count) +
                         " must be in [1, " + std::to_string(vote_coords.rows()) + ")");
  ProposalSet out;
  out.source_indices = farthest_point_sample(vote_coords, count, 0);
  out.centers = Matrix(count, 3);
  for (std::size_t p = 0; p < count; ++p)
    for (std::size_t a = 0; a < 3; ++a) out.centers(p, a) = vote_coords(out.source_indices[p], a);
  out.scores.assign(count, 0.0);
  out.yaws.assign(count, 0.0);
  return out;
}

}  // namespace gltt
