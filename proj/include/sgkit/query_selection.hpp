// SPDX-License-Identifier: Apache-2.0
//
// Interaction-guided query selection. Step I ranks visual tokens by a
// geometric blend of their best object and best relation similarity and
// keeps the top K. Step II re-selects with interaction prompts built from
// the triplets predicted after the first pass: the L tokens most similar to
// any interaction token, topped up with the K - L best remaining tokens by
// object relevance.

#pragma once

#include <string>
#include <vector>

#include "sgkit/core.hpp"

namespace sgkit {

/// Lower bound applied to similarities before they are raised to a power.
inline constexpr double kRelevanceFloor = 1e-6;

struct SelectionConfig {
  int k = 0;
  int l = 0;
  double gamma = 0.5;

  /// l = max(1, k / 2).
  static SelectionConfig with_defaults(int k, double gamma = 0.5);

  /// Throws InvariantError unless 1 <= l <= k <= num_tokens and gamma in [0,1].
  void validate(std::size_t num_tokens) const;
};

struct SelectionResult {
  std::vector<int> interaction;  // I_L^in, by descending interaction score
  std::vector<int> missing;      // I_{K-L}^o, by descending object score
  std::vector<int> all;          // interaction followed by missing
  std::vector<double> scores;    // score that selected each entry of `all`
};

struct InteractionPromptSet {
  std::vector<std::string> pairs;
};

/// s_i = max(v_i T_o^T)^gamma * max(v_i T_r^T)^(1 - gamma), both maxima
/// clamped below at kRelevanceFloor.
std::vector<double> relevance_scores(const EmbeddingMatrix& visual, const EmbeddingMatrix& objects,
                                     const EmbeddingMatrix& relations, double gamma);

/// max_j v_i . t_j for every visual row. `tokens` must be non-empty.
std::vector<double> max_similarity(const EmbeddingMatrix& visual, const EmbeddingMatrix& tokens);

/// Indices of the k largest scores, descending; ties go to the lower index.
std::vector<int> top_k(const std::vector<double>& scores, int k);

/// Each <s, p, o> contributes "s p" and "p o"; first occurrence wins.
InteractionPromptSet decompose_triplets(const std::vector<TripletCandidate>& triplets);

/// Second-pass selection. An empty `interaction_tokens` falls back to the
/// top K by object relevance (all of them reported as `missing`).
SelectionResult interaction_select(const EmbeddingMatrix& visual,
                                   const EmbeddingMatrix& interaction_tokens,
                                   const EmbeddingMatrix& objects, const SelectionConfig& cfg);

}  // namespace sgkit
