// SPDX-License-Identifier: Apache-2.0

#include "sgkit/query_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace sgkit {

SelectionConfig SelectionConfig::with_defaults(int k, double gamma) {
  return {k, std::max(1, k / 2), gamma};
}

void SelectionConfig::validate(std::size_t num_tokens) const {
  if (l < 1 || l > k) {
    throw InvariantError("selection: need 1 <= L <= K, got L=" + std::to_string(l) +
                         " K=" + std::to_string(k));
  }
  if (static_cast<std::size_t>(k) > num_tokens) {
    throw InvariantError("selection: K=" + std::to_string(k) + " exceeds " +
                         std::to_string(num_tokens) + " visual tokens");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw InvariantError("selection: gamma must lie in [0,1]");
  }
}

std::vector<double> max_similarity(const EmbeddingMatrix& visual, const EmbeddingMatrix& tokens) {
  if (tokens.rows() == 0) throw DimensionError("max_similarity: no tokens");
  if (visual.rows() > 0 && visual.cols() != tokens.cols()) {
    throw DimensionError("max_similarity: visual dim " + std::to_string(visual.cols()) +
                         " vs token dim " + std::to_string(tokens.cols()));
  }
  std::vector<double> out(visual.rows());
  for (std::size_t i = 0; i < visual.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < tokens.rows(); ++j) best = std::max(best, dot(visual.row(i), tokens.row(j)));
    out[i] = best;
  }
  return out;
}

std::vector<double> relevance_scores(const EmbeddingMatrix& visual, const EmbeddingMatrix& objects,
                                     const EmbeddingMatrix& relations, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvariantError("relevance_scores: gamma outside [0,1]");
  const std::vector<double> obj = max_similarity(visual, objects);
  const std::vector<double> rel = max_similarity(visual, relations);
  std::vector<double> s(visual.rows());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = std::pow(std::max(obj[i], kRelevanceFloor), gamma) *
           std::pow(std::max(rel[i], kRelevanceFloor), 1.0 - gamma);
  }
  return s;
}

std::vector<int> top_k(const std::vector<double>& scores, int k) {
  if (k < 0 || static_cast<std::size_t>(k) > scores.size()) {
    throw InvariantError("top_k: K=" + std::to_string(k) + " with " +
                         std::to_string(scores.size()) + " scores");
  }
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

InteractionPromptSet decompose_triplets(const std::vector<TripletCandidate>& triplets) {
  InteractionPromptSet out;
  std::unordered_set<std::string> seen;
  auto add = [&](std::string s) {
    if (seen.insert(s).second) out.pairs.push_back(std::move(s));
  };
  for (const TripletCandidate& t : triplets) {
    add(t.subject + " " + t.relation);
    add(t.relation + " " + t.object);
  }
  return out;
}

SelectionResult interaction_select(const EmbeddingMatrix& visual,
                                   const EmbeddingMatrix& interaction_tokens,
                                   const EmbeddingMatrix& objects, const SelectionConfig& cfg) {
  cfg.validate(visual.rows());
  const std::vector<double> obj = max_similarity(visual, objects);

  SelectionResult r;
  std::vector<bool> taken(visual.rows(), false);
  if (interaction_tokens.rows() > 0) {
    const std::vector<double> inter = max_similarity(visual, interaction_tokens);
    r.interaction = top_k(inter, cfg.l);
    for (int i : r.interaction) {
      taken[i] = true;
      r.all.push_back(i);
      r.scores.push_back(inter[i]);
    }
  }

  const int remaining = cfg.k - static_cast<int>(r.interaction.size());
  std::vector<int> pool;
  for (std::size_t i = 0; i < visual.rows(); ++i)
    if (!taken[i]) pool.push_back(static_cast<int>(i));
  std::stable_sort(pool.begin(), pool.end(), [&](int a, int b) { return obj[a] > obj[b]; });
  for (int n = 0; n < remaining; ++n) {
    const int i = pool[static_cast<std::size_t>(n)];
    r.missing.push_back(i);
    r.all.push_back(i);
    r.scores.push_back(obj[i]);
  }
  return r;
}

}  // namespace sgkit
