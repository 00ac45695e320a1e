// SPDX-License-Identifier: Apache-2.0
//
// Synthetic scenarios with planted ground truth. Everything is a pure
// function of the ScenarioSpec, seed included.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sgkit/core.hpp"
#include "sgkit/target_gen.hpp"

namespace sgkit {

struct ScenarioSpec {
  std::uint64_t seed = 7;
  int n_images = 10;
  int n_object_classes = 12;
  int n_relation_classes = 10;
  int triplets_per_image = 6;
  /// Extra nodes per image that reuse an interacting node's class but carry
  /// no relation.
  int distractors_per_image = 2;
  double novel_object_fraction = 0.3;
  double novel_relation_fraction = 0.3;
  /// Length of the canned "pattern" prediction list per image.
  int predictions_per_image = 120;
  std::vector<int> ks = {20, 50, 100};
  /// Visual tokens per image and embedding width for the query-selection
  /// inputs stored under embeddings "visual/<image>".
  int tokens_per_image = 24;
  int embed_dim = 32;

  void validate() const;
  static ScenarioSpec from_json(const json& j);
  json to_json() const;
};

struct ImageManifest {
  std::string image_id;
  std::vector<TripletCandidate> planted;
  /// Pattern predictor, by K.
  std::map<int, std::size_t> expected_hits;
  std::map<std::string, std::map<int, std::size_t>> expected_hits_by_split;
  std::map<std::string, std::map<int, std::size_t>> expected_hits_by_relation;
  /// GT edges per split tag (base, novel-object, novel-relation, novel-both).
  std::map<std::string, std::size_t> split_counts;
};

struct Manifest {
  std::vector<int> ks;
  std::size_t novel_object_classes = 0;
  std::size_t novel_relation_classes = 0;
  std::vector<ImageManifest> images;

  json to_json() const;
};

struct Scenario {
  Fixture ground_truth;
  /// Exact copy of the ground truth with unit scores.
  Fixture perfect_predictions;
  /// Correct triplets at planted ranks, mislabeled ones, omissions and
  /// filler, so that hits at each K are known in advance.
  Fixture pattern_predictions;
  Manifest manifest;
};

Scenario generate_scenario(const ScenarioSpec& spec);

/// Scripted grounding scenes. Each planted interacting subject has a
/// same-class distractor that overlaps the object as strongly as the real
/// subject does, far distractors, and a low-confidence spurious box under
/// the interaction phrase.
std::vector<ScriptedScene> generate_scripted_scenes(std::uint64_t seed, int n_scenes,
                                                    int far_distractors = 2);

}  // namespace sgkit
