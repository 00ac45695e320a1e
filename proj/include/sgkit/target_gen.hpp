// SPDX-License-Identifier: Apache-2.0
//
// Interaction-aware pseudo-label generation from captions:
//
//   caption --parse--> <s, p, o> --prompts--> "s p o" / "o ca(p) s"
//           --ground--> subject boxes / object boxes
//           --combine (IoU gate)--> TripletCandidates
//
// The counter-action source and the grounder are interfaces; the bundled
// implementations are a lookup table and a scripted-scene grounder.

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sgkit/core.hpp"

namespace sgkit {

struct CaptionTriplet {
  std::string subject;
  std::string predicate;
  std::string object;
  friend bool operator==(const CaptionTriplet&, const CaptionTriplet&) = default;
};

/// Word lists for the controlled caption grammar
///   NP PRED NP,  NP   := [DET] NOUN,  PRED := [AUX] (VERB [PREP] | PREP)
struct Lexicon {
  std::set<std::string> nouns;
  std::set<std::string> verbs;
  std::set<std::string> prepositions;
  std::set<std::string> determiners;
  std::set<std::string> auxiliaries;

  static const Lexicon& builtin();
};

/// Left-to-right, non-overlapping matches of the grammar. Words outside a
/// match are skipped; nothing here throws.
std::vector<CaptionTriplet> parse_caption(const std::string& caption,
                                          const Lexicon& lexicon = Lexicon::builtin());

/// Source of passive/inverse phrasings ("hold" -> "held by").
class CounterActionProvider {
 public:
  virtual ~CounterActionProvider() = default;
  virtual std::optional<std::string> lookup(const std::string& predicate) const = 0;
};

class TableCounterActions : public CounterActionProvider {
 public:
  explicit TableCounterActions(std::map<std::string, std::string> table)
      : table_(std::move(table)) {}

  /// Lines of "predicate<TAB>counter phrase"; blank lines and lines starting
  /// with '#' are ignored.
  static TableCounterActions parse(const std::string& text);
  static TableCounterActions load(const std::string& path);
  /// The table shipped in data/counter_actions.tsv.
  static const TableCounterActions& builtin();

  std::optional<std::string> lookup(const std::string& predicate) const override;
  const std::map<std::string, std::string>& table() const { return table_; }

 private:
  std::map<std::string, std::string> table_;
};

/// Provider answer, or "<predicate> by" when the provider has none.
std::string counter_action(const std::string& predicate, const CounterActionProvider& provider);

struct BidirectionalPrompt {
  std::string forward;  // "s p o"
  std::string reverse;  // "o ca(p) s"
};

BidirectionalPrompt build_prompts(const CaptionTriplet& triplet,
                                  const CounterActionProvider& provider);

struct ScoredBox {
  BoundingBox box;
  double confidence = 1.0;
  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

struct GroundingResult {
  std::string phrase;
  std::vector<ScoredBox> boxes;
};

/// Phrase grounding. Implementations must be deterministic per phrase and
/// safe to call concurrently.
class Grounder {
 public:
  virtual ~Grounder() = default;
  virtual GroundingResult ground(const std::string& phrase) const = 0;
};

class GroundingError : public Error {
 public:
  using Error::Error;
};

/// Calls the grounder; any failure is rethrown as GroundingError carrying
/// the prompt.
GroundingResult ground(const std::string& prompt, const Grounder& grounder);

/// A synthetic scene: the boxes a detector "finds" for each phrase, plus an
/// optional caption and the supervision planted in it.
struct ScriptedScene {
  std::string scene_id;
  std::string caption;
  std::map<std::string, std::vector<ScoredBox>> phrases;
  std::vector<TripletCandidate> planted;
};

ScriptedScene parse_scene(const json& j, const std::string& where = "scene");
json scene_to_json(const ScriptedScene& scene);
/// Accepts a single scene object or an array of them.
std::vector<ScriptedScene> load_scenes(const std::string& path);

class ScriptedGrounder : public Grounder {
 public:
  explicit ScriptedGrounder(const ScriptedScene& scene) : scene_(&scene) {}
  GroundingResult ground(const std::string& phrase) const override;

 private:
  const ScriptedScene* scene_;
};

struct TargetGenConfig {
  double iou_threshold = 0.5;
  double min_confidence = 0.3;

  void validate() const;
};

/// One candidate per (subject box, object box) with IoU >= threshold and
/// both confidences >= min_confidence; confidence is their product.
std::vector<TripletCandidate> combine(const GroundingResult& subject,
                                      const GroundingResult& object,
                                      const CaptionTriplet& triplet, const TargetGenConfig& cfg);

enum class GenerationMode {
  kInteraction,   // bidirectional interaction prompts
  kCategoryOnly,  // bare class names, the redundancy-prone baseline
};

std::vector<TripletCandidate> generate_targets(const std::string& caption, const Grounder& grounder,
                                               const CounterActionProvider& provider,
                                               const TargetGenConfig& cfg,
                                               GenerationMode mode = GenerationMode::kInteraction,
                                               const Lexicon& lexicon = Lexicon::builtin());

struct PlantedScore {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t planted = 0;
  std::optional<double> precision;  // empty when nothing was predicted
  std::optional<double> recall;     // empty when nothing was planted
};

/// Label-and-box equality against the planted set; every planted triplet
/// is consumed at most once.
PlantedScore score_against_planted(const std::vector<TripletCandidate>& generated,
                                   const std::vector<TripletCandidate>& planted);

}  // namespace sgkit
