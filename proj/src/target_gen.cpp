// SPDX-License-Identifier: Apache-2.0

#include "sgkit/target_gen.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "sgkit/geometry.hpp"

namespace sgkit {

// ---------------------------------------------------------------------------
// Caption parsing

const Lexicon& Lexicon::builtin() {
  static const Lexicon lex = [] {
    Lexicon l;
    l.nouns = {"man",      "men",       "woman",   "women",   "person",  "people",  "boy",
               "girl",     "child",     "kid",     "player",  "horse",   "dog",     "cat",
               "elephant", "giraffe",   "zebra",   "cow",     "sheep",   "bird",    "surfboard",
               "skateboard", "snowboard", "board", "bike",    "bikes",   "bicycle", "motorcycle",
               "car",      "bus",       "truck",   "train",   "boat",    "plane",   "kite",
               "frisbee",  "ball",      "racket",  "bat",     "umbrella", "hat",    "helmet",
               "shirt",    "jacket",    "glasses", "bag",     "phone",   "cup",     "plate",
               "pizza",    "sandwich",  "table",   "chair",   "bench",   "bed",     "couch",
               "wave",     "water",     "beach",   "street",  "road",    "sidewalk", "grass",
               "field",    "snow",      "tree",    "building", "window", "fence",   "sign",
               "pole",     "hand",      "head"};
    l.verbs = {"hold",    "holds",    "holding", "held",    "ride",     "rides",    "riding",
               "wear",    "wears",    "wearing", "carry",   "carries",  "carrying", "eat",
               "eats",    "eating",   "walk",    "walks",   "walking",  "sit",      "sits",
               "sitting", "stand",    "stands",  "standing", "watch",   "watching", "look",
               "looking", "throw",    "throwing", "catch",  "catching", "fly",      "flying",
               "play",    "playing",  "use",     "using",   "push",     "pull",     "pulling",
               "lay",     "laying",   "lying",   "hit",     "hitting",  "parked",   "covered",
               "has",     "have",     "ridden",  "worn",    "carried",  "eaten",    "watched",
               "thrown",  "caught",   "flown",   "played",  "used",     "pushed",   "pulled"};
    l.prepositions = {"on",     "in",   "near", "under",  "behind", "above", "below", "at",
                      "with",   "of",   "beside", "over", "along",  "across", "into", "inside",
                      "by"};
    l.determiners = {"a", "an", "the", "some", "two", "three", "his", "her", "their", "its"};
    l.auxiliaries = {"is", "are"};
    return l;
  }();
  return lex;
}

namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct Span {
  std::string text;
  std::size_t next;
};

std::optional<Span> match_np(const std::vector<std::string>& t, std::size_t i, const Lexicon& lex) {
  if (i < t.size() && lex.determiners.count(t[i])) ++i;
  if (i < t.size() && lex.nouns.count(t[i])) return Span{t[i], i + 1};
  return std::nullopt;
}

// Predicate candidates at i, longest first.
std::vector<Span> match_predicates(const std::vector<std::string>& t, std::size_t i,
                                   const Lexicon& lex) {
  std::vector<Span> out;
  if (i < t.size() && lex.auxiliaries.count(t[i])) ++i;
  if (i >= t.size()) return out;
  if (lex.verbs.count(t[i])) {
    if (i + 1 < t.size() && lex.prepositions.count(t[i + 1])) {
      out.push_back({t[i] + " " + t[i + 1], i + 2});
    }
    out.push_back({t[i], i + 1});
  } else if (lex.prepositions.count(t[i])) {
    out.push_back({t[i], i + 1});
  }
  return out;
}

}  // namespace

std::vector<CaptionTriplet> parse_caption(const std::string& caption, const Lexicon& lexicon) {
  const std::vector<std::string> tokens = tokenize(caption);
  std::vector<CaptionTriplet> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    if (auto subj = match_np(tokens, i, lexicon)) {
      for (const Span& pred : match_predicates(tokens, subj->next, lexicon)) {
        if (auto obj = match_np(tokens, pred.next, lexicon)) {
          out.push_back({subj->text, pred.text, obj->text});
          i = obj->next;
          matched = true;
          break;
        }
      }
    }
    if (!matched) ++i;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Counter-actions and prompts

TableCounterActions TableCounterActions::parse(const std::string& text) {
  std::map<std::string, std::string> table;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw SchemaError("counter-action table line " + std::to_string(lineno) +
                        ": expected 'predicate<TAB>counter phrase'");
    }
    table[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return TableCounterActions(std::move(table));
}

TableCounterActions TableCounterActions::load(const std::string& path) {
  return parse(read_text_file(path));
}

const TableCounterActions& TableCounterActions::builtin() {
  static const TableCounterActions t = load(std::string(SGKIT_DATA_DIR) + "/counter_actions.tsv");
  return t;
}

std::optional<std::string> TableCounterActions::lookup(const std::string& predicate) const {
  auto it = table_.find(predicate);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::string counter_action(const std::string& predicate, const CounterActionProvider& provider) {
  if (predicate.empty()) throw InvariantError("counter_action: empty predicate");
  if (auto hit = provider.lookup(predicate)) return *hit;
  return predicate + " by";
}

BidirectionalPrompt build_prompts(const CaptionTriplet& t, const CounterActionProvider& provider) {
  if (t.subject.empty() || t.predicate.empty() || t.object.empty()) {
    throw InvariantError("build_prompts: triplet has an empty component");
  }
  return {t.subject + " " + t.predicate + " " + t.object,
          t.object + " " + counter_action(t.predicate, provider) + " " + t.subject};
}

// ---------------------------------------------------------------------------
// Grounding

GroundingResult ground(const std::string& prompt, const Grounder& grounder) {
  try {
    GroundingResult r = grounder.ground(prompt);
    r.phrase = prompt;
    return r;
  } catch (const std::exception& e) {
    throw GroundingError("grounding '" + prompt + "' failed: " + e.what());
  }
}

GroundingResult ScriptedGrounder::ground(const std::string& phrase) const {
  GroundingResult r{phrase, {}};
  auto it = scene_->phrases.find(phrase);
  if (it != scene_->phrases.end()) r.boxes = it->second;
  return r;
}

ScriptedScene parse_scene(const json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  ScriptedScene s;
  if (!j.contains("scene_id") || !j["scene_id"].is_string()) {
    throw SchemaError(where + ".scene_id: expected a string");
  }
  s.scene_id = j["scene_id"].get<std::string>();
  if (j.contains("caption")) {
    if (!j["caption"].is_string()) throw SchemaError(where + ".caption: expected a string");
    s.caption = j["caption"].get<std::string>();
  }
  if (!j.contains("phrases") || !j["phrases"].is_object()) {
    throw SchemaError(where + ".phrases: expected an object");
  }
  for (auto it = j["phrases"].begin(); it != j["phrases"].end(); ++it) {
    const std::string pw = where + ".phrases['" + it.key() + "']";
    if (!it.value().is_array()) throw SchemaError(pw + ": expected an array");
    std::vector<ScoredBox> boxes;
    for (std::size_t b = 0; b < it.value().size(); ++b) {
      const json& entry = it.value()[b];
      const std::string bw = pw + "[" + std::to_string(b) + "]";
      if (!entry.is_object() || !entry.contains("box")) throw SchemaError(bw + ".box: missing");
      ScoredBox sb;
      sb.box = box_from_json(entry["box"], bw + ".box");
      if (entry.contains("conf")) {
        if (!entry["conf"].is_number()) throw SchemaError(bw + ".conf: expected a number");
        sb.confidence = entry["conf"].get<double>();
      }
      if (!(sb.confidence >= 0.0 && sb.confidence <= 1.0)) {
        throw InvariantError(bw + ".conf: outside [0,1]");
      }
      boxes.push_back(sb);
    }
    s.phrases.emplace(it.key(), std::move(boxes));
  }
  if (j.contains("planted")) {
    if (!j["planted"].is_array()) throw SchemaError(where + ".planted: expected an array");
    for (std::size_t p = 0; p < j["planted"].size(); ++p) {
      s.planted.push_back(
          triplet_from_json(j["planted"][p], where + ".planted[" + std::to_string(p) + "]"));
    }
  }
  return s;
}

json scene_to_json(const ScriptedScene& scene) {
  json phrases = json::object();
  for (const auto& [phrase, boxes] : scene.phrases) {
    json arr = json::array();
    for (const ScoredBox& b : boxes) arr.push_back({{"box", box_to_json(b.box)}, {"conf", b.confidence}});
    phrases[phrase] = std::move(arr);
  }
  json j = {{"scene_id", scene.scene_id}, {"phrases", std::move(phrases)}};
  if (!scene.caption.empty()) j["caption"] = scene.caption;
  if (!scene.planted.empty()) {
    json planted = json::array();
    for (const TripletCandidate& t : scene.planted) planted.push_back(triplet_to_json(t));
    j["planted"] = std::move(planted);
  }
  return j;
}

std::vector<ScriptedScene> load_scenes(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
  std::vector<ScriptedScene> scenes;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      scenes.push_back(parse_scene(doc[i], "scenes[" + std::to_string(i) + "]"));
    }
  } else {
    scenes.push_back(parse_scene(doc));
  }
  return scenes;
}

// ---------------------------------------------------------------------------
// Combination

void TargetGenConfig::validate() const {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) throw InvariantError("iou_threshold outside [0,1]");
  if (!(min_confidence >= 0.0 && min_confidence <= 1.0)) {
    throw InvariantError("min_confidence outside [0,1]");
  }
}

std::vector<TripletCandidate> combine(const GroundingResult& subject, const GroundingResult& object,
                                      const CaptionTriplet& triplet, const TargetGenConfig& cfg) {
  cfg.validate();
  std::vector<TripletCandidate> out;
  for (const ScoredBox& s : subject.boxes) {
    if (s.confidence < cfg.min_confidence) continue;
    for (const ScoredBox& o : object.boxes) {
      if (o.confidence < cfg.min_confidence) continue;
      if (iou(s.box, o.box) < cfg.iou_threshold) continue;
      out.push_back({triplet.subject, triplet.predicate, triplet.object, s.box, o.box,
                     s.confidence * o.confidence});
    }
  }
  return out;
}

std::vector<TripletCandidate> generate_targets(const std::string& caption, const Grounder& grounder,
                                               const CounterActionProvider& provider,
                                               const TargetGenConfig& cfg, GenerationMode mode,
                                               const Lexicon& lexicon) {
  std::vector<TripletCandidate> out;
  for (const CaptionTriplet& t : parse_caption(caption, lexicon)) {
    GroundingResult subj, obj;
    if (mode == GenerationMode::kInteraction) {
      const BidirectionalPrompt p = build_prompts(t, provider);
      // The forward sentence's syntactic subject is the triplet subject; the
      // reverse sentence's is the triplet object.
      subj = ground(p.forward, grounder);
      obj = ground(p.reverse, grounder);
    } else {
      subj = ground(t.subject, grounder);
      obj = ground(t.object, grounder);
    }
    auto cands = combine(subj, obj, t, cfg);
    out.insert(out.end(), cands.begin(), cands.end());
  }
  return out;
}

PlantedScore score_against_planted(const std::vector<TripletCandidate>& generated,
                                   const std::vector<TripletCandidate>& planted) {
  PlantedScore s;
  s.predicted = generated.size();
  s.planted = planted.size();
  std::vector<bool> used(planted.size(), false);
  for (const TripletCandidate& g : generated) {
    for (std::size_t p = 0; p < planted.size(); ++p) {
      const TripletCandidate& t = planted[p];
      if (!used[p] && g.subject == t.subject && g.relation == t.relation && g.object == t.object &&
          g.subject_box == t.subject_box && g.object_box == t.object_box) {
        used[p] = true;
        ++s.true_positives;
        break;
      }
    }
  }
  if (s.predicted > 0) s.precision = static_cast<double>(s.true_positives) / static_cast<double>(s.predicted);
  if (s.planted > 0) s.recall = static_cast<double>(s.true_positives) / static_cast<double>(s.planted);
  return s;
}

}  // namespace sgkit
