// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>
#include <stdexcept>

#include "sgkit/fixtures.hpp"
#include "sgkit/geometry.hpp"
#include "sgkit/target_gen.hpp"

using namespace sgkit;

namespace {

const TableCounterActions& table() { return TableCounterActions::builtin(); }

class ThrowingGrounder : public Grounder {
 public:
  GroundingResult ground(const std::string&) const override { throw std::runtime_error("backend down"); }
};

}  // namespace

TEST(ParseCaption, Examples) {
  EXPECT_EQ(parse_caption("man hold surfboard"), (std::vector<CaptionTriplet>{{"man", "hold", "surfboard"}}));
  EXPECT_TRUE(parse_caption("").empty());
  EXPECT_EQ(parse_caption("people ride bike near bikes on boat"),
            (std::vector<CaptionTriplet>{{"people", "ride", "bike"}, {"bikes", "on", "boat"}}));
  EXPECT_EQ(parse_caption("surfboard held by man"), (std::vector<CaptionTriplet>{{"surfboard", "held by", "man"}}));
  EXPECT_EQ(parse_caption("A man is riding the horse."), (std::vector<CaptionTriplet>{{"man", "riding", "horse"}}));
  EXPECT_EQ(parse_caption("the woman sitting on a bench and a dog near the tree"),
            (std::vector<CaptionTriplet>{{"woman", "sitting on", "bench"}, {"dog", "near", "tree"}}));
  EXPECT_TRUE(parse_caption("a sunny day").empty());
}

TEST(CounterAction, TableAndFallback) {
  EXPECT_EQ(counter_action("hold", table()), "held by");
  EXPECT_EQ(counter_action("on", table()), "beneath");
  EXPECT_EQ(counter_action("riding", table()), "ridden by");
  EXPECT_EQ(counter_action("near", table()), "near");
  EXPECT_EQ(counter_action("juggle", table()), "juggle by");
  const TableCounterActions custom = TableCounterActions::parse("# comment\nkick\tkicked by\n\n");
  EXPECT_EQ(custom.lookup("kick"), "kicked by");
  EXPECT_EQ(custom.lookup("hold"), std::nullopt);
  EXPECT_THROW(TableCounterActions::parse("kick kicked by\n"), SchemaError);
}

TEST(BuildPrompts, ForwardAndReverse) {
  const BidirectionalPrompt p = build_prompts({"man", "hold", "surfboard"}, table());
  EXPECT_EQ(p.forward, "man hold surfboard");
  EXPECT_EQ(p.reverse, "surfboard held by man");
  const BidirectionalPrompt sym = build_prompts({"dog", "near", "tree"}, table());
  EXPECT_EQ(sym.reverse, "tree near dog");
  const std::vector<std::string> nouns = {"man", "horse", "kite", "bench"}, preds = {"ride", "on", "wearing", "with"};
  for (const auto& s : nouns)
    for (const auto& pr : preds)
      for (const auto& o : nouns) {
        const BidirectionalPrompt q = build_prompts({s, pr, o}, table());
        EXPECT_EQ(q.forward, s + " " + pr + " " + o);
        EXPECT_EQ(q.reverse, o + " " + counter_action(pr, table()) + " " + s);
      }
  EXPECT_THROW(build_prompts({"", "hold", "x"}, table()), InvariantError);
}

TEST(Ground, ScriptedScenes) {
  ScriptedScene scene;
  scene.scene_id = "s";
  const ScoredBox interacting{{0.3, 0.5, 0.2, 0.4}, 0.9};
  scene.phrases["man hold surfboard"] = {interacting};
  scene.phrases["man"] = {interacting, {{0.7, 0.5, 0.2, 0.4}, 0.8}, {{0.9, 0.1, 0.1, 0.2}, 0.7}};
  const ScriptedGrounder g(scene);
  const GroundingResult r = ground("man hold surfboard", g);
  ASSERT_EQ(r.boxes.size(), 1u);
  EXPECT_EQ(r.boxes[0], interacting);
  EXPECT_TRUE(ground("woman hold kite", g).boxes.empty());
  EXPECT_EQ(ground("man", g).boxes.size(), 3u);
  try {
    ground("man hold surfboard", ThrowingGrounder());
    FAIL() << "expected GroundingError";
  } catch (const GroundingError& e) {
    EXPECT_NE(std::string(e.what()).find("man hold surfboard"), std::string::npos);
  }
}

TEST(Combine, ThresholdsAndExhaustivePairs) {
  const CaptionTriplet t{"man", "hold", "surfboard"};
  const GroundingResult far_s{"", {{{0.2, 0.2, 0.1, 0.1}, 1.0}}}, far_o{"", {{{0.8, 0.8, 0.1, 0.1}, 1.0}}};
  EXPECT_TRUE(combine(far_s, far_o, t, {0.1, 0.0}).empty());
  const GroundingResult near_o{"", {{{0.21, 0.2, 0.1, 0.1}, 0.5}}};
  const auto one = combine(far_s, near_o, t, {0.5, 0.0});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_DOUBLE_EQ(one[0].confidence, 0.5);

  // 3 subject boxes x 2 object boxes on a grid.
  GroundingResult subj{"", {}}, obj{"", {}};
  for (int i = 0; i < 3; ++i) subj.boxes.push_back({{0.3 + 0.05 * i, 0.5, 0.2, 0.2}, 0.9 - 0.1 * i});
  for (int j = 0; j < 2; ++j) obj.boxes.push_back({{0.35 + 0.1 * j, 0.5, 0.2, 0.2}, 0.8});
  for (double thr : {0.2, 0.4, 0.6, 0.8}) {
    std::set<std::pair<int, int>> want;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j)
        if (iou(subj.boxes[i].box, obj.boxes[j].box) >= thr) want.insert({i, j});
    const auto got = combine(subj, obj, t, {thr, 0.0});
    std::set<std::pair<int, int>> have;
    for (const TripletCandidate& c : got)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j)
          if (c.subject_box == subj.boxes[i].box && c.object_box == obj.boxes[j].box) have.insert({i, j});
    EXPECT_EQ(have, want) << "threshold " << thr;
    EXPECT_EQ(got.size(), want.size());
  }
  // Low-confidence boxes are dropped.
  EXPECT_TRUE(combine(subj, obj, t, {0.0, 0.95}).empty());
}

TEST(GenerateTargets, DistractorSceneRecoversOnlyInteractingPair) {
  const std::vector<ScriptedScene> scenes = generate_scripted_scenes(3, 5);
  for (const ScriptedScene& s : scenes) {
    const ScriptedGrounder g(s);
    const auto gen = generate_targets(s.caption, g, table(), TargetGenConfig{});
    const PlantedScore score = score_against_planted(gen, s.planted);
    EXPECT_EQ(score.precision, 1.0) << s.caption;
    EXPECT_EQ(score.recall, 1.0) << s.caption;
    const auto base = generate_targets(s.caption, g, table(), TargetGenConfig{}, GenerationMode::kCategoryOnly);
    const PlantedScore b = score_against_planted(base, s.planted);
    EXPECT_LT(*b.precision, 1.0);
  }
  const ScriptedScene& s = scenes[0];
  EXPECT_TRUE(generate_targets("", ScriptedGrounder(s), table(), TargetGenConfig{}).empty());
}

TEST(ScriptedScene, JsonRoundTrip) {
  for (const ScriptedScene& s : generate_scripted_scenes(11, 3)) {
    const ScriptedScene back = parse_scene(scene_to_json(s));
    EXPECT_EQ(back.scene_id, s.scene_id);
    EXPECT_EQ(back.caption, s.caption);
    EXPECT_EQ(back.phrases, s.phrases);
    EXPECT_EQ(back.planted, s.planted);
  }
  EXPECT_THROW(parse_scene(json{{"phrases", json::object()}}), SchemaError);
}

TEST(PlantedScore, EmptyCases) {
  const PlantedScore s = score_against_planted({}, {});
  EXPECT_EQ(s.predicted, 0u);
  EXPECT_FALSE(s.precision.has_value());
  EXPECT_FALSE(s.recall.has_value());
}
