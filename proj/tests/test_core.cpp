// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>

#include "sgkit/core.hpp"

namespace fs = std::filesystem;
using namespace sgkit;

namespace {

Vocabulary small_vocab() {
  return Vocabulary({"man", "surfboard", "horse", "bike"}, {"hold", "ride", "near"}, {0, 1}, {0});
}

json fixture_doc(json edges) {
  return {{"vocabulary",
           {{"objects", {"man", "surfboard", "horse"}},
            {"relations", {"hold"}},
            {"base_objects", {0, 1}},
            {"base_relations", {0}}}},
          {"graphs",
           {{{"nodes",
              {{{"box", {0.5, 0.5, 0.2, 0.2}}, {"class", 0}},
               {{"box", {0.4, 0.4, 0.2, 0.2}}, {"class", 1}},
               {{"box", {0.6, 0.6, 0.2, 0.2}}, {"class", 2}}}},
             {"edges", edges}}}}};
}

std::string error_of(const json& doc) {
  try {
    parse_fixture(doc);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

Fixture random_fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 0.9), s(0.01, 0.3);
  Fixture fx;
  fx.vocab = Vocabulary({"a", "b", "c", "d", "e"}, {"r0", "r1", "r2"}, {0, 2, 4}, {1});
  for (int g = 0; g < 4; ++g) {
    SceneGraph graph;
    const int n = 2 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) graph.nodes.push_back({{u(rng), u(rng), s(rng), s(rng)}, static_cast<int>(rng() % 5), u(rng)});
    for (int e = 0; e < 5; ++e) {
      const int a = static_cast<int>(rng() % n), b = (a + 1 + static_cast<int>(rng() % (n - 1))) % n;
      graph.edges.push_back({a, b, static_cast<int>(rng() % 3), u(rng)});
    }
    fx.graphs.push_back(graph);
  }
  Matrix m(3, 4);
  for (double& v : m.data()) v = u(rng) - 0.5;
  fx.embeddings["visual/0"] = m;
  return fx;
}

}  // namespace

TEST(BoundingBox, CornersAndArea) {
  const BoundingBox b{0.5, 0.4, 0.2, 0.4};
  const Corners c = b.corners();
  EXPECT_DOUBLE_EQ(c.x1, 0.4);
  EXPECT_DOUBLE_EQ(c.y2, 0.6);
  EXPECT_NEAR(b.area(), 0.08, 1e-15);
  EXPECT_TRUE(b.is_valid());
  EXPECT_FALSE((BoundingBox{0.5, 0.5, -0.1, 0.1}.is_valid()));
  EXPECT_FALSE((BoundingBox{0.5, 0.5, std::nan(""), 0.1}.is_valid()));
  EXPECT_THROW(validate_box({0.5, 0.5, -1.0, 0.1}, "b"), InvariantError);
}

TEST(Matrix, RowsRoundTripAndShapeErrors) {
  const Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m.to_rows(), (std::vector<std::vector<double>>{{1, 2, 3}, {4, 5, 6}}));
  EXPECT_THROW(Matrix::from_rows({{1, 2}, {3}}), DimensionError);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_DOUBLE_EQ(dot(m.row(0), m.row(1)), 32.0);
  EXPECT_DOUBLE_EQ(l2_norm(std::vector<double>{3, 4}), 5.0);
}

TEST(Vocabulary, BaseAndNovelSets) {
  const Vocabulary v = small_vocab();
  EXPECT_TRUE(v.is_base_object(0));
  EXPECT_FALSE(v.is_base_object(2));
  EXPECT_EQ(v.novel_objects(), (std::vector<int>{2, 3}));
  EXPECT_EQ(v.novel_relations(), (std::vector<int>{1, 2}));
  EXPECT_EQ(v.object_id("horse"), 2);
  EXPECT_EQ(v.relation_id("fly"), -1);
  EXPECT_THROW(v.is_base_object(9), InvariantError);
  EXPECT_THROW(Vocabulary({"a", "a"}, {"r"}, {}, {}), InvariantError);
  EXPECT_THROW(Vocabulary({"a"}, {"r"}, {3}, {}), InvariantError);
}

TEST(SceneGraph, RejectsSelfRelationsAndBadScores) {
  SceneGraph g;
  g.nodes = {{{0.5, 0.5, 0.1, 0.1}, 0, 1.0}, {{0.4, 0.4, 0.1, 0.1}, 1, 1.0}};
  g.edges = {{0, 0, 0, 1.0}};
  EXPECT_THROW(g.validate(), InvariantError);
  g.edges = {{0, 1, 0, 1.5}};
  EXPECT_THROW(g.validate(), InvariantError);
  g.edges = {{0, 1, 0, 0.5}};
  EXPECT_NO_THROW(g.validate());
  const Vocabulary v = small_vocab();
  g.edges = {{0, 1, 7, 0.5}};
  EXPECT_THROW(g.validate(&v), InvariantError);
}

TEST(Fixture, EmptyGraph) {
  json doc = fixture_doc(json::array());
  doc["graphs"] = {{{"nodes", json::array()}, {"edges", json::array()}}};
  const Fixture fx = parse_fixture(doc);
  ASSERT_EQ(fx.graphs.size(), 1u);
  EXPECT_TRUE(fx.graphs[0].nodes.empty());
  EXPECT_TRUE(fx.graphs[0].edges.empty());
}

TEST(Fixture, ErrorNamesOffendingField) {
  const std::string msg = error_of(fixture_doc({{{"sub", 7}, {"obj", 1}, {"rel", 0}}}));
  EXPECT_NE(msg.find("edges[0].subject"), std::string::npos) << msg;
  EXPECT_NE(error_of(fixture_doc({{{"sub", 0}, {"rel", 0}}})).find("graphs[0].edges[0]"), std::string::npos);
  json bad_box = fixture_doc(json::array());
  bad_box["graphs"][0]["nodes"][1]["box"] = {0.5, 0.5, -0.2, 0.2};
  EXPECT_NE(error_of(bad_box).find("nodes[1].box"), std::string::npos) << error_of(bad_box);
  EXPECT_THROW(load_fixture("/nonexistent/fixture.json"), Error);
}

TEST(Fixture, SaveLoadRoundTripIsExact) {
  const fs::path dir = fs::temp_directory_path() / "sgkit_core_roundtrip";
  fs::create_directories(dir);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Fixture fx = random_fixture(seed);
    const std::string path = (dir / "fx.json").string();
    save_fixture(fx, path);
    const Fixture back = load_fixture(path);
    EXPECT_EQ(back, fx);
    EXPECT_EQ(fixture_to_json(back).dump(), fixture_to_json(fx).dump());
    EXPECT_FALSE(fs::exists(path + ".tmp"));
  }
  fs::remove_all(dir);
}

TEST(Triplet, JsonRoundTripAndValidation) {
  const TripletCandidate t{"man", "hold", "surfboard", {0.5, 0.5, 0.2, 0.3}, {0.45, 0.6, 0.1, 0.3}, 0.8};
  EXPECT_EQ(triplet_from_json(triplet_to_json(t), "t"), t);
  TripletCandidate bad = t;
  bad.subject.clear();
  EXPECT_THROW(bad.validate(), InvariantError);
  bad = t;
  bad.confidence = 1.2;
  EXPECT_THROW(bad.validate(), InvariantError);
}

TEST(SplitReport, KnownCases) {
  const Vocabulary v = small_vocab();  // base objects {man, surfboard}, base relation {hold}
  EXPECT_EQ(split_tag(0, 1, 0, v), SplitTag::kBase);
  EXPECT_EQ(split_tag(0, 1, 1, v), SplitTag::kNovelRelation);
  EXPECT_EQ(split_tag(0, 2, 0, v), SplitTag::kNovelObject);
  EXPECT_EQ(split_tag(3, 1, 2, v), SplitTag::kNovelBoth);
}

TEST(SplitReport, MatchesSetMembershipOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int no = 2 + static_cast<int>(rng() % 8), nr = 1 + static_cast<int>(rng() % 6);
    std::vector<std::string> objs, rels;
    std::vector<int> bo, br;
    std::set<int> base_o, base_r;
    for (int i = 0; i < no; ++i) {
      objs.push_back("o" + std::to_string(i));
      if (rng() % 2) {
        bo.push_back(i);
        base_o.insert(i);
      }
    }
    for (int i = 0; i < nr; ++i) {
      rels.push_back("r" + std::to_string(i));
      if (rng() % 2) {
        br.push_back(i);
        base_r.insert(i);
      }
    }
    const Vocabulary v(objs, rels, bo, br);
    SceneGraph g;
    for (int i = 0; i < 6; ++i) g.nodes.push_back({{0.5, 0.5, 0.1, 0.1}, static_cast<int>(rng() % no), 1.0});
    for (int e = 0; e < 10; ++e) {
      const int a = static_cast<int>(rng() % 6);
      g.edges.push_back({a, (a + 1) % 6, static_cast<int>(rng() % nr), 1.0});
    }
    const std::vector<SplitTag> tags = split_report(g, v);
    ASSERT_EQ(tags.size(), g.edges.size());
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      const bool obj_novel = !base_o.count(g.nodes[static_cast<std::size_t>(g.edges[e].sub)].cls) ||
                             !base_o.count(g.nodes[static_cast<std::size_t>(g.edges[e].obj)].cls);
      const bool rel_novel = !base_r.count(g.edges[e].rel);
      const SplitTag want = obj_novel && rel_novel ? SplitTag::kNovelBoth
                            : obj_novel            ? SplitTag::kNovelObject
                            : rel_novel            ? SplitTag::kNovelRelation
                                                   : SplitTag::kBase;
      EXPECT_EQ(tags[e], want);
    }
  }
}

TEST(Files, AtomicWriteReplacesContents) {
  const fs::path p = fs::temp_directory_path() / "sgkit_atomic.txt";
  write_file_atomic(p.string(), "first");
  write_file_atomic(p.string(), "second");
  EXPECT_EQ(read_text_file(p.string()), "second");
  fs::remove(p);
}
