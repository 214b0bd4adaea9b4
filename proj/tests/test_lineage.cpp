#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "celltrack/lineage.hpp"
#include "celltrack/synth.hpp"
#include "test_util.hpp"

using namespace celltrack;

namespace {

std::map<std::string, double> attrs(double length) {
  return {{"area", 2.0 * length}, {"length", length},        {"width", 2.0},
          {"row", 0.0},           {"col", 0.0},              {"dist_centroid", 1.5}};
}

LineageNode make_node(int frame, int label, double length, double score = 0.0) {
  LineageNode n;
  n.frame = frame;
  n.label = label;
  n.match_score = score;
  n.attributes = attrs(length);
  return n;
}

/// Root chain of three frames ending in a division into two leaves.
LineageForest chain_with_division() {
  LineageForest f;
  f.nodes.push_back(make_node(0, 1, 10.0));
  f.nodes.push_back(make_node(1, 1, 12.0));
  f.nodes.push_back(make_node(2, 1, 14.0));
  f.nodes.push_back(make_node(3, 2, 8.0, 0.5));
  f.nodes.push_back(make_node(3, 3, 9.0, 0.45));
  f.nodes[0].children = {1};
  f.nodes[1].children = {2};
  f.nodes[2].children = {3, 4};
  f.roots = {0};
  f.frame_count = 4;
  f.frontier = {{2, 3}, {3, 4}};
  return f;
}

SynthMovie tiny_movie() {
  SynthConfig cfg;
  cfg.seed = 6;
  cfg.frames = 9;
  cfg.growth_rate = 1.6;
  cfg.division_length = 16.0;
  cfg.cell_width = 6.0;
  cfg.grid_width = 96;
  cfg.grid_height = 96;
  cfg.crowding_onset = 0;
  return generate_movie(cfg);
}

}  // namespace

TEST_CASE("cell attributes capture size, position, and distance from the colony") {
  const Frame frame = testutil::frame_of({
      ".....",
      ".111.",
      ".....",
  });
  const CellRecord& cell = frame.cells.at(0);
  const auto a = cell_attributes(cell, 4.0, 6.0);
  CHECK(a.at("area") == 3.0);
  CHECK(a.at("length") == doctest::Approx(cell.length));
  CHECK(a.at("width") == doctest::Approx(cell.width));
  CHECK(a.at("row") == doctest::Approx(1.0));
  CHECK(a.at("col") == doctest::Approx(2.0));
  CHECK(a.at("dist_centroid") == doctest::Approx(5.0));  // 3-4-5 triangle
}

TEST_CASE("a fresh forest has one single-node tree per initial cell") {
  const Frame frame = testutil::frame_of({"11.22"});
  const LineageForest forest = init_forest(frame.cells);

  CHECK(forest.frame_count == 1);
  REQUIRE(forest.roots.size() == 2);
  REQUIRE(forest.nodes.size() == 2);
  CHECK(forest.frontier.at(1) == 0);
  CHECK(forest.frontier.at(2) == 1);
  for (int root : forest.roots) {
    const LineageNode& n = forest.node(root);
    CHECK(n.frame == 0);
    CHECK_FALSE(n.orphan);
    CHECK(n.children.empty());
    CHECK(n.attributes.count("dist_centroid") == 1);
  }

  const std::vector<CellRecord> none;
  CHECK_THROWS_AS(init_forest(none), std::runtime_error);
}

TEST_CASE("appending a correspondence grows chains, splits, and orphan roots") {
  const Frame f0 = testutil::frame_of({"11.22"}, 0);
  const Frame f1 = testutil::frame_of({
      "11.33",
      "...44",
      "5....",
  }, 1);
  LineageForest forest = init_forest(f0.cells);

  Correspondence corr;
  corr.frame_t = 0;
  corr.pairs = {
      {1, 1, 0.9, MatchKind::proliferation},
      {3, 2, 0.5, MatchKind::division},
      {4, 2, 0.45, MatchKind::division},
  };
  corr.unmatched_daughters = {5};
  append_correspondence(forest, corr, f1.cells);

  CHECK(forest.frame_count == 2);
  REQUIRE(forest.nodes.size() == 6);
  REQUIRE(forest.roots.size() == 3);  // the orphan became a root

  // Frontier now maps exactly the new frame's labels.
  REQUIRE(forest.frontier.size() == 4);
  for (int label : {1, 3, 4, 5}) {
    REQUIRE(forest.frontier.count(label) == 1);
    CHECK(forest.node(forest.frontier.at(label)).frame == 1);
  }

  const LineageNode& grown = forest.node(forest.frontier.at(1));
  CHECK(grown.match_score == doctest::Approx(0.9));
  CHECK_FALSE(grown.orphan);

  const LineageNode& father = forest.node(0);
  CHECK(father.children == std::vector<int>{2});  // daughter 1's arena slot
  const LineageNode& divided = forest.node(1);
  REQUIRE(divided.children.size() == 2);
  CHECK(forest.node(divided.children[0]).label == 3);
  CHECK(forest.node(divided.children[1]).label == 4);

  const LineageNode& orphan = forest.node(forest.frontier.at(5));
  CHECK(orphan.orphan);
  CHECK(orphan.match_score == 0.0);

  SUBCASE("a correspondence for the wrong frame is refused") {
    Correspondence stale = corr;  // still says frame 0
    CHECK_THROWS_AS(append_correspondence(forest, stale, f1.cells), std::logic_error);
  }
  SUBCASE("an unknown father is refused") {
    Correspondence bad;
    bad.frame_t = 1;
    bad.pairs = {{1, 99, 0.8, MatchKind::proliferation}};
    CHECK_THROWS_AS(append_correspondence(forest, bad, f1.cells), std::logic_error);
  }
  SUBCASE("a daughter missing from the frame is refused") {
    Correspondence bad;
    bad.frame_t = 1;
    bad.pairs = {{77, 1, 0.8, MatchKind::proliferation}};
    CHECK_THROWS_AS(append_correspondence(forest, bad, f1.cells), std::logic_error);
  }
  SUBCASE("an empty next frame is refused") {
    Correspondence next;
    next.frame_t = 1;
    const std::vector<CellRecord> none;
    CHECK_THROWS_AS(append_correspondence(forest, next, none), std::runtime_error);
  }
}

TEST_CASE("the division tree collapses chains and averages the chosen attribute") {
  const LineageForest forest = chain_with_division();
  const DivisionTreeResult result = division_tree(forest, 0, "length");

  CHECK(result.warnings.empty());
  CHECK(result.root.birth_frame == 0);
  CHECK(result.root.division_or_death_frame == 2);
  CHECK(result.root.life_attribute == doctest::Approx(12.0));  // mean of 10, 12, 14
  REQUIRE(result.root.children.size() == 2);
  for (const DivisionNode& child : result.root.children) {
    CHECK(child.birth_frame == 3);
    CHECK(child.division_or_death_frame == 3);  // leaves die where they are born
    CHECK(child.children.empty());
  }
  CHECK(result.root.children[0].life_attribute == doctest::Approx(8.0));
  CHECK(result.root.children[1].life_attribute == doctest::Approx(9.0));

  CHECK_THROWS_AS(division_tree(forest, 0, "voltage"), std::runtime_error);
  CHECK_THROWS_AS(division_tree(forest, 99, "length"), std::runtime_error);
  CHECK_THROWS_AS(division_tree(forest, -1, "length"), std::runtime_error);
}

TEST_CASE("an over-segmented node keeps its two strongest daughters") {
  LineageForest f;
  f.nodes.push_back(make_node(0, 1, 10.0));
  f.nodes.push_back(make_node(1, 2, 100.0, 0.2));
  f.nodes.push_back(make_node(1, 3, 5.0, 0.6));
  f.nodes.push_back(make_node(1, 4, 7.0, 0.4));
  f.nodes[0].children = {1, 2, 3};
  f.roots = {0};
  f.frame_count = 2;

  const DivisionTreeResult result = division_tree(f, 0, "length");
  REQUIRE(result.warnings.size() == 1);
  CHECK(result.warnings[0] == "frame 0 label 1: 3 daughters, kept 2 highest-score");
  REQUIRE(result.root.children.size() == 2);
  // Scores 0.6 and 0.4 survive; the kept pair is reported in label order.
  CHECK(result.root.children[0].life_attribute == doctest::Approx(5.0));
  CHECK(result.root.children[1].life_attribute == doctest::Approx(7.0));

  SUBCASE("score ties fall back to the lower labels") {
    LineageForest g;
    g.nodes.push_back(make_node(0, 1, 10.0));
    g.nodes.push_back(make_node(1, 9, 1.0, 0.5));
    g.nodes.push_back(make_node(1, 7, 2.0, 0.5));
    g.nodes.push_back(make_node(1, 8, 3.0, 0.5));
    g.nodes[0].children = {1, 2, 3};
    g.roots = {0};
    g.frame_count = 2;
    const DivisionTreeResult r = division_tree(g, 0, "length");
    REQUIRE(r.root.children.size() == 2);
    CHECK(r.root.children[0].life_attribute == doctest::Approx(2.0));  // label 7
    CHECK(r.root.children[1].life_attribute == doctest::Approx(3.0));  // label 8
  }
}

TEST_CASE("tracks cover every node exactly once in depth-first order") {
  const LineageForest forest = chain_with_division();
  const std::vector<Track> tracks = extract_tracks(forest);

  REQUIRE(tracks.size() == 3);
  for (std::size_t i = 0; i < tracks.size(); ++i) CHECK(tracks[i].id == static_cast<int>(i));

  using Step = std::pair<int, int>;
  CHECK(tracks[0].path == std::vector<Step>{{0, 1}, {1, 1}, {2, 1}});
  CHECK(tracks[1].path == std::vector<Step>{{3, 2}});
  CHECK(tracks[2].path == std::vector<Step>{{3, 3}});

  std::multiset<Step> covered;
  for (const Track& t : tracks) {
    for (const auto& [name, series] : t.series) {
      CHECK(series.size() == t.path.size());
      (void)name;
    }
    covered.insert(t.path.begin(), t.path.end());
  }
  CHECK(covered.size() == forest.nodes.size());  // each node once...
  CHECK(std::set<Step>(covered.begin(), covered.end()).size() == covered.size());  // ...none twice
  CHECK(tracks[0].series.at("length") == std::vector<double>{10.0, 12.0, 14.0});

  const std::string csv = tracks_csv(tracks);
  CHECK(csv.rfind("track_id,frame,label,area,length,width,dist_centroid\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);  // header + one row per node
  CHECK(csv.find("\n0,0,1,20,10,2,1.5\n") != std::string::npos);
  CHECK(csv.find("\n2,3,3,18,9,2,1.5\n") != std::string::npos);
}

TEST_CASE("forests round-trip through both export formats") {
  const SynthMovie movie = tiny_movie();
  const LineageForest& forest = movie.forest;
  REQUIRE(forest.nodes.size() > 4);

  const std::string json = export_forest(forest, "json-tree");
  const std::string newick = export_forest(forest, "newick-attr");

  SUBCASE("json survives a full import/export cycle") {
    const LineageForest back = import_forest(json, "json-tree");
    CHECK(back.frame_count == forest.frame_count);
    CHECK(back.nodes.size() == forest.nodes.size());
    CHECK(back.roots.size() == forest.roots.size());
    CHECK(export_forest(back, "json-tree") == json);
  }
  SUBCASE("newick survives a full import/export cycle") {
    const LineageForest back = import_forest(newick, "newick-attr");
    CHECK(back.nodes.size() == forest.nodes.size());
    CHECK(export_forest(back, "newick-attr") == newick);
  }
  SUBCASE("importing one format and exporting the other is lossless") {
    const LineageForest via_json = import_forest(json, "json-tree");
    CHECK(export_forest(via_json, "newick-attr") == newick);
    const LineageForest via_newick = import_forest(newick, "newick-attr");
    CHECK(export_forest(via_newick, "json-tree") == json);
  }
  SUBCASE("orphan flags survive round trips") {
    LineageForest f = chain_with_division();
    f.nodes.push_back(make_node(1, 40, 3.0));
    f.nodes.back().orphan = true;
    f.roots.push_back(static_cast<int>(f.nodes.size()) - 1);
    // frame_count stays 4; the orphan is a stub tree rooted at frame 1.
    for (const std::string format : {"json-tree", "newick-attr"}) {
      const std::string bytes = export_forest(f, format);
      const LineageForest back = import_forest(bytes, format);
      CHECK(export_forest(back, format) == bytes);
      bool found_orphan = false;
      for (const LineageNode& n : back.nodes)
        if (n.label == 40 && n.orphan) found_orphan = true;
      CHECK(found_orphan);
    }
  }
}

TEST_CASE("malformed forest files are reported, not crashed on") {
  CHECK_THROWS_AS(import_forest("{ not json", "json-tree"), std::runtime_error);
  CHECK_THROWS_AS(import_forest("{\"roots\": 3}", "json-tree"), std::exception);
  CHECK_THROWS_AS(import_forest("(", "newick-attr"), std::runtime_error);
  CHECK_THROWS_AS(import_forest("", "newick-attr"), std::runtime_error);
  CHECK_THROWS_AS(import_forest("{}", "yaml"), std::runtime_error);

  const LineageForest forest = chain_with_division();
  CHECK_THROWS_AS(export_forest(forest, "yaml"), std::runtime_error);

  // A tampered frame count is caught by the depth cross-check.
  std::string json = export_forest(forest, "json-tree");
  const std::string needle = "\"frame_count\": 4";
  const std::size_t at = json.find(needle);
  REQUIRE(at != std::string::npos);
  json.replace(at, needle.size(), "\"frame_count\": 9");
  CHECK_THROWS_AS(import_forest(json, "json-tree"), std::runtime_error);
}
