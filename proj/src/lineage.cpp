#include "celltrack/lineage.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "celltrack/io.hpp"

namespace celltrack {

std::map<std::string, double> cell_attributes(const CellRecord& cell, double colony_row,
                                              double colony_col) {
  const double dr = cell.centroid_row - colony_row;
  const double dc = cell.centroid_col - colony_col;
  return {
      {"area", static_cast<double>(cell.area)},
      {"length", cell.length},
      {"width", cell.width},
      {"row", cell.centroid_row},
      {"col", cell.centroid_col},
      {"dist_centroid", std::sqrt(dr * dr + dc * dc)},
  };
}

LineageForest init_forest(std::span<const CellRecord> frame0_cells) {
  if (frame0_cells.empty()) throw std::runtime_error("init_forest: initial frame has no cells");
  const FrameStatistics stats = frame_statistics(frame0_cells);

  LineageForest forest;
  forest.frame_count = 1;
  for (const CellRecord& cell : frame0_cells) {
    LineageNode node;
    node.frame = 0;
    node.label = cell.id;
    node.attributes = cell_attributes(cell, stats.colony_row, stats.colony_col);
    const int index = static_cast<int>(forest.nodes.size());
    forest.nodes.push_back(std::move(node));
    forest.roots.push_back(index);
    forest.frontier[cell.id] = index;
  }
  return forest;
}

void append_correspondence(LineageForest& forest, const Correspondence& corr,
                           std::span<const CellRecord> f_t1_cells) {
  if (corr.frame_t != forest.frame_count - 1)
    throw std::logic_error("append_correspondence: expected frame " +
                           std::to_string(forest.frame_count - 1) + ", got " +
                           std::to_string(corr.frame_t));
  if (f_t1_cells.empty())
    throw std::runtime_error("append_correspondence: next frame has no cells");
  const FrameStatistics stats = frame_statistics(f_t1_cells);
  const int next_frame = corr.frame_t + 1;

  auto cell_by_label = [&](int label) -> const CellRecord& {
    for (const CellRecord& c : f_t1_cells)
      if (c.id == label) return c;
    throw std::logic_error("append_correspondence: daughter " + std::to_string(label) +
                           " missing from frame " + std::to_string(next_frame));
  };

  std::map<int, int> next_frontier;
  for (const MatchedPair& pair : corr.pairs) {
    const auto it = forest.frontier.find(pair.father);
    if (it == forest.frontier.end())
      throw std::logic_error("append_correspondence: father " + std::to_string(pair.father) +
                             " is not a frame " + std::to_string(corr.frame_t) + " leaf");
    const CellRecord& cell = cell_by_label(pair.daughter);
    LineageNode node;
    node.frame = next_frame;
    node.label = pair.daughter;
    node.match_score = pair.score;
    node.attributes = cell_attributes(cell, stats.colony_row, stats.colony_col);
    const int index = static_cast<int>(forest.nodes.size());
    forest.nodes.push_back(std::move(node));
    forest.nodes[static_cast<std::size_t>(it->second)].children.push_back(index);
    next_frontier[pair.daughter] = index;
  }
  for (int label : corr.unmatched_daughters) {
    const CellRecord& cell = cell_by_label(label);
    LineageNode node;
    node.frame = next_frame;
    node.label = label;
    node.orphan = true;
    node.attributes = cell_attributes(cell, stats.colony_row, stats.colony_col);
    const int index = static_cast<int>(forest.nodes.size());
    forest.nodes.push_back(std::move(node));
    forest.roots.push_back(index);
    next_frontier[label] = index;
  }

  forest.frontier = std::move(next_frontier);
  forest.frame_count = next_frame + 1;
}

namespace {

// Children of `index`, truncated to the two highest-score daughters when a
// node is over-segmented. Appends a warning for each truncation.
std::vector<int> effective_children(const LineageForest& forest, int index,
                                    std::vector<std::string>* warnings) {
  const LineageNode& node = forest.node(index);
  std::vector<int> kids = node.children;
  if (kids.size() > 2) {
    std::sort(kids.begin(), kids.end(), [&](int a, int b) {
      const LineageNode& na = forest.node(a);
      const LineageNode& nb = forest.node(b);
      if (na.match_score != nb.match_score) return na.match_score > nb.match_score;
      return na.label < nb.label;
    });
    if (warnings)
      warnings->push_back("frame " + std::to_string(node.frame) + " label " +
                          std::to_string(node.label) + ": " + std::to_string(node.children.size()) +
                          " daughters, kept 2 highest-score");
    kids.resize(2);
    std::sort(kids.begin(), kids.end(), [&](int a, int b) {
      return forest.node(a).label < forest.node(b).label;
    });
  }
  return kids;
}

DivisionNode collapse_chain(const LineageForest& forest, int start, const std::string& attribute,
                            std::vector<std::string>& warnings) {
  DivisionNode out;
  out.birth_frame = forest.node(start).frame;

  double sum = 0.0;
  int count = 0;
  int index = start;
  for (;;) {
    const LineageNode& node = forest.node(index);
    const auto it = node.attributes.find(attribute);
    if (it == node.attributes.end())
      throw std::runtime_error("division_tree: unknown attribute '" + attribute + "'");
    sum += it->second;
    ++count;
    const std::vector<int> kids = effective_children(forest, index, &warnings);
    if (kids.size() == 1) {
      index = kids[0];
      continue;
    }
    out.division_or_death_frame = node.frame;
    out.life_attribute = sum / count;
    for (int kid : kids) out.children.push_back(collapse_chain(forest, kid, attribute, warnings));
    return out;
  }
}

}  // namespace

DivisionTreeResult division_tree(const LineageForest& forest, int root_index,
                                 const std::string& attribute) {
  if (root_index < 0 || root_index >= static_cast<int>(forest.nodes.size()))
    throw std::runtime_error("division_tree: bad root index");
  DivisionTreeResult result;
  result.root = collapse_chain(forest, root_index, attribute, result.warnings);
  return result;
}

std::vector<Track> extract_tracks(const LineageForest& forest) {
  std::vector<Track> tracks;
  // Depth-first from each root; a new track starts at every root and at every
  // division daughter.
  std::vector<int> stack(forest.roots.rbegin(), forest.roots.rend());
  while (!stack.empty()) {
    int index = stack.back();
    stack.pop_back();
    Track track;
    track.id = static_cast<int>(tracks.size());
    for (;;) {
      const LineageNode& node = forest.node(index);
      track.path.emplace_back(node.frame, node.label);
      for (const auto& [name, value] : node.attributes) track.series[name].push_back(value);
      const std::vector<int> kids = effective_children(forest, index, nullptr);
      if (kids.size() == 1) {
        index = kids[0];
        continue;
      }
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
      break;
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

std::string tracks_csv(const std::vector<Track>& tracks) {
  std::ostringstream out;
  out << "track_id,frame,label,area,length,width,dist_centroid\n";
  for (const Track& track : tracks) {
    for (std::size_t i = 0; i < track.path.size(); ++i) {
      out << track.id << ',' << track.path[i].first << ',' << track.path[i].second;
      for (const char* key : {"area", "length", "width", "dist_centroid"})
        out << ',' << double_to_string(track.series.at(key).at(i));
      out << '\n';
    }
  }
  return out.str();
}

namespace {

nlohmann::ordered_json node_to_json(const LineageForest& forest, int index) {
  const LineageNode& node = forest.node(index);
  nlohmann::ordered_json j;
  j["frame"] = node.frame;
  j["label"] = node.label;
  j["orphan"] = node.orphan;
  j["score"] = node.match_score;
  j["attributes"] = nlohmann::ordered_json::object();
  for (const auto& [name, value] : node.attributes) j["attributes"][name] = value;
  j["children"] = nlohmann::ordered_json::array();
  for (int kid : node.children) j["children"].push_back(node_to_json(forest, kid));
  return j;
}

int node_from_json(const nlohmann::ordered_json& j, LineageForest& forest, int parent_frame) {
  if (!j.is_object()) throw std::runtime_error("forest json: node is not an object");
  LineageNode node;
  node.frame = j.at("frame").get<int>();
  node.label = j.at("label").get<int>();
  node.orphan = j.at("orphan").get<bool>();
  node.match_score = j.at("score").get<double>();
  if (parent_frame >= 0 && node.frame != parent_frame + 1)
    throw std::runtime_error("forest json: child frame " + std::to_string(node.frame) +
                             " does not follow parent frame " + std::to_string(parent_frame));
  for (const auto& [name, value] : j.at("attributes").items())
    node.attributes[name] = value.get<double>();
  const int index = static_cast<int>(forest.nodes.size());
  forest.nodes.push_back(std::move(node));
  for (const auto& child : j.at("children")) {
    const int kid = node_from_json(child, forest, forest.nodes[index].frame);
    forest.nodes[static_cast<std::size_t>(index)].children.push_back(kid);
  }
  return index;
}

void node_to_newick(const LineageForest& forest, int index, std::string& out) {
  const LineageNode& node = forest.node(index);
  if (!node.children.empty()) {
    out += '(';
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      if (i) out += ',';
      node_to_newick(forest, node.children[i], out);
    }
    out += ')';
  }
  out += 'L';
  out += std::to_string(node.label);
  out += "[&frame=";
  out += std::to_string(node.frame);
  out += ",label=";
  out += std::to_string(node.label);
  out += ",orphan=";
  out += node.orphan ? '1' : '0';
  out += ",score=";
  out += double_to_string(node.match_score);
  for (const auto& [name, value] : node.attributes) {
    out += ',';
    out += name;
    out += '=';
    out += double_to_string(value);
  }
  out += ']';
}

struct NewickParser {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("newick line " + std::to_string(line) + ": " + what);
  }
  char peek() const { return pos < text.size() ? text[pos] : '\0'; }
  char take() {
    if (pos >= text.size()) fail("unexpected end of input");
    return text[pos++];
  }
  void expect(char ch) {
    if (peek() != ch) fail(std::string("expected '") + ch + "'");
    ++pos;
  }

  int parse_node(LineageForest& forest, int parent_frame) {
    std::vector<int> kids;
    if (peek() == '(') {
      take();
      kids.push_back(parse_node(forest, -2));
      while (peek() == ',') {
        take();
        kids.push_back(parse_node(forest, -2));
      }
      expect(')');
    }
    expect('L');
    std::string name;
    while (std::isdigit(static_cast<unsigned char>(peek()))) name += take();
    if (name.empty()) fail("missing label after 'L'");
    expect('[');
    expect('&');
    LineageNode node;
    node.label = int_of(name);
    bool saw_frame = false;
    while (peek() != ']') {
      std::string key;
      while (peek() != '=' && peek() != '\0') key += take();
      expect('=');
      std::string value;
      while (peek() != ',' && peek() != ']' && peek() != '\0') value += take();
      if (key == "frame") {
        node.frame = int_of(value);
        saw_frame = true;
      } else if (key == "label") {
        if (int_of(value) != node.label) fail("label comment disagrees with node name");
      } else if (key == "orphan") {
        node.orphan = int_of(value) != 0;
      } else if (key == "score") {
        node.match_score = double_from_string(value);
      } else {
        node.attributes[key] = double_from_string(value);
      }
      if (peek() == ',') take();
    }
    expect(']');
    if (!saw_frame) fail("node comment lacks frame=");
    if (parent_frame >= 0 && node.frame != parent_frame + 1) fail("child frame mismatch");

    const int frame = node.frame;
    const int index = static_cast<int>(forest.nodes.size());
    forest.nodes.push_back(std::move(node));
    for (int kid : kids) {
      if (forest.node(kid).frame != frame + 1) fail("child frame mismatch");
      forest.nodes[static_cast<std::size_t>(index)].children.push_back(kid);
    }
    return index;
  }

  int int_of(const std::string& s) const {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail("bad integer '" + s + "'");
    }
  }
};

void refresh_derived(LineageForest& forest) {
  forest.frame_count = 0;
  for (const LineageNode& node : forest.nodes)
    forest.frame_count = std::max(forest.frame_count, node.frame + 1);
  forest.frontier.clear();
  for (std::size_t i = 0; i < forest.nodes.size(); ++i)
    if (forest.nodes[i].frame == forest.frame_count - 1)
      forest.frontier[forest.nodes[i].label] = static_cast<int>(i);
}

}  // namespace

std::string export_forest(const LineageForest& forest, const std::string& format) {
  if (format == "json-tree") {
    nlohmann::ordered_json j;
    j["frame_count"] = forest.frame_count;
    j["roots"] = nlohmann::ordered_json::array();
    for (int root : forest.roots) j["roots"].push_back(node_to_json(forest, root));
    return j.dump(2) + "\n";
  }
  if (format == "newick-attr") {
    std::string out;
    for (int root : forest.roots) {
      node_to_newick(forest, root, out);
      out += ";\n";
    }
    return out;
  }
  throw std::runtime_error("export_forest: unknown format '" + format + "'");
}

LineageForest import_forest(const std::string& bytes, const std::string& format) {
  LineageForest forest;
  if (format == "json-tree") {
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(std::string("forest json: ") + e.what());
    }
    for (const auto& root : j.at("roots"))
      forest.roots.push_back(node_from_json(root, forest, -1));
    refresh_derived(forest);
    if (j.at("frame_count").get<int>() != forest.frame_count)
      throw std::runtime_error("forest json: frame_count disagrees with tree depth");
    return forest;
  }
  if (format == "newick-attr") {
    NewickParser parser{bytes};
    while (parser.pos < bytes.size()) {
      if (bytes[parser.pos] == '\n') {
        ++parser.line;
        ++parser.pos;
        continue;
      }
      forest.roots.push_back(parser.parse_node(forest, -1));
      parser.expect(';');
    }
    if (forest.roots.empty()) throw std::runtime_error("newick: no trees found");
    refresh_derived(forest);
    return forest;
  }
  throw std::runtime_error("import_forest: unknown format '" + format + "'");
}

}  // namespace celltrack
