#ifndef CELLTRACK_LINEAGE_HPP
#define CELLTRACK_LINEAGE_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "celltrack/geometry.hpp"
#include "celltrack/matching.hpp"

namespace celltrack {

/// One cell in one frame. Children live in the next frame.
struct LineageNode {
  int frame = 0;
  int label = 0;
  bool orphan = false;        // appeared without a father; starts its own tree
  double match_score = 0.0;   // score of the edge from the father (0 for roots)
  std::map<std::string, double> attributes;
  std::vector<int> children;  // arena indices, ascending by child label
};

/// Arena-backed forest: one tree per initial-frame cell plus one per orphan.
struct LineageForest {
  std::vector<LineageNode> nodes;
  std::vector<int> roots;      // arena indices in creation order
  int frame_count = 0;

  const LineageNode& node(int index) const { return nodes.at(static_cast<std::size_t>(index)); }

  /// label -> arena index for every cell of the most recent frame.
  std::map<int, int> frontier;
};

/// Per-cell attribute map: area, length, width, row, col, and dist_centroid
/// measured against the given colony centroid.
std::map<std::string, double> cell_attributes(const CellRecord& cell, double colony_row,
                                              double colony_col);

/// One single-node tree per initial-frame cell.
LineageForest init_forest(std::span<const CellRecord> frame0_cells);

/// Attaches every matched daughter under its father's frontier node; unmatched
/// daughters become orphan roots. The correspondence must be for the forest's
/// current last frame.
void append_correspondence(LineageForest& forest, const Correspondence& corr,
                           std::span<const CellRecord> f_t1_cells);

/// Lineage tree collapsed to division events. life_attribute is the mean of
/// one chosen node attribute over the collapsed chain.
struct DivisionNode {
  int birth_frame = 0;
  int division_or_death_frame = 0;
  double life_attribute = 0.0;
  std::vector<DivisionNode> children;  // 0 or 2
};

struct DivisionTreeResult {
  DivisionNode root;
  std::vector<std::string> warnings;  // over-segmented nodes that were truncated
};

DivisionTreeResult division_tree(const LineageForest& forest, int root_index,
                                 const std::string& attribute = "length");

/// One cell's life from birth to division or disappearance.
struct Track {
  int id = 0;
  std::vector<std::pair<int, int>> path;            // (frame, label), consecutive frames
  std::map<std::string, std::vector<double>> series;  // per-frame attribute values
};

/// One track per maximal single-child chain, ids in depth-first order.
std::vector<Track> extract_tracks(const LineageForest& forest);

/// Columns: track_id,frame,label,area,length,width,dist_centroid.
std::string tracks_csv(const std::vector<Track>& tracks);

/// "json-tree": nested objects; "newick-attr": one Newick line per root with
/// bracketed attribute comments. Both round-trip through import_forest.
std::string export_forest(const LineageForest& forest, const std::string& format);
LineageForest import_forest(const std::string& bytes, const std::string& format);

}  // namespace celltrack

#endif
