#ifndef CELLTRACK_NEIGHBORHOOD_HPP
#define CELLTRACK_NEIGHBORHOOD_HPP

#include <map>
#include <span>
#include <vector>

#include "celltrack/geometry.hpp"

namespace celltrack {

/// An anchor cell plus up to L layers of dilation-adjacent cells, with the
/// pixel statistics of the member union.
struct Neighborhood {
  int anchor_id = 0;
  std::vector<int> member_ids;   // anchor first, then layer-major, ascending label within a layer
  std::vector<const CellRecord*> members;  // same order; borrowed from the frame's cell list
  std::map<int, int> layer_of;   // member label -> layer index (0 for anchor)
  PixelSet pixels;               // union of member pixel sets
  double centroid_row = 0.0;
  double centroid_col = 0.0;
  Mat2 covariance;
};

/// Unmatched cells (anchor included) whose centroid lies within Euclidean
/// distance R of the anchor's centroid. Ascending by label.
std::vector<const CellRecord*> candidate_pool(const CellRecord& anchor,
                                              std::span<const CellRecord> frame_cells,
                                              const std::vector<int>& unmatched_sorted,
                                              double R);

/// Layer budget for a cell: L = 1 + floor((L_max - 1) * (1 - d/colony_radius)),
/// clamped to [1, L_max]. Cells at the colony centroid get the full budget.
int layer_bound(const CellRecord& cell, double colony_row, double colony_col,
                double colony_radius, int l_max);

/// Grows the neighborhood layer by layer: layer k+1 holds pool cells touched by
/// the dilation (disk radius r) of any layer-k cell and not yet included.
Neighborhood build_neighborhood(const CellRecord& anchor,
                                std::span<const CellRecord* const> pool,
                                double r, int layers);

}  // namespace celltrack

#endif
