#include "celltrack/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace celltrack {

std::vector<const CellRecord*> candidate_pool(const CellRecord& anchor,
                                              std::span<const CellRecord> frame_cells,
                                              const std::vector<int>& unmatched_sorted,
                                              double R) {
  std::vector<const CellRecord*> pool;
  const double r2 = R * R;
  for (const CellRecord& c : frame_cells) {
    if (!std::binary_search(unmatched_sorted.begin(), unmatched_sorted.end(), c.id)) continue;
    const double dr = c.centroid_row - anchor.centroid_row;
    const double dc = c.centroid_col - anchor.centroid_col;
    if (dr * dr + dc * dc <= r2 || c.id == anchor.id) pool.push_back(&c);
  }
  return pool;  // frame_cells is label-sorted, so the pool is too
}

int layer_bound(const CellRecord& cell, double colony_row, double colony_col,
                double colony_radius, int l_max) {
  if (l_max < 1) throw std::invalid_argument("layer_bound: l_max must be >= 1");
  if (colony_radius <= 0.0) return l_max;  // single-cell colony: everything is central
  const double d = std::hypot(cell.centroid_row - colony_row, cell.centroid_col - colony_col);
  const double frac = std::clamp(1.0 - d / colony_radius, 0.0, 1.0);
  const int l = 1 + static_cast<int>(std::floor((l_max - 1) * frac));
  return std::clamp(l, 1, l_max);
}

Neighborhood build_neighborhood(const CellRecord& anchor,
                                std::span<const CellRecord* const> pool,
                                double r, int layers) {
  if (layers < 1) throw std::invalid_argument("build_neighborhood: layers must be >= 1");

  Neighborhood nb;
  nb.anchor_id = anchor.id;
  nb.member_ids.push_back(anchor.id);
  nb.layer_of[anchor.id] = 0;

  std::set<int> included{anchor.id};
  std::vector<const CellRecord*> current_layer;
  const CellRecord* anchor_in_pool = nullptr;
  for (const CellRecord* c : pool)
    if (c->id == anchor.id) anchor_in_pool = c;
  if (!anchor_in_pool) throw std::invalid_argument("build_neighborhood: anchor not in pool");
  current_layer.push_back(anchor_in_pool);

  for (int layer = 1; layer <= layers && !current_layer.empty(); ++layer) {
    std::vector<const CellRecord*> next_layer;
    for (const CellRecord* member : current_layer) {
      for (const CellRecord* cand : pool) {
        if (included.count(cand->id)) continue;
        if (touches_within(member->pixels, cand->pixels, r)) {
          included.insert(cand->id);
          next_layer.push_back(cand);
        }
      }
    }
    std::sort(next_layer.begin(), next_layer.end(),
              [](const CellRecord* a, const CellRecord* b) { return a->id < b->id; });
    for (const CellRecord* c : next_layer) {
      nb.member_ids.push_back(c->id);
      nb.layer_of[c->id] = layer;
    }
    current_layer = std::move(next_layer);
  }

  for (int id : nb.member_ids)
    for (const CellRecord* c : pool)
      if (c->id == id) {
        nb.members.push_back(c);
        break;
      }
  std::vector<Pixel> all;
  for (const CellRecord* c : nb.members)
    all.insert(all.end(), c->pixels.points().begin(), c->pixels.points().end());
  nb.pixels = PixelSet(std::move(all));
  nb.centroid_row = pixel_mean_row(nb.pixels);
  nb.centroid_col = pixel_mean_col(nb.pixels);
  nb.covariance = pixel_covariance(nb.pixels);
  return nb;
}

}  // namespace celltrack
