#ifndef CELLTRACK_SYNTH_HPP
#define CELLTRACK_SYNTH_HPP

#include <cstdint>
#include <vector>

#include "celltrack/evaluation.hpp"
#include "celltrack/geometry.hpp"
#include "celltrack/lineage.hpp"

namespace celltrack {

/// A rod-shaped cell: a capsule of the given length and width centered at
/// (cx, cy) in pixel units (x = column, y = row), oriented along `orientation`
/// radians from the +x axis.
struct RodCell {
  int id = 0;
  double cx = 0.0;
  double cy = 0.0;
  double orientation = 0.0;
  double length = 0.0;
  double width = 0.0;
  int parent_id = -1;
};

struct SynthConfig {
  std::uint64_t seed = 1;
  int frames = 20;
  int initial_cells = 1;
  double growth_rate = 3.6;       // px of length per frame (per-cell pace varies +-15%)
  double division_length = 48.0;  // split threshold (per-cell threshold varies +-10%)
  double cell_width = 10.0;
  double jitter = 0.3;            // max |center displacement| per axis per frame
  int relaxation_iters = 60;
  int crowding_onset = 20;        // cells; past this, growth slows as sqrt(onset/count)
                                  // so the colony radius expands at constant speed
                                  // (nutrient-limited regime); <= 0 disables
  double lag_tau = 0.0;           // frames; lag phase — growth ramps in as
                                  // 1 - exp(-frame/lag_tau); <= 0 disables
  int grid_width = 128;
  int grid_height = 128;

  void validate() const;
};

struct SynthMovie {
  std::vector<LabelMask> masks;
  GroundTruth truth;
  LineageForest forest;
};

/// Pixels whose center lies within the cell's capsule, clipped to the grid.
PixelSet rasterize_rod(const RodCell& cell, int grid_width, int grid_height);

/// Grows, divides, jitters, relaxes, and rasterizes a colony for
/// cfg.frames frames, recording exact correspondences and lineage.
SynthMovie generate_movie(const SynthConfig& cfg);

}  // namespace celltrack

#endif
