#ifndef CELLTRACK_EVALUATION_HPP
#define CELLTRACK_EVALUATION_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "celltrack/matching.hpp"

namespace celltrack {

/// A track as a bare (frame, label) sequence over consecutive frames.
using TrackPath = std::vector<std::pair<int, int>>;

/// Reference answer for a movie: one pair list per frame pair, plus the
/// tracks they imply.
struct GroundTruth {
  std::vector<Correspondence> pairs;  // ascending frame_t
  std::vector<TrackPath> tracks;
  std::optional<std::pair<int, int>> frame_window;  // inclusive
};

struct EvalReport {
  long tp = 0;
  long fat = 0;
  long tdf = 0;
  long gt = 0;
  double tdr = 0.0;
  double er = 0.0;
  double acc = 0.0;
  std::vector<std::pair<int, int>> histogram;  // (frame_t, error count)
};

/// Straight metric arithmetic from already-established counts.
EvalReport report_from_counts(long tp, long fat, long tdf, long gt);

/// Reconstructs tracks from per-pair father/daughter lists: an only daughter
/// continues its father's track, siblings start new tracks, unmatched
/// daughters start new tracks. frame0_labels seeds the first frame.
std::vector<TrackPath> tracks_from_pairs(const std::vector<Correspondence>& pairs,
                                         const std::vector<int>& frame0_labels);

/// Fraction of frame pairs whose predicted pair set exactly equals the truth
/// pair set. tp = exact pairs, gt = total pairs.
EvalReport frame_tdr(const std::vector<Correspondence>& predicted,
                     const std::vector<Correspondence>& truth);

/// Exact-equality track comparison inside an inclusive frame window: tracks
/// intersecting the window are truncated to it, then matched by equality.
/// fat = predicted-only, tdf = truth-only, gt = truth tracks in window.
EvalReport track_er(const std::vector<TrackPath>& predicted, const std::vector<TrackPath>& truth,
                    std::pair<int, int> window);

/// Pair-level comparison of one frame pair: tp = shared (daughter, father)
/// pairs, gt = truth pairs.
EvalReport match_accuracy(const Correspondence& predicted, const Correspondence& truth);

/// Per-frame-pair symmetric-difference counts between prediction and truth.
std::vector<std::pair<int, int>> error_histogram(const std::vector<Correspondence>& predicted,
                                                 const std::vector<Correspondence>& truth);

/// Flat key = value rendering, percentages rounded to one decimal.
std::string report_text(const EvalReport& report);

/// CSV: frame_t,errors.
std::string histogram_csv(const std::vector<std::pair<int, int>>& histogram);

}  // namespace celltrack

#endif
