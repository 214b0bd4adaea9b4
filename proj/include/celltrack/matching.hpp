#ifndef CELLTRACK_MATCHING_HPP
#define CELLTRACK_MATCHING_HPP

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "celltrack/geometry.hpp"
#include "celltrack/neighborhood.hpp"
#include "celltrack/search_region.hpp"

namespace celltrack {

/// Thresholds and knobs for the frame-pair matching loop.
struct MatchConfig {
  double t_init = 0.7;   // starting acceptance threshold
  double t_min = 0.5;    // floor of the threshold schedule
  double t_step = 0.05;  // amount the threshold drops per round
  int max_marks = 3;     // problematic marks before temporary exclusion
  int l_max = 3;         // upper bound on neighborhood layers
  double alpha_k = 0.5;  // kNN region size per neighborhood pixel
  double alpha_l = 0.03; // candidate count per neighborhood pixel
  bool upper_bound_inclusive = true;  // accept a father total of exactly 1

  void validate() const;
};

/// Jaccard overlaps of the translated neighborhood members against the
/// previous frame's cells, at one candidate placement.
struct ScoreMatrix {
  std::vector<int> rows;      // daughter labels in neighborhood member order
  std::vector<int> cols;      // father labels with any overlap, ascending
  std::vector<double> values; // rows x cols, row-major
  Pixel placement;

  double at(std::size_t i, std::size_t j) const { return values[i * cols.size() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * cols.size() + j]; }
};

/// Score matrix masked to each row's selected father (at most one per row).
struct ReducedScoreMatrix {
  std::vector<int> rows;
  std::vector<int> cols;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * cols.size() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * cols.size() + j]; }
};

enum class MatchKind { proliferation, division, oversegmentation, unmatched };

std::string to_string(MatchKind k);
MatchKind match_kind_from_string(const std::string& s);

struct MatchedPair {
  int daughter = 0;
  int father = 0;
  double score = 0.0;
  MatchKind kind = MatchKind::proliferation;
};

/// All father-daughter relations found for one frame pair.
struct Correspondence {
  int frame_t = 0;
  std::vector<MatchedPair> pairs;          // sorted by daughter label
  std::vector<int> unmatched_daughters;    // sorted ascending
  double final_threshold = 0.0;            // T in effect when the loop ended
  int rejected_attempts = 0;
};

/// Jaccard index |a n b| / |a u b|.
double overlap_score(const PixelSet& a, const PixelSet& b);

/// Scores every neighborhood member translated so the neighborhood centroid
/// lands on `placement`. Translated pixels falling off the grid are excluded
/// from intersections but still count in unions. Only fathers in
/// `fathers_available` produce columns.
ScoreMatrix score_at(const Neighborhood& nb, Pixel placement, const Frame& frame_t,
                     const std::set<int>& fathers_available);

/// Sum of row maxima; an all-zero row contributes 0.
double overall_score(const ScoreMatrix& s);

struct PlacementChoice {
  ScoreMatrix score;
  ReducedScoreMatrix reduced;
  std::set<int> fathers;  // selected father set (row argmaxes)
};

/// Evaluates every candidate placement and keeps the one with the highest
/// overall score (ties: earliest candidate). Returns nullopt when no placement
/// overlaps anything.
std::optional<PlacementChoice> best_placement(const Neighborhood& nb, const CandidateSet& candidates,
                                              const Frame& frame_t,
                                              const std::set<int>& fathers_available);

/// Per-father column sums of the reduced matrix.
std::map<int, double> father_totals(const ReducedScoreMatrix& reduced);

/// Accepts iff every selected father total lies in (T, 1) — upper bound
/// inclusive when configured — and no father has more than two daughters.
bool validate_matching(const ReducedScoreMatrix& reduced, const std::map<int, double>& totals,
                       double threshold, const MatchConfig& cfg);

/// Test/diagnostic hook invoked by the driver after every accept or reject.
struct DriverEvent {
  enum class Kind { accepted, rejected } kind;
  double threshold;
  int anchor = 0;                        // cell the attempt was anchored at
  std::vector<int> members;              // neighborhood members of the attempt
  std::map<int, double> father_totals;   // per-father score sums at the best placement
  std::vector<int> to_match;   // cells still awaiting a father
  std::vector<int> excluded;   // temporarily excluded problematic cells
  std::vector<int> matched;    // daughters matched so far
};
using MatchObserver = std::function<void(const DriverEvent&)>;

/// Runs the full accept/reject/problematic/threshold-lowering loop for one
/// frame pair and reports every relation plus leftover unmatched daughters.
Correspondence track_frame_pair(const Frame& frame_t, const Frame& frame_t1,
                                const MatchConfig& cfg, const MatchObserver& observer = {});

}  // namespace celltrack

#endif
