#include "celltrack/matching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

namespace celltrack {

namespace {
// Slack on the inclusive upper bound: father totals are sums of pixel-count
// ratios and may land a few ulps above an exact 1.
constexpr double kUpperSlack = 1e-9;
}  // namespace

void MatchConfig::validate() const {
  if (!(0.5 <= t_min && t_min <= t_init && t_init < 1.0))
    throw std::invalid_argument("MatchConfig: need 0.5 <= t_min <= t_init < 1");
  if (!(t_step > 0.0)) throw std::invalid_argument("MatchConfig: t_step must be > 0");
  if (max_marks < 1) throw std::invalid_argument("MatchConfig: max_marks must be >= 1");
  if (l_max < 1) throw std::invalid_argument("MatchConfig: l_max must be >= 1");
  if (!(alpha_k > 0.0 && alpha_l > 0.0))
    throw std::invalid_argument("MatchConfig: alpha_k and alpha_l must be > 0");
}

std::string to_string(MatchKind k) {
  switch (k) {
    case MatchKind::proliferation: return "proliferation";
    case MatchKind::division: return "division";
    case MatchKind::oversegmentation: return "oversegmentation";
    case MatchKind::unmatched: return "unmatched";
  }
  throw std::logic_error("bad MatchKind");
}

MatchKind match_kind_from_string(const std::string& s) {
  if (s == "proliferation") return MatchKind::proliferation;
  if (s == "division") return MatchKind::division;
  if (s == "oversegmentation") return MatchKind::oversegmentation;
  if (s == "unmatched") return MatchKind::unmatched;
  throw std::runtime_error("unknown match kind: " + s);
}

double overlap_score(const PixelSet& a, const PixelSet& b) {
  if (a.empty() && b.empty()) throw std::invalid_argument("overlap_score: both sets empty");
  const std::size_t inter = intersection_size(a, b);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

/// Label-indexed scratch buffers so that scoring many candidate placements of
/// one neighborhood touches no node-based containers in the pixel loop.
struct ScoreScratch {
  std::vector<long> father_area;  // label -> father pixel count, -1 unavailable
  std::vector<std::uint32_t> counts;  // label -> running intersection count
  std::vector<int> touched;           // labels hit by the current member
  std::vector<std::vector<std::pair<int, std::uint32_t>>> inter;  // per member
  std::vector<int> cols;     // union of labels hit, sorted per placement
  std::vector<char> seen;    // label -> already collected into cols
  std::vector<int> slot;     // label -> column index for this placement

  void reset(const Frame& frame_t, const std::set<int>& fathers_available,
             std::size_t member_count) {
    int max_label = 0;
    for (const CellRecord& c : frame_t.cells) max_label = std::max(max_label, c.id);
    father_area.assign(static_cast<std::size_t>(max_label) + 1, -1);
    for (const CellRecord& c : frame_t.cells)
      if (fathers_available.count(c.id))
        father_area[c.id] = static_cast<long>(c.pixels.size());
    counts.assign(father_area.size(), 0);
    seen.assign(father_area.size(), 0);
    slot.assign(father_area.size(), -1);
    inter.assign(member_count, {});
  }

  ScoreMatrix score(const Neighborhood& nb, Pixel placement, const Frame& frame_t) {
    const int off_row = placement.row - static_cast<int>(std::lround(nb.centroid_row));
    const int off_col = placement.col - static_cast<int>(std::lround(nb.centroid_col));
    const LabelMask& mask = frame_t.mask;
    const int max_label = static_cast<int>(father_area.size()) - 1;

    // Intersection counts of each translated member against every available
    // father, gathered in one pass over the label grid. Off-grid pixels are
    // skipped here but their member still counts full-size in the union below.
    cols.clear();
    for (std::size_t i = 0; i < nb.members.size(); ++i) {
      inter[i].clear();
      touched.clear();
      for (Pixel p : nb.members[i]->pixels.points()) {
        const int r = p.row + off_row;
        const int c = p.col + off_col;
        if (!mask.in_bounds(r, c)) continue;
        const int label = mask.at(r, c);
        if (label <= 0 || label > max_label || father_area[label] < 0) continue;
        if (counts[label]++ == 0) touched.push_back(label);
      }
      for (int label : touched) {
        inter[i].emplace_back(label, counts[label]);
        counts[label] = 0;
        if (!seen[label]) {
          seen[label] = 1;
          cols.push_back(label);
        }
      }
    }
    std::sort(cols.begin(), cols.end());

    ScoreMatrix s;
    s.placement = placement;
    s.rows = nb.member_ids;
    s.cols = cols;
    s.values.assign(s.rows.size() * s.cols.size(), 0.0);
    for (std::size_t j = 0; j < s.cols.size(); ++j) {
      slot[s.cols[j]] = static_cast<int>(j);
      seen[s.cols[j]] = 0;  // ready for the next placement
    }
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      const std::size_t area_i = nb.members[i]->pixels.size();
      for (const auto& [label, cnt] : inter[i]) {
        const std::size_t uni =
            area_i + static_cast<std::size_t>(father_area[label]) - cnt;
        s.at(i, static_cast<std::size_t>(slot[label])) =
            static_cast<double>(cnt) / static_cast<double>(uni);
      }
    }
    return s;
  }
};

}  // namespace

ScoreMatrix score_at(const Neighborhood& nb, Pixel placement, const Frame& frame_t,
                     const std::set<int>& fathers_available) {
  ScoreScratch scratch;
  scratch.reset(frame_t, fathers_available, nb.members.size());
  return scratch.score(nb, placement, frame_t);
}

double overall_score(const ScoreMatrix& s) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    double best = 0.0;
    for (std::size_t j = 0; j < s.cols.size(); ++j) best = std::max(best, s.at(i, j));
    total += best;
  }
  return total;
}

std::optional<PlacementChoice> best_placement(const Neighborhood& nb, const CandidateSet& candidates,
                                              const Frame& frame_t,
                                              const std::set<int>& fathers_available) {
  if (candidates.points.empty()) throw std::invalid_argument("best_placement: no candidates");

  ScoreScratch scratch;
  scratch.reset(frame_t, fathers_available, nb.members.size());

  ScoreMatrix best;
  double best_overall = -1.0;
  for (Pixel placement : candidates.points) {
    ScoreMatrix s = scratch.score(nb, placement, frame_t);
    const double o = overall_score(s);
    if (o > best_overall) {  // strict: ties keep the earliest candidate
      best_overall = o;
      best = std::move(s);
    }
  }
  if (best_overall <= 0.0) return std::nullopt;

  PlacementChoice choice;
  choice.reduced.rows = best.rows;
  choice.reduced.cols = best.cols;
  choice.reduced.values.assign(best.values.size(), 0.0);
  for (std::size_t i = 0; i < best.rows.size(); ++i) {
    double row_max = 0.0;
    std::size_t arg = 0;
    bool any = false;
    for (std::size_t j = 0; j < best.cols.size(); ++j) {
      const double v = best.at(i, j);
      if (v > row_max) {  // strict: ties resolve to the lowest father label
        row_max = v;
        arg = j;
        any = true;
      }
    }
    if (any) {
      choice.reduced.at(i, arg) = row_max;
      choice.fathers.insert(best.cols[arg]);
    }
  }
  choice.score = std::move(best);
  return choice;
}

std::map<int, double> father_totals(const ReducedScoreMatrix& reduced) {
  std::map<int, double> totals;
  for (std::size_t j = 0; j < reduced.cols.size(); ++j) {
    double sum = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < reduced.rows.size(); ++i) {
      const double v = reduced.at(i, j);
      if (v > 0.0) {
        sum += v;
        any = true;
      }
    }
    if (any) totals[reduced.cols[j]] = sum;
  }
  return totals;
}

bool validate_matching(const ReducedScoreMatrix& reduced, const std::map<int, double>& totals,
                       double threshold, const MatchConfig& cfg) {
  const double upper = cfg.upper_bound_inclusive ? 1.0 + kUpperSlack : 1.0;
  for (const auto& [father, total] : totals) {
    if (!(total > threshold)) return false;
    if (!(total < upper)) return false;
  }
  // Nominal case: each father feeds at most two daughters.
  for (std::size_t j = 0; j < reduced.cols.size(); ++j) {
    int daughters = 0;
    for (std::size_t i = 0; i < reduced.rows.size(); ++i)
      if (reduced.at(i, j) > 0.0) ++daughters;
    if (daughters > 2) return false;
  }
  return true;
}

namespace {

struct DriverState {
  std::vector<int> to_match;  // sorted ascending
  std::set<int> excluded;
  std::map<int, int> marks;
  std::set<int> fathers_available;
  std::vector<MatchedPair> pairs;

  void remove_to_match(int label) {
    auto it = std::lower_bound(to_match.begin(), to_match.end(), label);
    if (it != to_match.end() && *it == label) to_match.erase(it);
  }
};

void notify(const MatchObserver& observer, DriverEvent::Kind kind, double threshold,
            int anchor, const std::vector<int>& members,
            const std::map<int, double>& father_totals, const DriverState& st) {
  if (!observer) return;
  DriverEvent ev;
  ev.kind = kind;
  ev.threshold = threshold;
  ev.anchor = anchor;
  ev.members = members;
  ev.father_totals = father_totals;
  ev.to_match = st.to_match;
  ev.excluded.assign(st.excluded.begin(), st.excluded.end());
  ev.matched.reserve(st.pairs.size());
  for (const MatchedPair& p : st.pairs) ev.matched.push_back(p.daughter);
  std::sort(ev.matched.begin(), ev.matched.end());
  observer(ev);
}

}  // namespace

Correspondence track_frame_pair(const Frame& frame_t, const Frame& frame_t1,
                                const MatchConfig& cfg, const MatchObserver& observer) {
  cfg.validate();
  if (frame_t.cells.empty()) throw std::runtime_error("track_frame_pair: frame t has no cells");
  if (frame_t1.cells.empty()) throw std::runtime_error("track_frame_pair: frame t+1 has no cells");

  const FrameStatistics stats = frame_statistics(frame_t1.cells);
  const double pool_radius = std::max(stats.avg_length, 1.0);
  const double dilation_radius = std::max(stats.avg_width, 1.0);

  DriverState st;
  for (const CellRecord& c : frame_t1.cells) st.to_match.push_back(c.id);
  for (const CellRecord& c : frame_t.cells) st.fathers_available.insert(c.id);

  Correspondence corr;
  corr.frame_t = frame_t.mask.frame_index;
  corr.final_threshold = cfg.t_init;

  // One attempt of the five-stage pipeline anchored at `anchor`.
  // Returns true when a matching was accepted.
  auto attempt = [&](const CellRecord& anchor, double threshold) -> bool {
    const auto pool =
        candidate_pool(anchor, frame_t1.cells, st.to_match, pool_radius);
    const int layers = layer_bound(anchor, stats.colony_row, stats.colony_col,
                                   stats.colony_radius, cfg.l_max);
    const Neighborhood nb = build_neighborhood(anchor, pool, dilation_radius, layers);

    bool accepted = false;
    std::optional<PlacementChoice> choice;
    if (!st.fathers_available.empty()) {
      const RegionParams rp = region_parameters(nb.pixels.size(), cfg.alpha_k, cfg.alpha_l);
      const std::vector<Pixel> region =
          knn_region(frame_t.mask.width, frame_t.mask.height, nb.centroid_row, nb.centroid_col,
                     nb.covariance, rp.k);
      const CandidateSet candidates = select_candidates(region, rp.l);
      choice = best_placement(nb, candidates, frame_t, st.fathers_available);
    }

    std::map<int, double> totals_for_event;
    if (choice) {
      const auto totals = father_totals(choice->reduced);
      totals_for_event = totals;
      if (validate_matching(choice->reduced, totals, threshold, cfg)) {
        accepted = true;
        // Daughter count per father decides the relation kind.
        std::map<int, int> daughter_count;
        for (std::size_t i = 0; i < choice->reduced.rows.size(); ++i)
          for (std::size_t j = 0; j < choice->reduced.cols.size(); ++j)
            if (choice->reduced.at(i, j) > 0.0) ++daughter_count[choice->reduced.cols[j]];
        for (std::size_t i = 0; i < choice->reduced.rows.size(); ++i) {
          for (std::size_t j = 0; j < choice->reduced.cols.size(); ++j) {
            const double v = choice->reduced.at(i, j);
            if (v <= 0.0) continue;
            MatchedPair mp;
            mp.daughter = choice->reduced.rows[i];
            mp.father = choice->reduced.cols[j];
            mp.score = v;
            const int n = daughter_count[mp.father];
            mp.kind = n == 1 ? MatchKind::proliferation
                             : (n == 2 ? MatchKind::division : MatchKind::oversegmentation);
            st.pairs.push_back(mp);
            st.remove_to_match(mp.daughter);
            st.marks.erase(mp.daughter);
          }
        }
        for (int father : choice->fathers) st.fathers_available.erase(father);
      }
    }

    if (!accepted) {
      ++corr.rejected_attempts;
      for (int member : nb.member_ids) {
        // Marks accrue only for cells still awaiting a match.
        if (!std::binary_search(st.to_match.begin(), st.to_match.end(), member)) continue;
        if (++st.marks[member] >= cfg.max_marks) {
          st.remove_to_match(member);
          st.excluded.insert(member);
          st.marks.erase(member);
        }
      }
    }
    notify(observer, accepted ? DriverEvent::Kind::accepted : DriverEvent::Kind::rejected,
           threshold, anchor.id, nb.member_ids, totals_for_event, st);
    return accepted;
  };

  auto drain_main_list = [&](double threshold) {
    // Round-robin in ascending label order: a rejected anchor gets its next
    // try only after every other pending cell had a turn, because a later
    // acceptance may remove exactly the member that poisoned its neighborhood.
    while (!st.to_match.empty()) {
      const std::vector<int> round = st.to_match;
      for (int anchor_label : round) {
        if (!std::binary_search(st.to_match.begin(), st.to_match.end(), anchor_label)) continue;
        const CellRecord* anchor = frame_t1.find(anchor_label);
        if (!anchor) throw std::logic_error("track_frame_pair: to-match label missing from frame");
        attempt(*anchor, threshold);
        // Progress: an accepted attempt removes daughters; a rejected one
        // marks the whole neighborhood, so repeated failures exclude cells.
      }
    }
  };

  for (int level = 0;; ++level) {
    const double threshold = cfg.t_init - level * cfg.t_step;
    if (threshold < cfg.t_min - 1e-9) break;
    corr.final_threshold = threshold;

    drain_main_list(threshold);
    if (!st.excluded.empty()) {
      // One retry pass of the problematic cells at the current threshold.
      st.to_match.assign(st.excluded.begin(), st.excluded.end());
      st.excluded.clear();
      st.marks.clear();
      drain_main_list(threshold);
    }
    if (st.excluded.empty() && st.to_match.empty()) break;

    // Lower the threshold and give excluded cells a fresh start.
    if (!st.excluded.empty()) {
      st.to_match.insert(st.to_match.end(), st.excluded.begin(), st.excluded.end());
      std::sort(st.to_match.begin(), st.to_match.end());
      st.excluded.clear();
    }
    st.marks.clear();
  }

  corr.unmatched_daughters.assign(st.to_match.begin(), st.to_match.end());
  corr.unmatched_daughters.insert(corr.unmatched_daughters.end(), st.excluded.begin(),
                                  st.excluded.end());
  std::sort(corr.unmatched_daughters.begin(), corr.unmatched_daughters.end());

  corr.pairs = std::move(st.pairs);
  std::sort(corr.pairs.begin(), corr.pairs.end(), [](const MatchedPair& a, const MatchedPair& b) {
    return a.daughter < b.daughter;
  });
  return corr;
}

}  // namespace celltrack
