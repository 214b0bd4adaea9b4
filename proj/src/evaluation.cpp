#include "celltrack/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace celltrack {

namespace {

std::set<std::pair<int, int>> pair_set(const Correspondence& corr) {
  std::set<std::pair<int, int>> out;
  for (const MatchedPair& p : corr.pairs) out.emplace(p.daughter, p.father);
  return out;
}

void require_aligned(const std::vector<Correspondence>& predicted,
                     const std::vector<Correspondence>& truth) {
  if (predicted.size() != truth.size())
    throw std::runtime_error("evaluation: prediction has " + std::to_string(predicted.size()) +
                             " frame pairs, truth has " + std::to_string(truth.size()));
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (predicted[i].frame_t != truth[i].frame_t)
      throw std::runtime_error("evaluation: frame pair mismatch at index " + std::to_string(i) +
                               " (" + std::to_string(predicted[i].frame_t) + " vs " +
                               std::to_string(truth[i].frame_t) + ")");
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", fraction * 100.0);
  return buf;
}

}  // namespace

EvalReport report_from_counts(long tp, long fat, long tdf, long gt) {
  if (gt <= 0) throw std::runtime_error("report_from_counts: gt must be positive");
  EvalReport r;
  r.tp = tp;
  r.fat = fat;
  r.tdf = tdf;
  r.gt = gt;
  r.tdr = static_cast<double>(tp) / static_cast<double>(gt);
  r.acc = r.tdr;
  r.er = static_cast<double>(fat + tdf) / static_cast<double>(gt);
  return r;
}

std::vector<TrackPath> tracks_from_pairs(const std::vector<Correspondence>& pairs,
                                         const std::vector<int>& frame0_labels) {
  std::vector<TrackPath> tracks;
  std::map<int, std::size_t> active;  // current-frame label -> track index

  auto start_track = [&](int frame, int label) {
    tracks.push_back({{frame, label}});
    return tracks.size() - 1;
  };

  std::vector<int> seeds = frame0_labels;
  std::sort(seeds.begin(), seeds.end());
  for (int label : seeds) active[label] = start_track(pairs.empty() ? 0 : pairs.front().frame_t, label);

  for (const Correspondence& corr : pairs) {
    std::map<int, std::vector<int>> daughters_of;
    for (const MatchedPair& p : corr.pairs) daughters_of[p.father].push_back(p.daughter);

    std::map<int, std::size_t> next_active;
    for (auto& [father, daughters] : daughters_of) {
      std::sort(daughters.begin(), daughters.end());
      auto it = active.find(father);
      const std::size_t father_track =
          it != active.end() ? it->second : start_track(corr.frame_t, father);
      if (daughters.size() == 1) {
        tracks[father_track].emplace_back(corr.frame_t + 1, daughters[0]);
        next_active[daughters[0]] = father_track;
      } else {
        for (int d : daughters) next_active[d] = start_track(corr.frame_t + 1, d);
      }
    }
    for (int d : corr.unmatched_daughters) next_active[d] = start_track(corr.frame_t + 1, d);
    active = std::move(next_active);
  }
  return tracks;
}

EvalReport frame_tdr(const std::vector<Correspondence>& predicted,
                     const std::vector<Correspondence>& truth) {
  require_aligned(predicted, truth);
  if (truth.empty()) throw std::runtime_error("frame_tdr: no frame pairs");
  long tp = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (pair_set(predicted[i]) == pair_set(truth[i])) ++tp;
  EvalReport r = report_from_counts(tp, 0, 0, static_cast<long>(truth.size()));
  r.er = 0.0;
  r.acc = 0.0;
  r.histogram = error_histogram(predicted, truth);
  return r;
}

EvalReport track_er(const std::vector<TrackPath>& predicted, const std::vector<TrackPath>& truth,
                    std::pair<int, int> window) {
  if (window.first > window.second) throw std::runtime_error("track_er: empty window");
  auto truncate = [&](const std::vector<TrackPath>& tracks) {
    std::set<TrackPath> out;
    for (const TrackPath& t : tracks) {
      TrackPath cut;
      for (const auto& step : t)
        if (step.first >= window.first && step.first <= window.second) cut.push_back(step);
      if (!cut.empty()) out.insert(std::move(cut));
    }
    return out;
  };

  const std::set<TrackPath> pred = truncate(predicted);
  const std::set<TrackPath> real = truncate(truth);
  if (real.empty()) throw std::runtime_error("track_er: no truth tracks in window");

  long fat = 0;
  long tdf = 0;
  for (const TrackPath& t : pred)
    if (!real.count(t)) ++fat;
  for (const TrackPath& t : real)
    if (!pred.count(t)) ++tdf;

  EvalReport r = report_from_counts(static_cast<long>(real.size()) - tdf, fat, tdf,
                                    static_cast<long>(real.size()));
  r.tdr = 0.0;
  r.acc = 0.0;
  return r;
}

EvalReport match_accuracy(const Correspondence& predicted, const Correspondence& truth) {
  const auto pred = pair_set(predicted);
  const auto real = pair_set(truth);
  if (real.empty()) throw std::runtime_error("match_accuracy: truth has no pairs");
  long tp = 0;
  for (const auto& p : pred)
    if (real.count(p)) ++tp;
  EvalReport r = report_from_counts(tp, 0, 0, static_cast<long>(real.size()));
  r.tdr = 0.0;
  r.er = 0.0;
  return r;
}

std::vector<std::pair<int, int>> error_histogram(const std::vector<Correspondence>& predicted,
                                                 const std::vector<Correspondence>& truth) {
  require_aligned(predicted, truth);
  std::vector<std::pair<int, int>> hist;
  hist.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto pred = pair_set(predicted[i]);
    const auto real = pair_set(truth[i]);
    int errors = 0;
    for (const auto& p : pred)
      if (!real.count(p)) ++errors;
    for (const auto& p : real)
      if (!pred.count(p)) ++errors;
    hist.emplace_back(truth[i].frame_t, errors);
  }
  return hist;
}

std::string report_text(const EvalReport& report) {
  std::ostringstream out;
  out << "tp = " << report.tp << '\n'
      << "fat = " << report.fat << '\n'
      << "tdf = " << report.tdf << '\n'
      << "gt = " << report.gt << '\n'
      << "tdr = " << percent(report.tdr) << '\n'
      << "er = " << percent(report.er) << '\n'
      << "acc = " << percent(report.acc) << '\n';
  return out.str();
}

std::string histogram_csv(const std::vector<std::pair<int, int>>& histogram) {
  std::ostringstream out;
  out << "frame_t,errors\n";
  for (const auto& [frame_t, errors] : histogram) out << frame_t << ',' << errors << '\n';
  return out.str();
}

}  // namespace celltrack
