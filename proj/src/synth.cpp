#include "celltrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

namespace celltrack {

void SynthConfig::validate() const {
  if (frames < 2) throw std::invalid_argument("SynthConfig: frames must be >= 2");
  if (initial_cells < 1) throw std::invalid_argument("SynthConfig: initial_cells must be >= 1");
  if (!(growth_rate >= 0.0)) throw std::invalid_argument("SynthConfig: growth_rate must be >= 0");
  if (!(cell_width > 0.0)) throw std::invalid_argument("SynthConfig: cell_width must be > 0");
  if (!(division_length >= 2.5 * cell_width))
    throw std::invalid_argument("SynthConfig: division_length must be >= 2.5 * cell_width");
  if (!(jitter >= 0.0 && jitter <= division_length / 2.0))
    throw std::invalid_argument("SynthConfig: jitter must lie in [0, division_length / 2]");
  if (relaxation_iters < 0)
    throw std::invalid_argument("SynthConfig: relaxation_iters must be >= 0");
  if (grid_width < 4 || grid_height < 4)
    throw std::invalid_argument("SynthConfig: grid must be at least 4x4");
}

namespace {

// mt19937_64 with an explicit 53-bit mantissa mapping. Distribution objects
// are avoided on purpose: their output differs across standard libraries,
// this mapping does not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + uniform01() * (b - a); }

 private:
  std::mt19937_64 gen_;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stateless per-cell noise in [0,1): a pure function of seed, cell id, and a
// salt, so a cell's traits never depend on simulation order.
double hash01(std::uint64_t seed, int id, std::uint64_t salt) {
  const std::uint64_t h =
      splitmix64(splitmix64(seed ^ (salt * 0x517cc1b727220a95ULL)) ^ static_cast<std::uint64_t>(id));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Cells divide asynchronously: each carries its own split threshold and
// growth pace, fixed at birth.
double divide_threshold(const SynthConfig& cfg, int id) {
  return cfg.division_length * (0.9 + 0.2 * hash01(cfg.seed, id, 2));
}

double growth_pace(const SynthConfig& cfg, int id) {
  return cfg.growth_rate * (0.85 + 0.3 * hash01(cfg.seed, id, 3));
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

Vec2 axis_of(const RodCell& cell) { return {std::cos(cell.orientation), std::sin(cell.orientation)}; }

// Endpoints of the capsule's central segment.
void segment_of(const RodCell& cell, Vec2& p, Vec2& q) {
  const double half = std::max(0.0, (cell.length - cell.width) / 2.0);
  const Vec2 a = axis_of(cell);
  p = {cell.cx - half * a.x, cell.cy - half * a.y};
  q = {cell.cx + half * a.x, cell.cy + half * a.y};
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

double point_segment_distance(double px, double py, Vec2 a, Vec2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = clamp01(((px - a.x) * dx + (py - a.y) * dy) / len2);
  const double ex = px - (a.x + t * dx);
  const double ey = py - (a.y + t * dy);
  return std::sqrt(ex * ex + ey * ey);
}

// Closest points between two segments (standard clamped-parameter method).
double segment_segment_distance(Vec2 p1, Vec2 q1, Vec2 p2, Vec2 q2, Vec2& c1, Vec2& c2) {
  const Vec2 d1{q1.x - p1.x, q1.y - p1.y};
  const Vec2 d2{q2.x - p2.x, q2.y - p2.y};
  const Vec2 r{p1.x - p2.x, p1.y - p2.y};
  const double a = d1.x * d1.x + d1.y * d1.y;
  const double e = d2.x * d2.x + d2.y * d2.y;
  const double f = d2.x * r.x + d2.y * r.y;
  constexpr double eps = 1e-12;

  double s = 0.0;
  double t = 0.0;
  if (a <= eps && e <= eps) {
    // both degenerate
  } else if (a <= eps) {
    t = clamp01(f / e);
  } else {
    const double c = d1.x * r.x + d1.y * r.y;
    if (e <= eps) {
      s = clamp01(-c / a);
    } else {
      const double b = d1.x * d2.x + d1.y * d2.y;
      const double denom = a * e - b * b;
      if (denom > eps) s = clamp01((b * f - c * e) / denom);
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = clamp01(-c / a);
      } else if (t > 1.0) {
        t = 1.0;
        s = clamp01((b - c) / a);
      }
    }
  }
  c1 = {p1.x + d1.x * s, p1.y + d1.y * s};
  c2 = {p2.x + d2.x * t, p2.y + d2.y * t};
  const double ex = c1.x - c2.x;
  const double ey = c1.y - c2.y;
  return std::sqrt(ex * ex + ey * ey);
}

// Gauss-Seidel push-apart: overlapping capsule pairs move a fraction of the
// penetration each, away from each other along the closest-point axis. The
// net displacement of a cell within one call is capped (friction against the
// substrate); leftover overlap carries to later frames and creeps out there.
void relax(std::vector<RodCell>& cells, int iters) {
  if (cells.size() < 2) return;
  constexpr double kMargin = 0.2;
  constexpr double kStep = 0.5;           // under-relaxation against overshoot
  constexpr double kSlideCapFactor = 0.25;  // of the cell's own width

  std::vector<std::pair<double, double>> start(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) start[i] = {cells[i].cx, cells[i].cy};

  for (int iter = 0; iter < iters; ++iter) {
    double half_extent = 0.0;
    for (const RodCell& c : cells) half_extent = std::max(half_extent, (c.length + c.width) / 2.0);
    const double bucket = 2.0 * half_extent;

    std::map<std::pair<int, int>, std::vector<std::size_t>> hash;
    auto key_of = [&](const RodCell& c) {
      return std::pair<int, int>{static_cast<int>(std::floor(c.cx / bucket)),
                                 static_cast<int>(std::floor(c.cy / bucket))};
    };
    for (std::size_t i = 0; i < cells.size(); ++i) hash[key_of(cells[i])].push_back(i);

    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto [kx, ky] = key_of(cells[i]);
      std::vector<std::size_t> candidates;
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy) {
          const auto it = hash.find({kx + dx, ky + dy});
          if (it == hash.end()) continue;
          for (std::size_t j : it->second)
            if (j > i) candidates.push_back(j);
        }
      std::sort(candidates.begin(), candidates.end());

      Vec2 p1, q1, p2, q2, c1, c2;
      segment_of(cells[i], p1, q1);
      for (std::size_t j : candidates) {
        segment_of(cells[j], p2, q2);
        const double d = segment_segment_distance(p1, q1, p2, q2, c1, c2);
        const double min_d = (cells[i].width + cells[j].width) / 2.0 + kMargin;
        if (d >= min_d) continue;
        double nx = c2.x - c1.x;
        double ny = c2.y - c1.y;
        if (d > 1e-9) {
          nx /= d;
          ny /= d;
        } else {  // coincident closest points: split along a fixed axis
          nx = 1.0;
          ny = 0.0;
        }
        const double push = kStep * (min_d - d) / 2.0;
        cells[i].cx -= nx * push;
        cells[i].cy -= ny * push;
        cells[j].cx += nx * push;
        cells[j].cy += ny * push;
        segment_of(cells[i], p1, q1);
      }
    }
  }

  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double dx = cells[i].cx - start[i].first;
    const double dy = cells[i].cy - start[i].second;
    const double slide = std::sqrt(dx * dx + dy * dy);
    const double cap = kSlideCapFactor * cells[i].width;
    if (slide > cap) {
      cells[i].cx = start[i].first + dx * cap / slide;
      cells[i].cy = start[i].second + dy * cap / slide;
    }
  }
}

std::vector<Pixel> capsule_pixels(const RodCell& cell) {
  Vec2 p, q;
  segment_of(cell, p, q);
  const double radius = cell.width / 2.0;
  const double reach = cell.length / 2.0 + 1.0;
  const int r0 = static_cast<int>(std::floor(cell.cy - reach));
  const int r1 = static_cast<int>(std::ceil(cell.cy + reach));
  const int c0 = static_cast<int>(std::floor(cell.cx - reach));
  const int c1 = static_cast<int>(std::ceil(cell.cx + reach));
  std::vector<Pixel> px;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (point_segment_distance(c, r, p, q) <= radius) px.push_back({r, c});
  return px;
}

}  // namespace

PixelSet rasterize_rod(const RodCell& cell, int grid_width, int grid_height) {
  std::vector<Pixel> px;
  for (Pixel p : capsule_pixels(cell))
    if (p.row >= 0 && p.row < grid_height && p.col >= 0 && p.col < grid_width) px.push_back(p);
  return PixelSet(std::move(px));
}

namespace {

LabelMask rasterize_frame(const std::vector<RodCell>& cells, const SynthConfig& cfg, int frame,
                          std::map<int, int>& label_of_id) {
  // Fresh labels each frame, in raster order of the centers.
  std::vector<std::size_t> order(cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const RodCell& ca = cells[a];
    const RodCell& cb = cells[b];
    if (ca.cy != cb.cy) return ca.cy < cb.cy;
    if (ca.cx != cb.cx) return ca.cx < cb.cx;
    return ca.id < cb.id;
  });

  LabelMask mask;
  mask.width = cfg.grid_width;
  mask.height = cfg.grid_height;
  mask.frame_index = frame;
  mask.labels.assign(static_cast<std::size_t>(cfg.grid_width) * cfg.grid_height, 0);

  label_of_id.clear();
  auto frame_error = [&](const std::string& what) {
    return std::runtime_error("frame " + std::to_string(frame) + ": " + what);
  };

  std::vector<const RodCell*> owner_of_label(cells.size() + 1, nullptr);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const RodCell& cell = cells[order[rank]];
    const int label = static_cast<int>(rank) + 1;
    label_of_id[cell.id] = label;
    owner_of_label[static_cast<std::size_t>(label)] = &cell;

    for (Pixel p : capsule_pixels(cell)) {
      if (p.row < 0 || p.row >= cfg.grid_height || p.col < 0 || p.col >= cfg.grid_width)
        throw frame_error("colony exceeds the grid (cell at " + std::to_string(cell.cx) + "," +
                          std::to_string(cell.cy) + ")");
      int32_t& slot = mask.labels[static_cast<std::size_t>(p.row) * cfg.grid_width + p.col];
      if (slot == 0) {
        slot = label;
        continue;
      }
      // Contested pixel: the nearer center keeps it; ties go to the lower label.
      const RodCell& held = *owner_of_label[static_cast<std::size_t>(slot)];
      const double dh = (p.col - held.cx) * (p.col - held.cx) + (p.row - held.cy) * (p.row - held.cy);
      const double dn = (p.col - cell.cx) * (p.col - cell.cx) + (p.row - cell.cy) * (p.row - cell.cy);
      if (dn < dh) slot = label;
    }
  }

  std::vector<int> px_count(cells.size() + 1, 0);
  for (int32_t v : mask.labels)
    if (v > 0) ++px_count[static_cast<std::size_t>(v)];
  for (std::size_t label = 1; label <= cells.size(); ++label)
    if (px_count[label] == 0) throw frame_error("cell lost all pixels to its neighbors");
  return mask;
}

std::vector<RodCell> initial_cells(const SynthConfig& cfg, Rng& rng) {
  const double cx = cfg.grid_width / 2.0;
  const double cy = cfg.grid_height / 2.0;
  auto initial_length = [&](int id) {
    return cfg.division_length * (0.55 + 0.35 * hash01(cfg.seed, id, 1));
  };
  std::vector<RodCell> cells;
  if (cfg.initial_cells == 1) {
    cells.push_back({1, cx, cy, rng.uniform(-std::numbers::pi / 2, std::numbers::pi / 2),
                     initial_length(1), cfg.cell_width, -1});
    return cells;
  }
  const double ring = std::min(cfg.grid_width, cfg.grid_height) / 4.0;
  for (int i = 0; i < cfg.initial_cells; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / cfg.initial_cells;
    cells.push_back({i + 1, cx + ring * std::cos(angle), cy + ring * std::sin(angle),
                     rng.uniform(-std::numbers::pi / 2, std::numbers::pi / 2), initial_length(i + 1),
                     cfg.cell_width, -1});
  }
  return cells;
}

}  // namespace

SynthMovie generate_movie(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  std::vector<RodCell> cells = initial_cells(cfg, rng);
  int next_id = cfg.initial_cells + 1;

  relax(cells, cfg.relaxation_iters);

  SynthMovie movie;
  std::map<int, int> label_prev;
  movie.masks.push_back(rasterize_frame(cells, cfg, 0, label_prev));
  const std::vector<CellRecord> frame0_records = extract_cells(movie.masks.back());
  movie.forest = init_forest(frame0_records);

  std::vector<int> frame0_labels;
  for (const auto& [id, label] : label_prev) frame0_labels.push_back(label);

  for (int frame = 1; frame < cfg.frames; ++frame) {
    // Nutrient-limited slowdown: once the colony is crowded, per-cell growth
    // scales with 1/sqrt(count), which keeps the colony boundary advancing at
    // a constant speed instead of accelerating.
    const double crowd =
        cfg.crowding_onset > 0 && cells.size() > static_cast<std::size_t>(cfg.crowding_onset)
            ? std::sqrt(static_cast<double>(cfg.crowding_onset) /
                        static_cast<double>(cells.size()))
            : 1.0;
    // Lag phase: fresh colonies ramp up to full growth speed over ~lag_tau frames.
    const double lag = cfg.lag_tau > 0 ? 1.0 - std::exp(-frame / cfg.lag_tau) : 1.0;
    for (RodCell& cell : cells) cell.length += growth_pace(cfg, cell.id) * crowd * lag;

    std::vector<RodCell> next;
    std::set<int> born;
    next.reserve(cells.size());
    for (const RodCell& cell : cells) {
      if (cell.length <= divide_threshold(cfg, cell.id)) {
        next.push_back(cell);
        continue;
      }
      const double kick = rng.uniform(0.0, 0.03);
      const Vec2 a = axis_of(cell);
      // length is the full end-to-end extent, so halving it packs the two
      // daughters exactly into the father's envelope: no neighbor is shoved.
      const double offset = cell.length / 4.0;
      RodCell d1{next_id++, cell.cx - offset * a.x, cell.cy - offset * a.y,
                 cell.orientation + kick, cell.length / 2.0, cell.width, cell.id};
      RodCell d2{next_id++, cell.cx + offset * a.x, cell.cy + offset * a.y,
                 cell.orientation - kick, cell.length / 2.0, cell.width, cell.id};
      born.insert(d1.id);
      born.insert(d2.id);
      next.push_back(d1);
      next.push_back(d2);
    }
    cells = std::move(next);

    for (RodCell& cell : cells) {
      cell.cx += rng.uniform(-cfg.jitter, cfg.jitter);
      cell.cy += rng.uniform(-cfg.jitter, cfg.jitter);
    }

    relax(cells, cfg.relaxation_iters);

    std::map<int, int> label_now;
    movie.masks.push_back(rasterize_frame(cells, cfg, frame, label_now));

    Correspondence corr;
    corr.frame_t = frame - 1;
    std::map<int, int> daughters_of_father;
    for (const RodCell& cell : cells) {
      const int father_id = born.count(cell.id) ? cell.parent_id : cell.id;
      ++daughters_of_father[father_id];
    }
    for (const RodCell& cell : cells) {
      const int father_id = born.count(cell.id) ? cell.parent_id : cell.id;
      MatchedPair pair;
      pair.daughter = label_now.at(cell.id);
      pair.father = label_prev.at(father_id);
      pair.score = 1.0;
      pair.kind = daughters_of_father[father_id] == 2 ? MatchKind::division
                                                      : MatchKind::proliferation;
      corr.pairs.push_back(pair);
    }
    std::sort(corr.pairs.begin(), corr.pairs.end(),
              [](const MatchedPair& a, const MatchedPair& b) { return a.daughter < b.daughter; });
    corr.final_threshold = 1.0;

    const std::vector<CellRecord> frame_records = extract_cells(movie.masks.back());
    append_correspondence(movie.forest, corr, frame_records);
    movie.truth.pairs.push_back(std::move(corr));
    label_prev = std::move(label_now);
  }

  movie.truth.tracks = tracks_from_pairs(movie.truth.pairs, frame0_labels);
  return movie;
}

}  // namespace celltrack
