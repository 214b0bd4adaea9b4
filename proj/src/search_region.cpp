#include "celltrack/search_region.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace celltrack {

Mat2 regularize_covariance(const Mat2& cov) {
  const double eps = 1e-6 * std::max(cov.trace(), 1.0);
  return {cov.rr + eps, cov.rc, cov.cc + eps};
}

namespace {

/// Precomputed inverse of a regularized covariance, for bulk distance queries.
struct MahalanobisField {
  double center_row, center_col;
  double inv_rr, inv_rc, inv_cc;

  MahalanobisField(double cr, double cc_, const Mat2& cov) : center_row(cr), center_col(cc_) {
    const Mat2 reg = regularize_covariance(cov);
    const double det = reg.rr * reg.cc - reg.rc * reg.rc;
    if (!(det > 0.0)) throw std::runtime_error("mahalanobis: singular covariance after regularization");
    inv_rr = reg.cc / det;
    inv_rc = -reg.rc / det;
    inv_cc = reg.rr / det;
  }

  double distance(double row, double col) const {
    const double dr = row - center_row;
    const double dc = col - center_col;
    const double q = inv_rr * dr * dr + 2.0 * inv_rc * dr * dc + inv_cc * dc * dc;
    return std::sqrt(std::max(0.0, q));
  }
};

}  // namespace

double mahalanobis_distance(Pixel p, double center_row, double center_col, const Mat2& cov) {
  return MahalanobisField(center_row, center_col, cov).distance(p.row, p.col);
}

std::vector<Pixel> knn_region(int width, int height, double center_row, double center_col,
                              const Mat2& cov, std::size_t k) {
  if (k < 1) throw std::invalid_argument("knn_region: k must be >= 1");
  if (width < 1 || height < 1) throw std::invalid_argument("knn_region: empty grid");
  const std::size_t total = static_cast<std::size_t>(width) * height;
  k = std::min(k, total);

  const MahalanobisField field(center_row, center_col, cov);
  const Mat2 reg = regularize_covariance(cov);

  const int cr = static_cast<int>(std::lround(center_row));
  const int cc = static_cast<int>(std::lround(center_col));

  // The k nearest are found inside a window and the result certified exact:
  // every pixel with distance <= the k-th lies in the Mahalanobis ball of that
  // radius, whose bounding half-extents are m*sqrt(reg.rr) by m*sqrt(reg.cc).
  // If the window does not cover that ball (and is not clipped by the grid on
  // the uncovered side), it is doubled and the search repeated.
  long hr = static_cast<long>(std::ceil(4.0 * std::sqrt(reg.rr))) + 2;
  long hc = static_cast<long>(std::ceil(4.0 * std::sqrt(reg.cc))) + 2;

  using Entry = std::tuple<double, int, int>;  // (distance, row, col)
  std::vector<Entry> entries;

  for (;;) {
    const int r0 = std::max<long>(0, cr - hr);
    const int r1 = std::min<long>(height - 1, cr + hr);
    const int c0 = std::max<long>(0, cc - hc);
    const int c1 = std::min<long>(width - 1, cc + hc);

    entries.clear();
    if (r0 <= r1 && c0 <= c1) {
      entries.reserve(static_cast<std::size_t>(r1 - r0 + 1) * (c1 - c0 + 1));
      for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) entries.emplace_back(field.distance(r, c), r, c);
    }

    const bool whole_grid = (r0 == 0 && c0 == 0 && r1 == height - 1 && c1 == width - 1);
    if (entries.size() >= k || whole_grid) {
      std::sort(entries.begin(), entries.end());
      if (!whole_grid) {
        const double mk = std::get<0>(entries[k - 1]);
        const double need_r = std::abs(cr - center_row) + mk * std::sqrt(reg.rr) + 1.0;
        const double need_c = std::abs(cc - center_col) + mk * std::sqrt(reg.cc) + 1.0;
        const bool top_ok = (r0 == 0) || (static_cast<double>(hr) >= need_r);
        const bool bot_ok = (r1 == height - 1) || (static_cast<double>(hr) >= need_r);
        const bool left_ok = (c0 == 0) || (static_cast<double>(hc) >= need_c);
        const bool right_ok = (c1 == width - 1) || (static_cast<double>(hc) >= need_c);
        if (!(top_ok && bot_ok && left_ok && right_ok)) {
          hr *= 2;
          hc *= 2;
          continue;
        }
      }
      std::vector<Pixel> out;
      const std::size_t take = std::min(k, entries.size());
      out.reserve(take);
      for (std::size_t i = 0; i < take; ++i)
        out.push_back({std::get<1>(entries[i]), std::get<2>(entries[i])});
      return out;
    }
    hr *= 2;
    hc *= 2;
  }
}

CandidateSet select_candidates(std::span<const Pixel> region, std::size_t l) {
  if (l < 1) throw std::invalid_argument("select_candidates: l must be >= 1");
  CandidateSet cs;
  cs.k_used = region.size();
  cs.l_used = l;
  const std::size_t n = region.size();
  std::size_t prev = static_cast<std::size_t>(-1);
  for (std::size_t i = 0; i < l; ++i) {
    const std::size_t idx = i * n / l;  // floor(i*n/l)
    if (idx >= n) break;
    if (idx != prev) cs.points.push_back(region[idx]);
    prev = idx;
  }
  return cs;
}

RegionParams region_parameters(std::size_t neighborhood_pixels, double alpha_k, double alpha_l) {
  if (alpha_k <= 0.0 || alpha_l <= 0.0)
    throw std::invalid_argument("region_parameters: alphas must be positive");
  RegionParams p;
  const double n = static_cast<double>(neighborhood_pixels);
  p.k = static_cast<std::size_t>(std::max<long long>(1, std::llround(alpha_k * n)));
  p.l = static_cast<std::size_t>(std::max<long long>(1, std::llround(alpha_l * n)));
  p.l = std::min(p.l, p.k);
  return p;
}

}  // namespace celltrack
