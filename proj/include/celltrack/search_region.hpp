#ifndef CELLTRACK_SEARCH_REGION_HPP
#define CELLTRACK_SEARCH_REGION_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "celltrack/geometry.hpp"

namespace celltrack {

/// Candidate centroid placements in the previous frame.
struct CandidateSet {
  std::vector<Pixel> points;  // distinct, in-bounds, in region order
  std::size_t k_used = 0;     // size of the kNN region sampled from
  std::size_t l_used = 0;     // requested sample size
};

/// Sigma + eps*I with eps = 1e-6 * max(trace(Sigma), 1). Keeps degenerate
/// (collinear) neighborhoods invertible without visibly distorting elongation.
Mat2 regularize_covariance(const Mat2& cov);

/// sqrt((p-center)^T Sigma_reg^-1 (p-center)), regularization applied inside.
double mahalanobis_distance(Pixel p, double center_row, double center_col, const Mat2& cov);

/// The k grid pixels with smallest Mahalanobis distance to the (real-valued)
/// center, sorted by (distance, row, col). k beyond the grid returns all pixels.
std::vector<Pixel> knn_region(int width, int height, double center_row, double center_col,
                              const Mat2& cov, std::size_t k);

/// Deterministic uniform stride sample over the distance-sorted region:
/// region[floor(i*|region|/l)] for i = 0..l-1, de-duplicated preserving order.
CandidateSet select_candidates(std::span<const Pixel> region, std::size_t l);

struct RegionParams {
  std::size_t k = 1;
  std::size_t l = 1;
};

/// k and l proportional to the neighborhood pixel count, each at least 1,
/// with l clamped to k.
RegionParams region_parameters(std::size_t neighborhood_pixels, double alpha_k, double alpha_l);

}  // namespace celltrack

#endif
