#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>
#include <vector>

#include "celltrack/search_region.hpp"
#include "test_util.hpp"

using namespace celltrack;
using testutil::Rng;

namespace {

/// Symmetric positive-definite matrix from eigenvalues and a rotation.
Mat2 spd(double lambda1, double lambda2, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 m;
  m.rr = lambda1 * s * s + lambda2 * c * c;
  m.cc = lambda1 * c * c + lambda2 * s * s;
  m.rc = (lambda1 - lambda2) * s * c;
  return m;
}

/// The k nearest grid pixels by exhaustive enumeration and a full sort.
std::vector<Pixel> brute_knn(int width, int height, double center_row, double center_col,
                             const Mat2& cov, std::size_t k) {
  std::vector<std::tuple<double, int, int>> entries;
  entries.reserve(static_cast<std::size_t>(width) * height);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      entries.emplace_back(mahalanobis_distance({r, c}, center_row, center_col, cov), r, c);
  std::sort(entries.begin(), entries.end());
  std::vector<Pixel> out;
  for (std::size_t i = 0; i < std::min(k, entries.size()); ++i)
    out.push_back({std::get<1>(entries[i]), std::get<2>(entries[i])});
  return out;
}

}  // namespace

TEST_CASE("covariance regularization nudges the diagonal only") {
  const Mat2 zero{};
  const Mat2 reg = regularize_covariance(zero);
  CHECK(reg.rr == doctest::Approx(1e-6));
  CHECK(reg.cc == doctest::Approx(1e-6));
  CHECK(reg.rc == 0.0);

  const Mat2 big = regularize_covariance({200.0, -30.0, 100.0});
  CHECK(big.rr == doctest::Approx(200.0 + 3e-4));
  CHECK(big.cc == doctest::Approx(100.0 + 3e-4));
  CHECK(big.rc == -30.0);
}

TEST_CASE("mahalanobis distance respects the covariance ellipse") {
  // Identity covariance: Euclidean distance.
  const Mat2 eye{1.0, 0.0, 1.0};
  CHECK(mahalanobis_distance({3, 4}, 0.0, 0.0, eye) == doctest::Approx(5.0).epsilon(1e-4));
  CHECK(mahalanobis_distance({0, 0}, 0.0, 0.0, eye) == doctest::Approx(0.0));

  // Elongated along rows: row offsets are cheap, column offsets expensive.
  const Mat2 tall{25.0, 0.0, 1.0};
  CHECK(mahalanobis_distance({5, 0}, 0.0, 0.0, tall) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(mahalanobis_distance({0, 5}, 0.0, 0.0, tall) == doctest::Approx(5.0).epsilon(1e-4));

  // Invariant under adding the same offset to point and center.
  const Mat2 skew = spd(9.0, 2.0, 0.6);
  const double a = mahalanobis_distance({7, -2}, 1.5, 2.5, skew);
  const double b = mahalanobis_distance({17, 8}, 11.5, 12.5, skew);
  CHECK(a == doctest::Approx(b));
}

TEST_CASE("knn region equals the exhaustive grid sort") {
  Rng rng(808);
  for (int it = 0; it < 150; ++it) {
    const int width = rng.range(1, 64);
    const int height = rng.range(1, 64);
    // Centers may sit off-grid; fractional coordinates are the common case.
    const double center_row = rng.real() * (height + 10.0) - 5.0;
    const double center_col = rng.real() * (width + 10.0) - 5.0;
    const Mat2 cov = spd(0.25 + 40.0 * rng.real(), 0.01 + 2.0 * rng.real(),
                         rng.real() * std::numbers::pi);
    const std::size_t total = static_cast<std::size_t>(width) * height;
    for (std::size_t k : {std::size_t{1}, std::size_t{7}, total / 3 + 1, total, total + 10}) {
      const auto fast = knn_region(width, height, center_row, center_col, cov, k);
      const auto slow = brute_knn(width, height, center_row, center_col, cov, k);
      REQUIRE(fast.size() == slow.size());
      CHECK(fast == slow);
    }
  }
  CHECK_THROWS_AS(knn_region(8, 8, 0, 0, Mat2{1, 0, 1}, 0), std::invalid_argument);
  CHECK_THROWS_AS(knn_region(0, 8, 0, 0, Mat2{1, 0, 1}, 4), std::invalid_argument);
}

TEST_CASE("candidate selection strides uniformly over the region") {
  std::vector<Pixel> region;
  for (int i = 0; i < 10; ++i) region.push_back({0, i});

  SUBCASE("l of 3 picks indices 0, 3, 6") {
    const CandidateSet cs = select_candidates(region, 3);
    CHECK(cs.points == std::vector<Pixel>{{0, 0}, {0, 3}, {0, 6}});
    CHECK(cs.k_used == 10);
    CHECK(cs.l_used == 3);
  }
  SUBCASE("l equal to the region walks it all") {
    const CandidateSet cs = select_candidates(region, 10);
    CHECK(cs.points == region);
  }
  SUBCASE("l beyond the region de-duplicates to the full region") {
    const CandidateSet cs = select_candidates(region, 25);
    CHECK(cs.points == region);
  }
  SUBCASE("l of 1 keeps only the nearest") {
    const CandidateSet cs = select_candidates(region, 1);
    CHECK(cs.points == std::vector<Pixel>{{0, 0}});
  }
  SUBCASE("empty region yields no candidates") {
    const CandidateSet cs = select_candidates(std::vector<Pixel>{}, 4);
    CHECK(cs.points.empty());
  }
  SUBCASE("l of zero is rejected") {
    CHECK_THROWS_AS(select_candidates(region, 0), std::invalid_argument);
  }
}

TEST_CASE("region parameters scale with the neighborhood pixel count") {
  SUBCASE("plain proportional rounding") {
    const RegionParams p = region_parameters(100, 0.25, 0.1125);
    CHECK(p.k == 25);
    CHECK(p.l == 11);  // llround(11.25)
  }
  SUBCASE("small neighborhoods floor at one") {
    const RegionParams p = region_parameters(3, 0.5, 0.03);
    CHECK(p.k == 2);  // llround(1.5) rounds half away from zero
    CHECK(p.l == 1);
    const RegionParams q = region_parameters(0, 0.5, 0.03);
    CHECK(q.k == 1);
    CHECK(q.l == 1);
  }
  SUBCASE("l never exceeds k") {
    const RegionParams p = region_parameters(50, 0.1, 0.9);
    CHECK(p.k == 5);
    CHECK(p.l == 5);
  }
  SUBCASE("non-positive coefficients are rejected") {
    CHECK_THROWS_AS(region_parameters(10, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(region_parameters(10, 0.1, -1.0), std::invalid_argument);
  }
}
