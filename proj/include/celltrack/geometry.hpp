#ifndef CELLTRACK_GEOMETRY_HPP
#define CELLTRACK_GEOMETRY_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace celltrack {

/// Integer pixel coordinate. Rows grow downward, columns to the right.
struct Pixel {
  int row = 0;
  int col = 0;
  auto operator<=>(const Pixel&) const = default;
};

/// Symmetric 2x2 matrix over (row, col) coordinates.
struct Mat2 {
  double rr = 0.0;
  double rc = 0.0;
  double cc = 0.0;
  double trace() const { return rr + cc; }
};

/// Sorted, duplicate-free set of pixels. Coordinates may be negative
/// (translated sets are clipped only when evaluated against a grid).
class PixelSet {
public:
  PixelSet() = default;
  explicit PixelSet(std::vector<Pixel> pts);

  /// Adopts an already sorted, duplicate-free vector.
  static PixelSet from_sorted(std::vector<Pixel> pts);

  const std::vector<Pixel>& points() const { return pts_; }
  std::size_t size() const { return pts_.size(); }
  bool empty() const { return pts_.empty(); }
  bool contains(Pixel p) const;

  PixelSet translated(int drow, int dcol) const;

  bool operator==(const PixelSet&) const = default;

private:
  std::vector<Pixel> pts_;
};

/// True iff the two sets share at least one pixel.
bool touches(const PixelSet& a, const PixelSet& b);

/// True iff some pixel of `a` lies within the discrete disk of the given
/// radius around some pixel of `b`. Equivalent to, but much cheaper than,
/// `touches(dilate(a, radius), b)`.
bool touches_within(const PixelSet& a, const PixelSet& b, double radius);

std::size_t intersection_size(const PixelSet& a, const PixelSet& b);

/// Minkowski sum with the discrete disk {(dr,dc) : dr^2+dc^2 <= rho^2},
/// rho = radius rounded half-up to an integer. Radius 0 is the identity.
PixelSet dilate(const PixelSet& s, double radius);

/// Offsets of the discrete disk of the given (already integer) radius.
std::vector<Pixel> disk_offsets(int rho);

double pixel_mean_row(const PixelSet& s);
double pixel_mean_col(const PixelSet& s);

/// Population covariance of the pixel coordinates.
Mat2 pixel_covariance(const PixelSet& s);

/// Per-frame label grid. 0 = background, k > 0 = pixels of cell k.
struct LabelMask {
  int width = 0;
  int height = 0;
  int frame_index = 0;
  std::vector<std::int32_t> labels;  // row-major, height*width entries

  std::int32_t at(int row, int col) const { return labels[static_cast<std::size_t>(row) * width + col]; }
  std::int32_t& at(int row, int col) { return labels[static_cast<std::size_t>(row) * width + col]; }
  bool in_bounds(int row, int col) const { return row >= 0 && row < height && col >= 0 && col < width; }

  bool operator==(const LabelMask&) const = default;
};

/// One segmented cell with its geometric descriptors.
struct CellRecord {
  int id = 0;
  PixelSet pixels;
  double centroid_row = 0.0;
  double centroid_col = 0.0;
  std::size_t area = 0;
  double length = 0.0;       // 4*sqrt(lambda1)
  double width = 0.0;        // 4*sqrt(lambda2)
  double orientation = 0.0;  // radians in [-pi/2, pi/2)
};

struct PrincipalAxes {
  double lambda1 = 0.0;  // major eigenvalue of the coordinate covariance
  double lambda2 = 0.0;
  double orientation = 0.0;
};

/// Eigen-decomposition of the 2x2 pixel-coordinate covariance.
/// Orientation 0 means elongation along columns; a single pixel gives (0,0,0).
PrincipalAxes principal_axes(const PixelSet& pixels);

/// One CellRecord per distinct nonzero label, ascending by label.
std::vector<CellRecord> extract_cells(const LabelMask& mask);

struct FrameStatistics {
  double avg_length = 0.0;
  double avg_width = 0.0;
  double colony_row = 0.0;  // area-weighted mean of cell centroids
  double colony_col = 0.0;
  double colony_radius = 0.0;  // max centroid distance from the colony centroid
};

FrameStatistics frame_statistics(std::span<const CellRecord> cells);

enum class MaskFormat { text, binary };

/// Parses either supported format, detected from the leading bytes.
LabelMask load_label_mask(const std::filesystem::path& path);
void save_label_mask(const LabelMask& mask, const std::filesystem::path& path, MaskFormat format);

/// A mask plus its extracted cells, as consumed by the tracking stages.
struct Frame {
  LabelMask mask;
  std::vector<CellRecord> cells;

  static Frame from_mask(LabelMask mask);
  const CellRecord* find(int label) const;
};

}  // namespace celltrack

#endif
