#include "celltrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace celltrack {

PixelSet::PixelSet(std::vector<Pixel> pts) : pts_(std::move(pts)) {
  std::sort(pts_.begin(), pts_.end());
  pts_.erase(std::unique(pts_.begin(), pts_.end()), pts_.end());
}

PixelSet PixelSet::from_sorted(std::vector<Pixel> pts) {
  PixelSet s;
  s.pts_ = std::move(pts);
  return s;
}

bool PixelSet::contains(Pixel p) const {
  return std::binary_search(pts_.begin(), pts_.end(), p);
}

PixelSet PixelSet::translated(int drow, int dcol) const {
  std::vector<Pixel> out;
  out.reserve(pts_.size());
  for (Pixel p : pts_) out.push_back({p.row + drow, p.col + dcol});
  return from_sorted(std::move(out));  // order-preserving shift keeps sortedness
}

bool touches(const PixelSet& a, const PixelSet& b) {
  auto ia = a.points().begin(), ea = a.points().end();
  auto ib = b.points().begin(), eb = b.points().end();
  while (ia != ea && ib != eb) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      return true;
    }
  }
  return false;
}

std::size_t intersection_size(const PixelSet& a, const PixelSet& b) {
  std::size_t n = 0;
  auto ia = a.points().begin(), ea = a.points().end();
  auto ib = b.points().begin(), eb = b.points().end();
  while (ia != ea && ib != eb) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++n;
      ++ia;
      ++ib;
    }
  }
  return n;
}

bool touches_within(const PixelSet& a, const PixelSet& b, double radius) {
  if (radius < 0.0) throw std::invalid_argument("touches_within: negative radius");
  if (a.empty() || b.empty()) return false;
  const int rho = static_cast<int>(std::floor(radius + 0.5));
  const long r2 = static_cast<long>(rho) * rho;

  // Iterate the smaller set against row windows of the larger one.
  const PixelSet& small = a.size() <= b.size() ? a : b;
  const PixelSet& big = a.size() <= b.size() ? b : a;
  const auto& bp = big.points();

  // Bounding-box reject. Rows are bounded by the sorted ends; columns scan.
  if (small.points().front().row > bp.back().row + rho ||
      small.points().back().row < bp.front().row - rho)
    return false;
  int s_min_c = small.points().front().col, s_max_c = s_min_c;
  for (Pixel p : small.points()) {
    s_min_c = std::min(s_min_c, p.col);
    s_max_c = std::max(s_max_c, p.col);
  }
  int b_min_c = bp.front().col, b_max_c = b_min_c;
  for (Pixel p : bp) {
    b_min_c = std::min(b_min_c, p.col);
    b_max_c = std::max(b_max_c, p.col);
  }
  if (s_min_c > b_max_c + rho || s_max_c < b_min_c - rho) return false;

  for (Pixel pa : small.points()) {
    auto it = std::lower_bound(bp.begin(), bp.end(),
                               Pixel{pa.row - rho, std::numeric_limits<int>::min()});
    for (; it != bp.end() && it->row <= pa.row + rho; ++it) {
      const long dr = it->row - pa.row;
      const long dc = it->col - pa.col;
      if (dr * dr + dc * dc <= r2) return true;
    }
  }
  return false;
}

std::vector<Pixel> disk_offsets(int rho) {
  std::vector<Pixel> offs;
  const long r2 = static_cast<long>(rho) * rho;
  for (int dr = -rho; dr <= rho; ++dr)
    for (int dc = -rho; dc <= rho; ++dc)
      if (static_cast<long>(dr) * dr + static_cast<long>(dc) * dc <= r2) offs.push_back({dr, dc});
  return offs;
}

PixelSet dilate(const PixelSet& s, double radius) {
  if (radius < 0.0) throw std::invalid_argument("dilate: negative radius");
  const int rho = static_cast<int>(std::floor(radius + 0.5));
  if (rho == 0) return s;
  const std::vector<Pixel> offs = disk_offsets(rho);
  std::vector<Pixel> out;
  out.reserve(s.size() * offs.size());
  for (Pixel p : s.points())
    for (Pixel d : offs) out.push_back({p.row + d.row, p.col + d.col});
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return PixelSet::from_sorted(std::move(out));
}

double pixel_mean_row(const PixelSet& s) {
  double acc = 0.0;
  for (Pixel p : s.points()) acc += p.row;
  return acc / static_cast<double>(s.size());
}

double pixel_mean_col(const PixelSet& s) {
  double acc = 0.0;
  for (Pixel p : s.points()) acc += p.col;
  return acc / static_cast<double>(s.size());
}

Mat2 pixel_covariance(const PixelSet& s) {
  const double mr = pixel_mean_row(s);
  const double mc = pixel_mean_col(s);
  Mat2 m;
  for (Pixel p : s.points()) {
    const double dr = p.row - mr;
    const double dc = p.col - mc;
    m.rr += dr * dr;
    m.rc += dr * dc;
    m.cc += dc * dc;
  }
  const double n = static_cast<double>(s.size());
  m.rr /= n;
  m.rc /= n;
  m.cc /= n;
  return m;
}

PrincipalAxes principal_axes(const PixelSet& pixels) {
  if (pixels.empty()) throw std::invalid_argument("principal_axes: empty pixel set");
  const Mat2 cov = pixel_covariance(pixels);
  const double tr = cov.rr + cov.cc;
  const double diff = cov.rr - cov.cc;
  const double disc = std::sqrt(diff * diff + 4.0 * cov.rc * cov.rc);
  PrincipalAxes ax;
  ax.lambda1 = 0.5 * (tr + disc);
  ax.lambda2 = std::max(0.0, 0.5 * (tr - disc));

  // Major eigenvector: (rc, lambda1 - rr) in (row, col) components, with a
  // fallback when that degenerates (rc == 0 and the major axis runs along rows).
  double vr = cov.rc;
  double vc = ax.lambda1 - cov.rr;
  if (std::abs(vr) < 1e-300 && std::abs(vc) < 1e-300) {
    vr = ax.lambda1 - cov.cc;
    vc = cov.rc;
  }
  if (std::abs(vr) < 1e-300 && std::abs(vc) < 1e-300) {
    ax.orientation = 0.0;  // isotropic (includes single pixel)
    return ax;
  }
  double theta = std::atan2(vr, vc);
  const double half_pi = std::asin(1.0);
  if (theta < -half_pi) theta += 2.0 * half_pi;
  if (theta >= half_pi) theta -= 2.0 * half_pi;
  ax.orientation = theta;
  return ax;
}

std::vector<CellRecord> extract_cells(const LabelMask& mask) {
  std::map<int, std::vector<Pixel>> by_label;
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c) {
      const std::int32_t v = mask.at(r, c);
      if (v > 0) by_label[v].push_back({r, c});
    }
  std::vector<CellRecord> cells;
  cells.reserve(by_label.size());
  for (auto& [label, pts] : by_label) {
    CellRecord cell;
    cell.id = label;
    cell.pixels = PixelSet::from_sorted(std::move(pts));  // row-major scan is sorted
    cell.area = cell.pixels.size();
    cell.centroid_row = pixel_mean_row(cell.pixels);
    cell.centroid_col = pixel_mean_col(cell.pixels);
    const PrincipalAxes ax = principal_axes(cell.pixels);
    cell.length = 4.0 * std::sqrt(ax.lambda1);
    cell.width = 4.0 * std::sqrt(ax.lambda2);
    cell.orientation = ax.orientation;
    cells.push_back(std::move(cell));
  }
  return cells;
}

FrameStatistics frame_statistics(std::span<const CellRecord> cells) {
  if (cells.empty()) throw std::runtime_error("frame_statistics: no cells");
  FrameStatistics st;
  double total_area = 0.0;
  for (const CellRecord& c : cells) {
    st.avg_length += c.length;
    st.avg_width += c.width;
    const double a = static_cast<double>(c.area);
    st.colony_row += a * c.centroid_row;
    st.colony_col += a * c.centroid_col;
    total_area += a;
  }
  const double n = static_cast<double>(cells.size());
  st.avg_length /= n;
  st.avg_width /= n;
  st.colony_row /= total_area;
  st.colony_col /= total_area;
  for (const CellRecord& c : cells) {
    const double dr = c.centroid_row - st.colony_row;
    const double dc = c.centroid_col - st.colony_col;
    st.colony_radius = std::max(st.colony_radius, std::hypot(dr, dc));
  }
  return st;
}

namespace {

constexpr char kTextMagic[] = "P-LABELS";
constexpr char kBinaryMagic[4] = {'C', 'T', 'R', 'K'};

[[noreturn]] void parse_fail(const std::filesystem::path& path, int line, const std::string& what) {
  std::ostringstream os;
  os << path.string() << ":" << line << ": " << what;
  throw std::runtime_error(os.str());
}

LabelMask load_text_mask(const std::filesystem::path& path, std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) parse_fail(path, 1, "missing header line");
  std::istringstream hs(header);
  std::string magic;
  int width = 0, height = 0;
  if (!(hs >> magic >> width >> height) || magic != kTextMagic)
    parse_fail(path, 1, "expected \"P-LABELS <width> <height>\"");
  if (width < 1 || height < 1) parse_fail(path, 1, "dimensions must be >= 1");

  LabelMask mask;
  mask.width = width;
  mask.height = height;
  mask.labels.resize(static_cast<std::size_t>(width) * height);
  for (int r = 0; r < height; ++r) {
    std::string line;
    if (!std::getline(in, line)) parse_fail(path, r + 2, "unexpected end of file");
    std::istringstream ls(line);
    for (int c = 0; c < width; ++c) {
      long v = 0;
      if (!(ls >> v)) parse_fail(path, r + 2, "expected " + std::to_string(width) + " integers");
      if (v < 0) parse_fail(path, r + 2, "negative label " + std::to_string(v));
      mask.at(r, c) = static_cast<std::int32_t>(v);
    }
    long extra = 0;
    if (ls >> extra) parse_fail(path, r + 2, "trailing values beyond width " + std::to_string(width));
  }
  return mask;
}

std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

LabelMask load_binary_mask(const std::filesystem::path& path, std::istream& in) {
  unsigned char header[8];
  in.read(reinterpret_cast<char*>(header), 8);
  if (in.gcount() != 8 || std::memcmp(header, kBinaryMagic, 4) != 0)
    parse_fail(path, 0, "bad binary header (offset 0)");
  LabelMask mask;
  mask.width = read_u16le(header + 4);
  mask.height = read_u16le(header + 6);
  if (mask.width < 1 || mask.height < 1) parse_fail(path, 0, "dimensions must be >= 1 (offset 4)");
  const std::size_t n = static_cast<std::size_t>(mask.width) * mask.height;
  std::vector<unsigned char> buf(n * 2);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size())
    parse_fail(path, 0, "truncated grid (offset " + std::to_string(8 + in.gcount()) + ")");
  mask.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) mask.labels[i] = read_u16le(buf.data() + 2 * i);
  return mask;
}

}  // namespace

LabelMask load_label_mask(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open mask file: " + path.string());
  char probe[8] = {};
  in.read(probe, 8);
  in.clear();
  in.seekg(0);
  if (std::memcmp(probe, kBinaryMagic, 4) == 0) return load_binary_mask(path, in);
  if (std::memcmp(probe, kTextMagic, 8) == 0) return load_text_mask(path, in);
  parse_fail(path, 1, "unrecognized mask format (expected P-LABELS or CTRK magic)");
}

void save_label_mask(const LabelMask& mask, const std::filesystem::path& path, MaskFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write mask file: " + path.string());
  if (format == MaskFormat::text) {
    out << kTextMagic << ' ' << mask.width << ' ' << mask.height << '\n';
    for (int r = 0; r < mask.height; ++r) {
      for (int c = 0; c < mask.width; ++c) {
        if (c) out << ' ';
        out << mask.at(r, c);
      }
      out << '\n';
    }
  } else {
    if (mask.width > 65535 || mask.height > 65535)
      throw std::runtime_error("binary mask format limits dimensions to 65535");
    for (std::int32_t v : mask.labels)
      if (v < 0 || v > 65535)
        throw std::runtime_error("binary mask format limits labels to [0, 65535], got " + std::to_string(v));
    unsigned char header[8];
    std::memcpy(header, kBinaryMagic, 4);
    header[4] = static_cast<unsigned char>(mask.width & 0xff);
    header[5] = static_cast<unsigned char>((mask.width >> 8) & 0xff);
    header[6] = static_cast<unsigned char>(mask.height & 0xff);
    header[7] = static_cast<unsigned char>((mask.height >> 8) & 0xff);
    out.write(reinterpret_cast<const char*>(header), 8);
    std::vector<unsigned char> buf;
    buf.reserve(mask.labels.size() * 2);
    for (std::int32_t v : mask.labels) {
      buf.push_back(static_cast<unsigned char>(v & 0xff));
      buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Frame Frame::from_mask(LabelMask mask) {
  Frame f;
  f.cells = extract_cells(mask);
  f.mask = std::move(mask);
  return f;
}

const CellRecord* Frame::find(int label) const {
  auto it = std::lower_bound(cells.begin(), cells.end(), label,
                             [](const CellRecord& c, int l) { return c.id < l; });
  if (it != cells.end() && it->id == label) return &*it;
  return nullptr;
}

}  // namespace celltrack
