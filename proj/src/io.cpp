#include "celltrack/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace celltrack {

std::string double_to_string(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double double_from_string(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw std::runtime_error("bad real number: '" + s + "'");
  return v;
}

namespace {

int int_from_string(const std::string& s) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error("bad integer: '" + s + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

constexpr const char* kPairHeader = "frame_t,daughter_label,father_label,kind,score";

}  // namespace

namespace {

void append_rows(std::ostringstream& out, const Correspondence& corr) {
  for (const MatchedPair& p : corr.pairs)
    out << corr.frame_t << ',' << p.daughter << ',' << p.father << ',' << to_string(p.kind) << ','
        << double_to_string(p.score) << '\n';
  for (int d : corr.unmatched_daughters)
    out << corr.frame_t << ',' << d << ",-1,unmatched,0\n";
}

}  // namespace

std::string correspondence_csv(const Correspondence& corr) {
  std::ostringstream out;
  out << kPairHeader << '\n';
  append_rows(out, corr);
  return out.str();
}

std::string correspondences_csv(const std::vector<Correspondence>& list) {
  std::ostringstream out;
  out << kPairHeader << '\n';
  for (const Correspondence& corr : list) append_rows(out, corr);
  return out.str();
}

std::vector<Correspondence> parse_correspondence_csv(std::istream& in, const std::string& source) {
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) -> std::runtime_error {
    return std::runtime_error(source + ":" + std::to_string(line_no) + ": " + what);
  };

  if (!std::getline(in, line)) throw fail("empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPairHeader) throw fail("expected header '" + std::string(kPairHeader) + "'");

  std::map<int, Correspondence> by_frame;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) throw fail("expected 5 fields, got " + std::to_string(fields.size()));
    try {
      const int frame_t = int_from_string(fields[0]);
      const int daughter = int_from_string(fields[1]);
      const int father = int_from_string(fields[2]);
      const MatchKind kind = match_kind_from_string(fields[3]);
      const double score = double_from_string(fields[4]);
      Correspondence& corr = by_frame[frame_t];
      corr.frame_t = frame_t;
      if (father == -1) {
        if (kind != MatchKind::unmatched) throw std::runtime_error("father -1 requires kind unmatched");
        corr.unmatched_daughters.push_back(daughter);
      } else {
        if (kind == MatchKind::unmatched) throw std::runtime_error("kind unmatched requires father -1");
        corr.pairs.push_back({daughter, father, score, kind});
      }
    } catch (const std::runtime_error& e) {
      throw fail(e.what());
    }
  }

  std::vector<Correspondence> out;
  out.reserve(by_frame.size());
  for (auto& [frame_t, corr] : by_frame) {
    std::sort(corr.pairs.begin(), corr.pairs.end(),
              [](const MatchedPair& a, const MatchedPair& b) { return a.daughter < b.daughter; });
    std::sort(corr.unmatched_daughters.begin(), corr.unmatched_daughters.end());
    out.push_back(std::move(corr));
  }
  return out;
}

void save_correspondence(const std::filesystem::path& path, const Correspondence& corr) {
  write_text_file(path, correspondence_csv(corr));
}

std::vector<Correspondence> load_correspondences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_correspondence_csv(in, path.string());
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::vector<std::filesystem::path> masks;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t");
    const std::string entry = line.substr(start, end - start + 1);
    if (entry[0] == '#') continue;
    std::filesystem::path p(entry);
    masks.push_back(p.is_absolute() ? p : base / p);
  }
  if (masks.empty()) throw std::runtime_error("manifest " + path.string() + " lists no masks");
  return masks;
}

void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& entries) {
  std::string out;
  for (const std::string& e : entries) {
    out += e;
    out += '\n';
  }
  write_text_file(path, out);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace celltrack
