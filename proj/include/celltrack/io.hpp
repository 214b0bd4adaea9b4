#ifndef CELLTRACK_IO_HPP
#define CELLTRACK_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "celltrack/matching.hpp"

namespace celltrack {

/// Shortest decimal string that parses back to exactly `v`.
std::string double_to_string(double v);

/// Strict inverse of double_to_string; rejects trailing garbage.
double double_from_string(const std::string& s);

/// CSV schema shared by predictions and ground truth:
/// frame_t,daughter_label,father_label,kind,score
/// Unmatched daughters appear with father_label -1, kind "unmatched", score 0.
std::string correspondence_csv(const Correspondence& corr);
std::string correspondences_csv(const std::vector<Correspondence>& list);

/// Parses one or more frame pairs from a single CSV stream, grouped by the
/// frame_t column and returned ascending. `source` names the stream in errors.
std::vector<Correspondence> parse_correspondence_csv(std::istream& in, const std::string& source);

void save_correspondence(const std::filesystem::path& path, const Correspondence& corr);
std::vector<Correspondence> load_correspondences(const std::filesystem::path& path);

/// Manifest: one mask path per line, relative to the manifest's directory;
/// blank lines and #-comments are skipped.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& entries);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace celltrack

#endif
