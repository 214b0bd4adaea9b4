#ifndef CELLTRACK_CONFIG_HPP
#define CELLTRACK_CONFIG_HPP

#include <filesystem>
#include <iosfwd>
#include <string>

#include "celltrack/matching.hpp"
#include "celltrack/synth.hpp"

namespace celltrack {

/// Every tunable of every command, with its default. Parsed from a flat
/// `key = value` file; unknown keys are rejected.
struct RunConfig {
  MatchConfig match;
  SynthConfig synth;
  std::string format = "json-tree";  // forest export format
  std::string attribute = "length";  // division-tree life attribute

  void apply(const std::string& key, const std::string& value);
  /// All keys in sorted order, one `key = value` per line.
  std::string serialized() const;
};

RunConfig parse_run_config(std::istream& in, const std::string& source);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace celltrack

#endif
