#include "celltrack/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "celltrack/io.hpp"

namespace celltrack {

namespace {

std::string trim(const std::string& s) {
  const auto start = s.find_first_not_of(" \t");
  if (start == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(start, end - start + 1);
}

long long int_value(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "' needs an integer, got '" + value + "'");
  }
}

double real_value(const std::string& key, const std::string& value) {
  try {
    return double_from_string(value);
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "' needs a real number, got '" + value + "'");
  }
}

bool bool_value(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::runtime_error("config key '" + key + "' needs true/false, got '" + value + "'");
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value) {
  if (key == "t_init") match.t_init = real_value(key, value);
  else if (key == "t_min") match.t_min = real_value(key, value);
  else if (key == "t_step") match.t_step = real_value(key, value);
  else if (key == "max_marks") match.max_marks = static_cast<int>(int_value(key, value));
  else if (key == "l_max") match.l_max = static_cast<int>(int_value(key, value));
  else if (key == "alpha_k") match.alpha_k = real_value(key, value);
  else if (key == "alpha_l") match.alpha_l = real_value(key, value);
  else if (key == "upper_bound_inclusive") match.upper_bound_inclusive = bool_value(key, value);
  else if (key == "seed") synth.seed = static_cast<std::uint64_t>(int_value(key, value));
  else if (key == "frames") synth.frames = static_cast<int>(int_value(key, value));
  else if (key == "initial_cells") synth.initial_cells = static_cast<int>(int_value(key, value));
  else if (key == "growth_rate") synth.growth_rate = real_value(key, value);
  else if (key == "division_length") synth.division_length = real_value(key, value);
  else if (key == "cell_width") synth.cell_width = real_value(key, value);
  else if (key == "jitter") synth.jitter = real_value(key, value);
  else if (key == "relaxation_iters") synth.relaxation_iters = static_cast<int>(int_value(key, value));
  else if (key == "crowding_onset") synth.crowding_onset = static_cast<int>(int_value(key, value));
  else if (key == "lag_tau") synth.lag_tau = real_value(key, value);
  else if (key == "grid_width") synth.grid_width = static_cast<int>(int_value(key, value));
  else if (key == "grid_height") synth.grid_height = static_cast<int>(int_value(key, value));
  else if (key == "format") {
    if (value != "json-tree" && value != "newick-attr")
      throw std::runtime_error("config key 'format' must be json-tree or newick-attr");
    format = value;
  } else if (key == "attribute") {
    attribute = value;
  } else {
    throw std::runtime_error("unknown config key: '" + key + "'");
  }
}

std::string RunConfig::serialized() const {
  std::ostringstream out;
  out << "alpha_k = " << double_to_string(match.alpha_k) << '\n'
      << "alpha_l = " << double_to_string(match.alpha_l) << '\n'
      << "attribute = " << attribute << '\n'
      << "cell_width = " << double_to_string(synth.cell_width) << '\n'
      << "crowding_onset = " << synth.crowding_onset << '\n'
      << "division_length = " << double_to_string(synth.division_length) << '\n'
      << "format = " << format << '\n'
      << "frames = " << synth.frames << '\n'
      << "grid_height = " << synth.grid_height << '\n'
      << "grid_width = " << synth.grid_width << '\n'
      << "growth_rate = " << double_to_string(synth.growth_rate) << '\n'
      << "initial_cells = " << synth.initial_cells << '\n'
      << "jitter = " << double_to_string(synth.jitter) << '\n'
      << "l_max = " << match.l_max << '\n'
      << "lag_tau = " << double_to_string(synth.lag_tau) << '\n'
      << "max_marks = " << match.max_marks << '\n'
      << "relaxation_iters = " << synth.relaxation_iters << '\n'
      << "seed = " << synth.seed << '\n'
      << "t_init = " << double_to_string(match.t_init) << '\n'
      << "t_min = " << double_to_string(match.t_min) << '\n'
      << "t_step = " << double_to_string(match.t_step) << '\n'
      << "upper_bound_inclusive = " << (match.upper_bound_inclusive ? "true" : "false") << '\n';
  return out.str();
}

RunConfig parse_run_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(source + ":" + std::to_string(line_no) +
                               ": expected 'key = value'");
    try {
      cfg.apply(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_run_config(in, path.string());
}

}  // namespace celltrack
