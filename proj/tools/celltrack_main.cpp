#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "celltrack/config.hpp"
#include "celltrack/evaluation.hpp"
#include "celltrack/io.hpp"
#include "celltrack/lineage.hpp"
#include "celltrack/matching.hpp"
#include "celltrack/synth.hpp"

namespace fs = std::filesystem;
using namespace celltrack;

namespace {

std::string pair_name(int frame_t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "pair_%04d.csv", frame_t);
  return buf;
}

std::string frame_name(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d.txt", frame);
  return buf;
}

std::string key4(const char* prefix, int n, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d_%s", prefix, n, suffix);
  return buf;
}

RunConfig config_from(const std::string& config_path) {
  if (config_path.empty()) return RunConfig{};
  return load_run_config(config_path);
}

std::pair<int, int> parse_window(const std::string& window) {
  const auto colon = window.find(':');
  if (colon == std::string::npos)
    throw std::runtime_error("--window expects A:B, got '" + window + "'");
  try {
    const int a = std::stoi(window.substr(0, colon));
    const int b = std::stoi(window.substr(colon + 1));
    return {a, b};
  } catch (const std::exception&) {
    throw std::runtime_error("--window expects integers A:B, got '" + window + "'");
  }
}

std::string sniff_forest_format(const std::string& bytes) {
  for (char ch : bytes) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') continue;
    return ch == '{' ? "json-tree" : "newick-attr";
  }
  throw std::runtime_error("forest file is empty");
}

std::string forest_file_name(const std::string& format) {
  return format == "json-tree" ? "forest.json" : "forest.nwk";
}

int cmd_track(const std::string& manifest_path, const std::string& config_path,
              const std::string& out_dir) {
  const RunConfig cfg = config_from(config_path);
  cfg.match.validate();
  const auto mask_paths = read_manifest(manifest_path);
  if (mask_paths.size() < 2) throw std::runtime_error("manifest lists fewer than 2 frames");

  std::vector<Frame> frames;
  frames.reserve(mask_paths.size());
  for (std::size_t i = 0; i < mask_paths.size(); ++i) {
    LabelMask mask = load_label_mask(mask_paths[i]);
    mask.frame_index = static_cast<int>(i);
    frames.push_back(Frame::from_mask(std::move(mask)));
    if (frames.back().cells.empty())
      throw std::runtime_error("frame " + std::to_string(i) + " (" + mask_paths[i].string() +
                               ") has no cells");
  }

  fs::create_directories(fs::path(out_dir) / "pairs");

  std::ostringstream summary;
  summary << "command = track\nframes = " << frames.size() << '\n' << cfg.serialized();
  for (std::size_t i = 0; i < frames.size(); ++i)
    summary << key4("frame", static_cast<int>(i), "cells") << " = " << frames[i].cells.size()
            << '\n';

  LineageForest forest = init_forest(frames[0].cells);
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    const Correspondence corr = track_frame_pair(frames[t], frames[t + 1], cfg.match);
    save_correspondence(fs::path(out_dir) / "pairs" / pair_name(corr.frame_t), corr);
    append_correspondence(forest, corr, frames[t + 1].cells);
    const int ft = corr.frame_t;
    summary << key4("pair", ft, "threshold") << " = " << double_to_string(corr.final_threshold)
            << '\n'
            << key4("pair", ft, "matched") << " = " << corr.pairs.size() << '\n'
            << key4("pair", ft, "unmatched") << " = " << corr.unmatched_daughters.size() << '\n'
            << key4("pair", ft, "rejected") << " = " << corr.rejected_attempts << '\n';
  }

  write_text_file(fs::path(out_dir) / forest_file_name(cfg.format),
                  export_forest(forest, cfg.format));
  write_text_file(fs::path(out_dir) / "tracks.csv", tracks_csv(extract_tracks(forest)));
  write_text_file(fs::path(out_dir) / "summary.txt", summary.str());
  std::cout << "tracked " << frames.size() << " frames into " << out_dir << "\n";
  return 0;
}

std::vector<Correspondence> load_predictions(const std::string& pred_path) {
  const fs::path p(pred_path);
  if (!fs::is_directory(p)) return load_correspondences(p);
  fs::path dir = p;
  if (fs::is_directory(p / "pairs")) dir = p / "pairs";
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("pair_", 0) == 0 && name.size() > 4 &&
        name.compare(name.size() - 4, 4, ".csv") == 0)
      files.push_back(entry.path());
  }
  if (files.empty()) throw std::runtime_error("no pair_*.csv files under " + pred_path);
  std::sort(files.begin(), files.end());
  std::vector<Correspondence> out;
  for (const fs::path& f : files)
    for (Correspondence& corr : load_correspondences(f)) out.push_back(std::move(corr));
  std::sort(out.begin(), out.end(),
            [](const Correspondence& a, const Correspondence& b) { return a.frame_t < b.frame_t; });
  return out;
}

std::vector<int> matched_fathers(const Correspondence& corr) {
  std::set<int> fathers;
  for (const MatchedPair& p : corr.pairs) fathers.insert(p.father);
  return {fathers.begin(), fathers.end()};
}

int cmd_evaluate(const std::string& pred_path, const std::string& truth_path,
                 const std::string& window_flag, const std::string& out_dir) {
  const std::vector<Correspondence> predicted = load_predictions(pred_path);
  const std::vector<Correspondence> truth = load_correspondences(truth_path);
  if (truth.empty()) throw std::runtime_error("truth file has no frame pairs");

  const EvalReport tdr = frame_tdr(predicted, truth);

  const auto pred_tracks = tracks_from_pairs(predicted, matched_fathers(predicted.front()));
  const auto truth_tracks = tracks_from_pairs(truth, matched_fathers(truth.front()));
  const std::pair<int, int> window = window_flag.empty()
                                         ? std::pair<int, int>{truth.front().frame_t,
                                                               truth.back().frame_t + 1}
                                         : parse_window(window_flag);
  const EvalReport er = track_er(pred_tracks, truth_tracks, window);

  long acc_tp = 0;
  long acc_gt = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const EvalReport r = match_accuracy(predicted[i], truth[i]);
    acc_tp += r.tp;
    acc_gt += r.gt;
  }
  const EvalReport acc = report_from_counts(acc_tp, 0, 0, acc_gt);

  std::ostringstream report;
  report << "frame_pairs = " << truth.size() << '\n'
         << "window = " << window.first << ':' << window.second << '\n'
         << "tdr_tp = " << tdr.tp << '\n'
         << "tdr_gt = " << tdr.gt << '\n'
         << "tdr = " << double_to_string(tdr.tdr) << '\n'
         << "fat = " << er.fat << '\n'
         << "tdf = " << er.tdf << '\n'
         << "track_gt = " << er.gt << '\n'
         << "er = " << double_to_string(er.er) << '\n'
         << "acc_tp = " << acc.tp << '\n'
         << "acc_gt = " << acc.gt << '\n'
         << "acc = " << double_to_string(acc.acc) << '\n';

  fs::create_directories(out_dir);
  write_text_file(fs::path(out_dir) / "report.txt", report.str());
  write_text_file(fs::path(out_dir) / "histogram.csv", histogram_csv(tdr.histogram));
  std::cout << report.str();
  return 0;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed) {
  RunConfig cfg = config_from(config_path);
  if (seed) cfg.synth.seed = *seed;
  cfg.synth.validate();

  const SynthMovie movie = generate_movie(cfg.synth);
  fs::create_directories(out_dir);

  std::vector<std::string> names;
  for (std::size_t i = 0; i < movie.masks.size(); ++i) {
    names.push_back(frame_name(static_cast<int>(i)));
    save_label_mask(movie.masks[i], fs::path(out_dir) / names.back(), MaskFormat::text);
  }
  write_manifest(fs::path(out_dir) / "manifest.txt", names);
  write_text_file(fs::path(out_dir) / "truth.csv", correspondences_csv(movie.truth.pairs));
  write_text_file(fs::path(out_dir) / forest_file_name(cfg.format),
                  export_forest(movie.forest, cfg.format));
  write_text_file(fs::path(out_dir) / "config_used.txt", cfg.serialized());
  std::cout << "generated " << movie.masks.size() << " frames, "
            << movie.forest.frontier.size() << " final cells into " << out_dir << "\n";
  return 0;
}

int cmd_export_tree(const std::string& forest_path, const std::string& format,
                    const std::string& out_path) {
  if (format != "json-tree" && format != "newick-attr")
    throw std::runtime_error("--format must be json-tree or newick-attr");
  const std::string bytes = read_text_file(forest_path);
  const LineageForest forest = import_forest(bytes, sniff_forest_format(bytes));
  write_text_file(out_path, export_forest(forest, format));
  return 0;
}

int cmd_export_tracks(const std::string& forest_path, const std::string& out_path) {
  const std::string bytes = read_text_file(forest_path);
  const LineageForest forest = import_forest(bytes, sniff_forest_format(bytes));
  write_text_file(out_path, tracks_csv(extract_tracks(forest)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-cell tracker for segmented colony movies"};
  app.require_subcommand(1);

  std::string manifest, config_path, out_dir = "out", pred_path, truth_path, window_flag;
  std::string forest_path, format = "json-tree", out_path;
  std::optional<std::uint64_t> seed;

  CLI::App* track = app.add_subcommand("track", "track cells across a movie's frames");
  track->add_option("manifest", manifest, "file listing one mask path per line")->required();
  track->add_option("--config", config_path, "key = value config file");
  track->add_option("--out", out_dir, "output directory");

  CLI::App* evaluate = app.add_subcommand("evaluate", "compare predictions against ground truth");
  evaluate->add_option("predicted", pred_path, "prediction CSV or track output directory")
      ->required();
  evaluate->add_option("truth", truth_path, "ground-truth CSV")->required();
  evaluate->add_option("--window", window_flag, "frame window A:B for track metrics");
  evaluate->add_option("--out", out_dir, "output directory");

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic colony movie");
  synth->add_option("--config", config_path, "key = value config file");
  synth->add_option("--out", out_dir, "output directory");
  synth->add_option("--seed", seed, "override the config seed");

  CLI::App* export_tree = app.add_subcommand("export-tree", "re-export a lineage forest");
  export_tree->add_option("forest", forest_path, "forest.json or forest.nwk")->required();
  export_tree->add_option("--format", format, "json-tree or newick-attr");
  export_tree->add_option("--out", out_path, "output file")->required();

  CLI::App* export_tracks = app.add_subcommand("export-tracks", "write per-track time series CSV");
  export_tracks->add_option("forest", forest_path, "forest.json or forest.nwk")->required();
  export_tracks->add_option("--out", out_path, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (track->parsed()) return cmd_track(manifest, config_path, out_dir);
    if (evaluate->parsed()) return cmd_evaluate(pred_path, truth_path, window_flag, out_dir);
    if (synth->parsed()) return cmd_synth(config_path, out_dir, seed);
    if (export_tree->parsed()) return cmd_export_tree(forest_path, format, out_path);
    if (export_tracks->parsed()) return cmd_export_tracks(forest_path, out_path);
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
