#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mmtk/audio.hpp"
#include "mmtk/augment.hpp"
#include "mmtk/model.hpp"
#include "mmtk/train.hpp"

// One declarative run configuration covering every module knob. A run is
// replayable from its config file alone: the CLI freezes a resolved copy
// beside its outputs. Unknown keys are rejected, and validation reports
// every offending key at once. The full schema is documented in README.md.

namespace mmtk::config {

struct PathsConfig {
  std::string manifest = "data/manifest.json";
  std::string split = "data/split.json";
  std::string cache_dir = "cache";
  std::string out_dir = "runs/default";
};

struct PreprocessConfig {
  audio::MelParams mel;       // sample_rate, n_fft, hop, n_mels, fmin, fmax
  double clip_seconds = 6.0;  // fixed analysis window
  int video_depth = 30;       // frames per volume
  double video_fps = 5.0;     // temporal sampling rate
  int resize_height = 168;
  int resize_width = 224;
  int crop_height = 148;
  int crop_width = 144;
};

struct DataConfig {
  int label_threshold = 10;  // score >= threshold -> positive label
  std::array<double, 3> split_fractions{0.6, 0.2, 0.2};
};

struct RunConfig {
  std::uint64_t seed = 0;
  PathsConfig paths;
  PreprocessConfig preprocess;
  DataConfig data;
  model::ModelConfig model;
  augment::Policy augment;
  train::TrainConfig train;

  // Appends a line per semantic problem without throwing.
  void collect_errors(std::vector<std::string>& errors) const;
  // Aggregates every semantic problem into one std::invalid_argument.
  void validate() const;
};

// Parses a JSON document; missing keys keep their defaults. Unknown keys,
// type mismatches, and semantic violations are all collected and rejected
// together in one std::invalid_argument listing every problem.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Canonical dump: fixed key order, two-space indent, trailing newline.
// parse_config(dump_config(c)) reproduces c exactly.
std::string dump_config(const RunConfig& cfg);
void save_config(const std::string& path, const RunConfig& cfg);

}  // namespace mmtk::config
