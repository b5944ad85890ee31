#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mmtk/rng.hpp"

// Dataset manifest handling, leakage-safe participant splitting, label
// binarization, clip offset sampling, and a synthetic audio-video dataset
// generator with a planted conjunctive cross-modal cue.

namespace mmtk::data {

struct ClipRecord {
  std::string clip_id;
  std::string participant_id;
  std::string task_id;
  std::string audio_path;
  std::string video_path;
  // raw self-report scores on the 0-20 scale, order
  // (mental_demand, effort, temporal_demand)
  std::array<int, 3> raw_scores{};
  std::array<int, 3> labels{};  // binarized scores
  double duration_seconds = 0.0;
};

// 1 iff score >= threshold; throws if score is outside [0, 20]
int binarize_label(int score, int threshold = 10);

// JSON array of ClipRecord objects; write -> read -> write is byte-identical
void write_manifest(const std::string& path,
                    const std::vector<ClipRecord>& records);
std::vector<ClipRecord> read_manifest(const std::string& path);

struct SplitSpec {
  std::vector<std::string> train, val, test;  // participant ids per split
  std::array<std::size_t, 3> clip_counts{};   // clips landing in each split
};

// Shuffles the distinct participant ids by seed and partitions them by the
// given fractions (must sum to 1); every clip follows its participant, so
// splits are leakage-free by construction. Throws when there are fewer
// participants than splits with a nonzero fraction.
SplitSpec split_by_participant(const std::vector<ClipRecord>& records,
                               const std::array<double, 3>& fractions,
                               std::uint64_t seed);

void write_split(const std::string& path, const SplitSpec& split);
SplitSpec read_split(const std::string& path);

// records whose participant belongs to the given split section
std::vector<ClipRecord> select_split(const std::vector<ClipRecord>& records,
                                     const std::vector<std::string>& participants);

// manifest-relative media path resolution (absolute paths pass through)
std::string resolve_path(const std::string& manifest_path,
                         const std::string& path);

// Up to `clips_per` distinct integer-second start offsets for carving
// fixed-length clips out of a longer source; sources shorter than one clip
// yield the single offset 0. Deterministic under the rng state.
std::vector<double> sample_clip_offsets(double source_seconds, int clips_per,
                                        double clip_seconds, Rng& rng);

struct SynthConfig {
  std::string out_dir;
  int n_participants = 12;
  int clips_per_participant = 20;
  std::uint64_t seed = 7;
  // scales both planted cues; 0 removes the signal entirely
  double signal_strength = 1.0;
  double clip_seconds = 6.0;
  int sample_rate = 16000;
  int video_fps = 5;
  int video_height = 84;
  int video_width = 112;
};

// Writes WAV + MMV1 media and manifest.json under cfg.out_dir and returns
// the records. Labels are planted in the media: mental_demand <- audio tone
// burst, temporal_demand <- video flicker patch, effort <- both cues jointly
// (so an unimodal model is handicapped on effort). Fixed seed gives
// byte-identical media and manifest.
std::vector<ClipRecord> synth_generate(const SynthConfig& cfg);

}  // namespace mmtk::data
