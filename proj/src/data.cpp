#include "mmtk/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"
#include "mmtk/video.hpp"
#include "mmtk/wav.hpp"

namespace mmtk::data {

namespace {

constexpr double kPi = 3.14159265358979323846;
const std::array<const char*, 3> kTaskKeys = {"mental_demand", "effort",
                                              "temporal_demand"};

std::string pad_int(int v, int width) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%0*d", width, v);
  return buf;
}

nlohmann::json record_to_json(const ClipRecord& r) {
  nlohmann::json j;
  j["clip_id"] = r.clip_id;
  j["participant_id"] = r.participant_id;
  j["task_id"] = r.task_id;
  j["audio_path"] = r.audio_path;
  j["video_path"] = r.video_path;
  for (std::size_t k = 0; k < 3; ++k) {
    j["raw_scores"][kTaskKeys[k]] = r.raw_scores[k];
    j["labels"][kTaskKeys[k]] = r.labels[k];
  }
  j["duration_seconds"] = r.duration_seconds;
  return j;
}

ClipRecord record_from_json(const nlohmann::json& j, const std::string& path,
                            std::size_t index) {
  auto fail = [&](const std::string& why) {
    throw std::runtime_error("manifest '" + path + "': record " +
                             std::to_string(index) + ": " + why);
  };
  for (const char* key :
       {"clip_id", "participant_id", "task_id", "audio_path", "video_path",
        "raw_scores", "labels", "duration_seconds"}) {
    if (!j.contains(key)) fail(std::string("missing field '") + key + "'");
  }
  ClipRecord r;
  r.clip_id = j.at("clip_id").get<std::string>();
  r.participant_id = j.at("participant_id").get<std::string>();
  r.task_id = j.at("task_id").get<std::string>();
  r.audio_path = j.at("audio_path").get<std::string>();
  r.video_path = j.at("video_path").get<std::string>();
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& scores = j.at("raw_scores");
    const auto& labels = j.at("labels");
    if (!scores.contains(kTaskKeys[k]) || !labels.contains(kTaskKeys[k])) {
      fail(std::string("missing task entry '") + kTaskKeys[k] + "'");
    }
    r.raw_scores[k] = scores.at(kTaskKeys[k]).get<int>();
    r.labels[k] = labels.at(kTaskKeys[k]).get<int>();
    if (r.raw_scores[k] < 0 || r.raw_scores[k] > 20) {
      fail("raw score outside [0, 20]");
    }
    if (r.labels[k] != 0 && r.labels[k] != 1) fail("label outside {0, 1}");
  }
  r.duration_seconds = j.at("duration_seconds").get<double>();
  if (!(r.duration_seconds > 0.0)) fail("duration must be > 0");
  return r;
}

}  // namespace

int binarize_label(int score, int threshold) {
  if (score < 0 || score > 20) {
    throw std::invalid_argument("binarize_label: score " +
                                std::to_string(score) +
                                " outside the 0-20 scale");
  }
  return score >= threshold ? 1 : 0;
}

void write_manifest(const std::string& path,
                    const std::vector<ClipRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ClipRecord& r : records) arr.push_back(record_to_json(r));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
  out << arr.dump(2) << "\n";
}

std::vector<ClipRecord> read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open manifest '" + path + "'");
  nlohmann::json arr;
  try {
    in >> arr;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("manifest '" + path + "': " + e.what());
  }
  if (!arr.is_array()) {
    throw std::runtime_error("manifest '" + path +
                             "': expected a JSON array of clip records");
  }
  std::vector<ClipRecord> records;
  records.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    records.push_back(record_from_json(arr[i], path, i));
  }
  return records;
}

SplitSpec split_by_participant(const std::vector<ClipRecord>& records,
                               const std::array<double, 3>& fractions,
                               std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("split: fractions must be >= 0");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split: fractions must sum to 1, got " +
                                std::to_string(sum));
  }

  std::vector<std::string> ids;
  {
    std::unordered_set<std::string> seen;
    for (const ClipRecord& r : records) {
      if (seen.insert(r.participant_id).second) ids.push_back(r.participant_id);
    }
  }
  std::sort(ids.begin(), ids.end());
  const std::size_t P = ids.size();
  std::size_t nonzero = 0;
  for (double f : fractions) nonzero += f > 0.0 ? 1 : 0;
  if (P < nonzero) {
    throw std::invalid_argument(
        "split: " + std::to_string(P) + " participant(s) cannot fill " +
        std::to_string(nonzero) + " nonempty splits");
  }

  Rng rng(seed);
  for (std::size_t i = P; i > 1; --i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(ids[i - 1], ids[j]);
  }

  const double c1 = fractions[0], c2 = fractions[0] + fractions[1];
  std::array<std::size_t, 3> n{};
  n[0] = fractions[0] > 0.0
             ? static_cast<std::size_t>(std::llround(c1 * static_cast<double>(P)))
             : 0;
  std::size_t n12 =
      fractions[1] > 0.0
          ? static_cast<std::size_t>(std::llround(c2 * static_cast<double>(P)))
          : n[0];
  n12 = std::clamp(n12, n[0], P);
  n[0] = std::min(n[0], P);
  n[1] = n12 - n[0];
  n[2] = fractions[2] > 0.0 ? P - n12 : 0;
  // rounding can starve a nonzero-fraction split or strand participants in a
  // zero-fraction one; rebalance deterministically
  if (fractions[2] == 0.0 && n[0] + n[1] < P) {
    (fractions[1] > 0.0 ? n[1] : n[0]) += P - n[0] - n[1];
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (fractions[i] > 0.0 && n[i] == 0) {
      const std::size_t big =
          std::max_element(n.begin(), n.end()) - n.begin();
      --n[big];
      ++n[i];
    }
  }

  SplitSpec spec;
  spec.train.assign(ids.begin(), ids.begin() + static_cast<long>(n[0]));
  spec.val.assign(ids.begin() + static_cast<long>(n[0]),
                  ids.begin() + static_cast<long>(n[0] + n[1]));
  spec.test.assign(ids.begin() + static_cast<long>(n[0] + n[1]),
                   ids.begin() + static_cast<long>(n[0] + n[1] + n[2]));
  std::sort(spec.train.begin(), spec.train.end());
  std::sort(spec.val.begin(), spec.val.end());
  std::sort(spec.test.begin(), spec.test.end());

  const std::array<const std::vector<std::string>*, 3> sets = {
      &spec.train, &spec.val, &spec.test};
  for (std::size_t s = 0; s < 3; ++s) {
    const std::unordered_set<std::string> members(sets[s]->begin(),
                                                  sets[s]->end());
    for (const ClipRecord& r : records) {
      if (members.count(r.participant_id) != 0) ++spec.clip_counts[s];
    }
  }
  return spec;
}

void write_split(const std::string& path, const SplitSpec& split) {
  nlohmann::json j;
  j["train"] = split.train;
  j["val"] = split.val;
  j["test"] = split.test;
  j["clip_counts"] = {{"train", split.clip_counts[0]},
                      {"val", split.clip_counts[1]},
                      {"test", split.clip_counts[2]}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write split '" + path + "'");
  out << j.dump(2) << "\n";
}

SplitSpec read_split(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open split '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("split '" + path + "': " + e.what());
  }
  SplitSpec s;
  s.train = j.at("train").get<std::vector<std::string>>();
  s.val = j.at("val").get<std::vector<std::string>>();
  s.test = j.at("test").get<std::vector<std::string>>();
  if (j.contains("clip_counts")) {
    s.clip_counts[0] = j["clip_counts"].value("train", 0u);
    s.clip_counts[1] = j["clip_counts"].value("val", 0u);
    s.clip_counts[2] = j["clip_counts"].value("test", 0u);
  }
  return s;
}

std::vector<ClipRecord> select_split(
    const std::vector<ClipRecord>& records,
    const std::vector<std::string>& participants) {
  const std::unordered_set<std::string> members(participants.begin(),
                                                participants.end());
  std::vector<ClipRecord> out;
  for (const ClipRecord& r : records) {
    if (members.count(r.participant_id) != 0) out.push_back(r);
  }
  return out;
}

std::string resolve_path(const std::string& manifest_path,
                         const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  const std::filesystem::path dir =
      std::filesystem::path(manifest_path).parent_path();
  return (dir / path).string();
}

std::vector<double> sample_clip_offsets(double source_seconds, int clips_per,
                                        double clip_seconds, Rng& rng) {
  if (clip_seconds <= 0.0 || source_seconds <= 0.0) {
    throw std::invalid_argument("sample_clip_offsets: durations must be > 0");
  }
  if (clips_per < 1) {
    throw std::invalid_argument("sample_clip_offsets: need clips_per >= 1");
  }
  const long long grid =
      source_seconds >= clip_seconds
          ? static_cast<long long>(std::floor(source_seconds - clip_seconds)) + 1
          : 1;
  const long long k = std::min<long long>(clips_per, grid);
  std::vector<long long> pool(static_cast<std::size_t>(grid));
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<double> offsets;
  offsets.reserve(static_cast<std::size_t>(k));
  for (long long i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, grid - 1));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    offsets.push_back(static_cast<double>(pool[static_cast<std::size_t>(i)]));
  }
  return offsets;
}

std::vector<ClipRecord> synth_generate(const SynthConfig& cfg) {
  if (cfg.n_participants < 3) {
    throw std::invalid_argument(
        "synth: need at least 3 participants to form leakage-free splits, "
        "got " +
        std::to_string(cfg.n_participants));
  }
  if (cfg.clips_per_participant < 1 || cfg.out_dir.empty() ||
      cfg.clip_seconds <= 0.0 || cfg.sample_rate < 1000 || cfg.video_fps < 1 ||
      cfg.video_height < 16 || cfg.video_width < 16) {
    throw std::invalid_argument("synth: invalid generator configuration");
  }
  std::filesystem::create_directories(cfg.out_dir);

  Rng base(cfg.seed);
  const int n_samples =
      static_cast<int>(std::llround(cfg.clip_seconds * cfg.sample_rate));
  const int n_frames =
      static_cast<int>(std::llround(cfg.clip_seconds * cfg.video_fps));
  const int H = cfg.video_height, W = cfg.video_width;
  // centered flicker patch sized to survive the downstream center crop
  const int patch_h = H / 3, patch_w = H / 3;
  const int patch_top = (H - patch_h) / 2, patch_left = (W - patch_w) / 2;
  const float tone_amp = static_cast<float>(0.3 * cfg.signal_strength);
  const float flick_amp = static_cast<float>(0.25 * cfg.signal_strength);

  std::vector<ClipRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.n_participants) *
                  static_cast<std::size_t>(cfg.clips_per_participant));
  for (int p = 0; p < cfg.n_participants; ++p) {
    const std::string pid = "P" + pad_int(p + 1, 2);
    Rng prng = base.split(static_cast<std::uint64_t>(p));
    // kept clearly above 1/2 so the planted labels stay majority-positive,
    // and capped so a trivial majority predictor cannot look strong
    const double bias = prng.uniform(0.45, 0.65);
    for (int c = 0; c < cfg.clips_per_participant; ++c) {
      const std::uint64_t gidx =
          static_cast<std::uint64_t>(p) *
              static_cast<std::uint64_t>(cfg.clips_per_participant) +
          static_cast<std::uint64_t>(c);
      Rng rng = base.split(100000 + gidx);

      const bool audio_cue = rng.bernoulli(bias);
      const bool video_cue = rng.bernoulli(bias);
      ClipRecord r;
      r.labels = {audio_cue ? 1 : 0, (audio_cue && video_cue) ? 1 : 0,
                  video_cue ? 1 : 0};
      for (std::size_t k = 0; k < 3; ++k) {
        r.raw_scores[k] = r.labels[k] == 1
                              ? static_cast<int>(rng.uniform_int(10, 20))
                              : static_cast<int>(rng.uniform_int(0, 9));
      }
      r.participant_id = pid;
      r.task_id = "t" + pad_int(c % 4 + 1, 2);
      r.clip_id = pid + "_" + r.task_id + "_c" + pad_int(c, 3);
      r.audio_path = r.clip_id + ".wav";
      r.video_path = r.clip_id + ".mmv";
      r.duration_seconds = cfg.clip_seconds;

      // audio: white noise floor, plus a gated tone burst when cued
      const double carrier = rng.uniform(1050.0, 1450.0);
      audio::Waveform wave;
      wave.sample_rate = cfg.sample_rate;
      wave.samples.resize(static_cast<std::size_t>(n_samples));
      for (int t = 0; t < n_samples; ++t) {
        float v = 0.05f * static_cast<float>(rng.uniform(-1.0, 1.0));
        if (audio_cue) {
          const double sec = static_cast<double>(t) / cfg.sample_rate;
          const bool gate_on = std::fmod(sec, 0.5) < 0.25;
          if (gate_on) {
            v += tone_amp *
                 static_cast<float>(std::sin(2.0 * kPi * carrier * sec));
          }
        }
        wave.samples[static_cast<std::size_t>(t)] = v;
      }
      io::write_wav_pcm16(
          (std::filesystem::path(cfg.out_dir) / r.audio_path).string(), wave);

      // video: gray background with pixel noise, plus a frame-parity
      // flicker patch when cued
      const float background = static_cast<float>(rng.uniform(0.3, 0.7));
      video::VideoClip clip;
      clip.frames = n_frames;
      clip.height = H;
      clip.width = W;
      clip.channels = 3;
      clip.data.resize(static_cast<std::size_t>(n_frames) * H * W * 3);
      std::size_t at = 0;
      for (int f = 0; f < n_frames; ++f) {
        const float delta = (f % 2 == 0) ? flick_amp : -flick_amp;
        for (int y = 0; y < H; ++y) {
          for (int x = 0; x < W; ++x) {
            float v =
                background + 0.05f * static_cast<float>(rng.uniform(-1.0, 1.0));
            if (video_cue && y >= patch_top && y < patch_top + patch_h &&
                x >= patch_left && x < patch_left + patch_w) {
              v += delta;
            }
            const float clamped = std::clamp(v, 0.0f, 1.0f);
            const auto byte = static_cast<std::uint8_t>(
                std::lround(clamped * 255.0f));
            clip.data[at++] = byte;
            clip.data[at++] = byte;
            clip.data[at++] = byte;
          }
        }
      }
      video::write_mmv1(
          (std::filesystem::path(cfg.out_dir) / r.video_path).string(), clip);
      records.push_back(std::move(r));
    }
  }

  write_manifest(
      (std::filesystem::path(cfg.out_dir) / "manifest.json").string(),
      records);
  return records;
}

}  // namespace mmtk::data
