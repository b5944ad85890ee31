#include "mmtk/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace mmtk::config {

namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::vector<std::string>& errors) {
  std::string msg = "config:";
  for (const std::string& e : errors) msg += "\n  - " + e;
  throw std::invalid_argument(msg);
}

// Collects unknown-key and type complaints so one pass reports everything.
struct Reader {
  std::vector<std::string> errors;

  void check_keys(const ojson& j, const std::string& prefix,
                  std::initializer_list<const char*> allowed) {
    for (const auto& el : j.items()) {
      bool known = false;
      for (const char* a : allowed) {
        if (el.key() == a) {
          known = true;
          break;
        }
      }
      if (!known) errors.push_back("unknown key '" + prefix + el.key() + "'");
    }
  }

  template <typename T>
  void get(const ojson& j, const char* key, const std::string& prefix,
           T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
      out = it->get<T>();
    } catch (const std::exception&) {
      errors.push_back("key '" + prefix + key + "' has the wrong type");
    }
  }

  template <typename T, std::size_t N>
  void get_array(const ojson& j, const char* key, const std::string& prefix,
                 std::array<T, N>& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_array() || it->size() != N) {
      errors.push_back("key '" + prefix + key + "' must be an array of " +
                       std::to_string(N) + " numbers");
      return;
    }
    try {
      for (std::size_t i = 0; i < N; ++i) out[i] = (*it)[i].get<T>();
    } catch (const std::exception&) {
      errors.push_back("key '" + prefix + key + "' has the wrong type");
    }
  }

  template <typename Enum>
  void get_enum(const ojson& j, const char* key, const std::string& prefix,
                Enum& out,
                std::initializer_list<std::pair<const char*, Enum>> table) {
    auto it = j.find(key);
    if (it == j.end()) return;
    if (it->is_string()) {
      const std::string s = it->get<std::string>();
      for (const auto& [name, value] : table) {
        if (s == name) {
          out = value;
          return;
        }
      }
    }
    std::string choices;
    for (const auto& [name, value] : table) {
      (void)value;
      if (!choices.empty()) choices += ", ";
      choices += std::string("'") + name + "'";
    }
    errors.push_back("key '" + prefix + key + "' must be one of " + choices);
  }
};

constexpr std::initializer_list<std::pair<const char*, model::AttentionMode>>
    kModeTable = {{"pooled", model::AttentionMode::kPooled},
                  {"sequence", model::AttentionMode::kSequence}};
constexpr std::initializer_list<std::pair<const char*, model::QueryFrom>>
    kQueryTable = {{"audio", model::QueryFrom::kAudio},
                   {"video", model::QueryFrom::kVideo}};
constexpr std::initializer_list<std::pair<const char*, model::Modality>>
    kModalityTable = {{"multimodal", model::Modality::kMultimodal},
                      {"audio_only", model::Modality::kAudioOnly},
                      {"video_only", model::Modality::kVideoOnly}};

const char* enum_name(model::AttentionMode m) {
  return m == model::AttentionMode::kPooled ? "pooled" : "sequence";
}
const char* enum_name(model::QueryFrom q) {
  return q == model::QueryFrom::kAudio ? "audio" : "video";
}
const char* enum_name(model::Modality m) {
  switch (m) {
    case model::Modality::kAudioOnly:
      return "audio_only";
    case model::Modality::kVideoOnly:
      return "video_only";
    default:
      return "multimodal";
  }
}

void read_inception(Reader& r, const ojson& j, const char* key,
                    const std::string& prefix, model::InceptionSpec& spec) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_object()) {
    r.errors.push_back("key '" + prefix + key + "' must be an object");
    return;
  }
  const std::string p = prefix + key + ".";
  r.check_keys(*it, p, {"b1", "b2_reduce", "b2", "b3_reduce", "b3", "b4"});
  r.get(*it, "b1", p, spec.b1);
  r.get(*it, "b2_reduce", p, spec.b2_reduce);
  r.get(*it, "b2", p, spec.b2);
  r.get(*it, "b3_reduce", p, spec.b3_reduce);
  r.get(*it, "b3", p, spec.b3);
  r.get(*it, "b4", p, spec.b4);
}

ojson inception_json(const model::InceptionSpec& s) {
  ojson j;
  j["b1"] = s.b1;
  j["b2_reduce"] = s.b2_reduce;
  j["b2"] = s.b2;
  j["b3_reduce"] = s.b3_reduce;
  j["b3"] = s.b3;
  j["b4"] = s.b4;
  return j;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

void RunConfig::collect_errors(std::vector<std::string>& errors) const {
  auto collect = [&errors](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      // sub-validators already name their section; don't double the prefix
      const std::string what = e.what();
      const std::string tag = std::string(section) + ": ";
      errors.push_back(what.rfind(tag, 0) == 0 ? what : tag + what);
    }
  };
  collect("model", [this] { model.validate(); });
  collect("train", [this] { train.validate(); });

  const PreprocessConfig& p = preprocess;
  if (p.mel.sample_rate <= 0) {
    errors.push_back("preprocess.sample_rate must be positive");
  }
  if (!is_power_of_two(p.mel.n_fft)) {
    errors.push_back("preprocess.n_fft must be a power of two");
  }
  if (p.mel.hop <= 0) errors.push_back("preprocess.hop must be positive");
  if (p.mel.n_mels <= 0) errors.push_back("preprocess.n_mels must be positive");
  if (p.mel.fmin < 0.0 || p.mel.fmax <= p.mel.fmin) {
    errors.push_back("preprocess needs 0 <= fmin < fmax");
  }
  if (!(p.clip_seconds > 0.0)) {
    errors.push_back("preprocess.clip_seconds must be positive");
  }
  if (p.video_depth <= 0) {
    errors.push_back("preprocess.video_depth must be positive");
  }
  if (!(p.video_fps > 0.0)) {
    errors.push_back("preprocess.video_fps must be positive");
  }
  if (p.resize_height <= 0 || p.resize_width <= 0) {
    errors.push_back("preprocess resize dimensions must be positive");
  }
  if (p.crop_height <= 0 || p.crop_height > p.resize_height ||
      p.crop_width <= 0 || p.crop_width > p.resize_width) {
    errors.push_back("preprocess crop must fit inside the resize frame");
  }

  if (data.label_threshold < 0 || data.label_threshold > 20) {
    errors.push_back("data.label_threshold must lie in [0, 20]");
  }
  double frac_sum = 0.0;
  bool frac_ok = true;
  for (double f : data.split_fractions) {
    if (f < 0.0) frac_ok = false;
    frac_sum += f;
  }
  if (!frac_ok || std::abs(frac_sum - 1.0) > 1e-9) {
    errors.push_back("data.split_fractions must be nonnegative and sum to 1");
  }

  const augment::AudioPolicy& a = augment.audio;
  if (a.volume_jitter_range < 0.0 || a.volume_jitter_range >= 1.0) {
    errors.push_back("augment.audio.volume_jitter_range must lie in [0, 1)");
  }
  if (a.time_mask_max < 0 || a.time_mask_num < 0 || a.freq_mask_max < 0 ||
      a.freq_mask_num < 0) {
    errors.push_back("augment.audio mask sizes and counts must be >= 0");
  }
  if (!(a.crop_range_lo > 0.0) || a.crop_range_hi < a.crop_range_lo) {
    errors.push_back("augment.audio crop range needs 0 < lo <= hi");
  }
  if (!(a.crop_scale_lo > 0.0) || a.crop_scale_hi < a.crop_scale_lo) {
    errors.push_back("augment.audio crop scale needs 0 < lo <= hi");
  }
  const augment::VisualPolicy& v = augment.visual;
  if (!(v.multiscale_min_area > 0.0) || v.multiscale_min_area > 1.0) {
    errors.push_back("augment.visual.multiscale_min_area must lie in (0, 1]");
  }
  if (v.hflip_p < 0.0 || v.hflip_p > 1.0 || v.grayscale_p < 0.0 ||
      v.grayscale_p > 1.0) {
    errors.push_back("augment.visual probabilities must lie in [0, 1]");
  }
  if (v.jitter_brightness < 0.0 || v.jitter_contrast < 0.0 ||
      v.jitter_saturation < 0.0 || v.jitter_hue < 0.0 || v.jitter_hue > 0.5) {
    errors.push_back(
        "augment.visual jitter factors must be >= 0 (hue in [0, 0.5])");
  }
  if (v.cutout_max < 0 || v.cutout_num < 0) {
    errors.push_back("augment.visual cutout size and count must be >= 0");
  }
}

void RunConfig::validate() const {
  std::vector<std::string> errors;
  collect_errors(errors);
  if (!errors.empty()) fail(errors);
}

RunConfig parse_config(const std::string& json_text) {
  ojson j;
  try {
    j = ojson::parse(json_text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: not valid JSON: ") +
                                e.what());
  }
  if (!j.is_object()) {
    throw std::invalid_argument("config: top level must be an object");
  }

  RunConfig cfg;
  Reader r;
  r.check_keys(j, "",
               {"seed", "paths", "preprocess", "data", "model", "augment",
                "train"});
  r.get(j, "seed", "", cfg.seed);

  if (auto it = j.find("paths"); it != j.end() && it->is_object()) {
    r.check_keys(*it, "paths.", {"manifest", "split", "cache_dir", "out_dir"});
    r.get(*it, "manifest", "paths.", cfg.paths.manifest);
    r.get(*it, "split", "paths.", cfg.paths.split);
    r.get(*it, "cache_dir", "paths.", cfg.paths.cache_dir);
    r.get(*it, "out_dir", "paths.", cfg.paths.out_dir);
  }

  if (auto it = j.find("preprocess"); it != j.end() && it->is_object()) {
    const std::string p = "preprocess.";
    r.check_keys(*it, p,
                 {"sample_rate", "n_fft", "hop", "n_mels", "fmin", "fmax",
                  "clip_seconds", "video_depth", "video_fps", "resize_height",
                  "resize_width", "crop_height", "crop_width"});
    r.get(*it, "sample_rate", p, cfg.preprocess.mel.sample_rate);
    r.get(*it, "n_fft", p, cfg.preprocess.mel.n_fft);
    r.get(*it, "hop", p, cfg.preprocess.mel.hop);
    r.get(*it, "n_mels", p, cfg.preprocess.mel.n_mels);
    r.get(*it, "fmin", p, cfg.preprocess.mel.fmin);
    r.get(*it, "fmax", p, cfg.preprocess.mel.fmax);
    r.get(*it, "clip_seconds", p, cfg.preprocess.clip_seconds);
    r.get(*it, "video_depth", p, cfg.preprocess.video_depth);
    r.get(*it, "video_fps", p, cfg.preprocess.video_fps);
    r.get(*it, "resize_height", p, cfg.preprocess.resize_height);
    r.get(*it, "resize_width", p, cfg.preprocess.resize_width);
    r.get(*it, "crop_height", p, cfg.preprocess.crop_height);
    r.get(*it, "crop_width", p, cfg.preprocess.crop_width);
  }

  if (auto it = j.find("data"); it != j.end() && it->is_object()) {
    r.check_keys(*it, "data.", {"label_threshold", "split_fractions"});
    r.get(*it, "label_threshold", "data.", cfg.data.label_threshold);
    r.get_array(*it, "split_fractions", "data.", cfg.data.split_fractions);
  }

  if (auto it = j.find("model"); it != j.end() && it->is_object()) {
    const std::string p = "model.";
    r.check_keys(*it, p,
                 {"audio_channels", "video_stem_channels", "inception1",
                  "inception2", "d_model", "heads", "branch_hidden",
                  "seq_tokens", "attention_mode", "query_from", "modality",
                  "dropout", "bn_momentum", "bn_eps"});
    r.get_array(*it, "audio_channels", p, cfg.model.audio_channels);
    r.get(*it, "video_stem_channels", p, cfg.model.video_stem_channels);
    read_inception(r, *it, "inception1", p, cfg.model.inception1);
    read_inception(r, *it, "inception2", p, cfg.model.inception2);
    r.get(*it, "d_model", p, cfg.model.d_model);
    r.get(*it, "heads", p, cfg.model.heads);
    r.get(*it, "branch_hidden", p, cfg.model.branch_hidden);
    r.get(*it, "seq_tokens", p, cfg.model.seq_tokens);
    r.get_enum(*it, "attention_mode", p, cfg.model.attention_mode, kModeTable);
    r.get_enum(*it, "query_from", p, cfg.model.query_from, kQueryTable);
    r.get_enum(*it, "modality", p, cfg.model.modality, kModalityTable);
    r.get(*it, "dropout", p, cfg.model.dropout_p);
    r.get(*it, "bn_momentum", p, cfg.model.bn_momentum);
    r.get(*it, "bn_eps", p, cfg.model.bn_eps);
  }

  if (auto it = j.find("augment"); it != j.end() && it->is_object()) {
    r.check_keys(*it, "augment.", {"audio", "visual"});
    if (auto a = it->find("audio"); a != it->end() && a->is_object()) {
      const std::string p = "augment.audio.";
      r.check_keys(*a, p,
                   {"enabled", "volume_jitter_range", "time_mask_max",
                    "time_mask_num", "freq_mask_max", "freq_mask_num",
                    "crop_range_lo", "crop_range_hi", "crop_scale_lo",
                    "crop_scale_hi"});
      auto& ap = cfg.augment.audio;
      r.get(*a, "enabled", p, ap.enabled);
      r.get(*a, "volume_jitter_range", p, ap.volume_jitter_range);
      r.get(*a, "time_mask_max", p, ap.time_mask_max);
      r.get(*a, "time_mask_num", p, ap.time_mask_num);
      r.get(*a, "freq_mask_max", p, ap.freq_mask_max);
      r.get(*a, "freq_mask_num", p, ap.freq_mask_num);
      r.get(*a, "crop_range_lo", p, ap.crop_range_lo);
      r.get(*a, "crop_range_hi", p, ap.crop_range_hi);
      r.get(*a, "crop_scale_lo", p, ap.crop_scale_lo);
      r.get(*a, "crop_scale_hi", p, ap.crop_scale_hi);
    }
    if (auto v = it->find("visual"); v != it->end() && v->is_object()) {
      const std::string p = "augment.visual.";
      r.check_keys(*v, p,
                   {"enabled", "multiscale_min_area", "hflip_p",
                    "jitter_brightness", "jitter_contrast",
                    "jitter_saturation", "jitter_hue", "grayscale_p",
                    "cutout_max", "cutout_num"});
      auto& vp = cfg.augment.visual;
      r.get(*v, "enabled", p, vp.enabled);
      r.get(*v, "multiscale_min_area", p, vp.multiscale_min_area);
      r.get(*v, "hflip_p", p, vp.hflip_p);
      r.get(*v, "jitter_brightness", p, vp.jitter_brightness);
      r.get(*v, "jitter_contrast", p, vp.jitter_contrast);
      r.get(*v, "jitter_saturation", p, vp.jitter_saturation);
      r.get(*v, "jitter_hue", p, vp.jitter_hue);
      r.get(*v, "grayscale_p", p, vp.grayscale_p);
      r.get(*v, "cutout_max", p, vp.cutout_max);
      r.get(*v, "cutout_num", p, vp.cutout_num);
    }
  }

  if (auto it = j.find("train"); it != j.end() && it->is_object()) {
    const std::string p = "train.";
    r.check_keys(*it, p,
                 {"epochs", "batch_size", "base_lr", "lr_step", "lr_gamma",
                  "patience", "loss_weights", "threshold"});
    r.get(*it, "epochs", p, cfg.train.epochs);
    r.get(*it, "batch_size", p, cfg.train.batch_size);
    r.get(*it, "base_lr", p, cfg.train.base_lr);
    r.get(*it, "lr_step", p, cfg.train.lr_step);
    r.get(*it, "lr_gamma", p, cfg.train.lr_gamma);
    r.get(*it, "patience", p, cfg.train.patience);
    r.get_array(*it, "loss_weights", p, cfg.train.loss_weights.w);
    r.get(*it, "threshold", p, cfg.train.threshold);
  }

  // Sections must be objects when present.
  for (const char* section :
       {"paths", "preprocess", "data", "model", "augment", "train"}) {
    if (auto it = j.find(section); it != j.end() && !it->is_object()) {
      r.errors.push_back("key '" + std::string(section) +
                         "' must be an object");
    }
  }
  if (auto it = j.find("augment"); it != j.end() && it->is_object()) {
    for (const char* sub : {"audio", "visual"}) {
      if (auto s = it->find(sub); s != it->end() && !s->is_object()) {
        r.errors.push_back("key 'augment." + std::string(sub) +
                           "' must be an object");
      }
    }
  }

  cfg.train.seed = cfg.seed;  // one seed drives the whole run
  cfg.collect_errors(r.errors);
  if (!r.errors.empty()) fail(r.errors);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg) {
  ojson j;
  j["seed"] = cfg.seed;
  j["paths"] = {{"manifest", cfg.paths.manifest},
                {"split", cfg.paths.split},
                {"cache_dir", cfg.paths.cache_dir},
                {"out_dir", cfg.paths.out_dir}};
  j["preprocess"] = {{"sample_rate", cfg.preprocess.mel.sample_rate},
                     {"n_fft", cfg.preprocess.mel.n_fft},
                     {"hop", cfg.preprocess.mel.hop},
                     {"n_mels", cfg.preprocess.mel.n_mels},
                     {"fmin", cfg.preprocess.mel.fmin},
                     {"fmax", cfg.preprocess.mel.fmax},
                     {"clip_seconds", cfg.preprocess.clip_seconds},
                     {"video_depth", cfg.preprocess.video_depth},
                     {"video_fps", cfg.preprocess.video_fps},
                     {"resize_height", cfg.preprocess.resize_height},
                     {"resize_width", cfg.preprocess.resize_width},
                     {"crop_height", cfg.preprocess.crop_height},
                     {"crop_width", cfg.preprocess.crop_width}};
  j["data"] = {{"label_threshold", cfg.data.label_threshold},
               {"split_fractions", cfg.data.split_fractions}};
  j["model"] = {{"audio_channels", cfg.model.audio_channels},
                {"video_stem_channels", cfg.model.video_stem_channels},
                {"inception1", inception_json(cfg.model.inception1)},
                {"inception2", inception_json(cfg.model.inception2)},
                {"d_model", cfg.model.d_model},
                {"heads", cfg.model.heads},
                {"branch_hidden", cfg.model.branch_hidden},
                {"seq_tokens", cfg.model.seq_tokens},
                {"attention_mode", enum_name(cfg.model.attention_mode)},
                {"query_from", enum_name(cfg.model.query_from)},
                {"modality", enum_name(cfg.model.modality)},
                {"dropout", cfg.model.dropout_p},
                {"bn_momentum", cfg.model.bn_momentum},
                {"bn_eps", cfg.model.bn_eps}};
  j["augment"] = {
      {"audio",
       {{"enabled", cfg.augment.audio.enabled},
        {"volume_jitter_range", cfg.augment.audio.volume_jitter_range},
        {"time_mask_max", cfg.augment.audio.time_mask_max},
        {"time_mask_num", cfg.augment.audio.time_mask_num},
        {"freq_mask_max", cfg.augment.audio.freq_mask_max},
        {"freq_mask_num", cfg.augment.audio.freq_mask_num},
        {"crop_range_lo", cfg.augment.audio.crop_range_lo},
        {"crop_range_hi", cfg.augment.audio.crop_range_hi},
        {"crop_scale_lo", cfg.augment.audio.crop_scale_lo},
        {"crop_scale_hi", cfg.augment.audio.crop_scale_hi}}},
      {"visual",
       {{"enabled", cfg.augment.visual.enabled},
        {"multiscale_min_area", cfg.augment.visual.multiscale_min_area},
        {"hflip_p", cfg.augment.visual.hflip_p},
        {"jitter_brightness", cfg.augment.visual.jitter_brightness},
        {"jitter_contrast", cfg.augment.visual.jitter_contrast},
        {"jitter_saturation", cfg.augment.visual.jitter_saturation},
        {"jitter_hue", cfg.augment.visual.jitter_hue},
        {"grayscale_p", cfg.augment.visual.grayscale_p},
        {"cutout_max", cfg.augment.visual.cutout_max},
        {"cutout_num", cfg.augment.visual.cutout_num}}}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"base_lr", cfg.train.base_lr},
                {"lr_step", cfg.train.lr_step},
                {"lr_gamma", cfg.train.lr_gamma},
                {"patience", cfg.train.patience},
                {"loss_weights", cfg.train.loss_weights.w},
                {"threshold", cfg.train.threshold}};
  return j.dump(2) + "\n";
}

void save_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write config '" + path + "'");
  out << dump_config(cfg);
}

}  // namespace mmtk::config
