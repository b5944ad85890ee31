// mmtk command-line driver: synth | preprocess | train | eval.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error. Progress goes to
// stderr; reports and artifacts go to files (eval also prints its report).

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mmtk/audio.hpp"
#include "mmtk/config.hpp"
#include "mmtk/data.hpp"
#include "mmtk/metrics.hpp"
#include "mmtk/model.hpp"
#include "mmtk/serialize.hpp"
#include "mmtk/train.hpp"
#include "mmtk/video.hpp"
#include "mmtk/wav.hpp"

namespace fs = std::filesystem;
using namespace mmtk;

namespace {

std::uint64_t fnv1a(const std::string& bytes,
                    std::uint64_t h = 14695981039346656037ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// A cache entry is current when its tensor exists and the sidecar hash of
// (source bytes, pipeline fingerprint) matches.
bool cache_current(const fs::path& out, const fs::path& sidecar,
                   const std::string& hash) {
  if (!fs::exists(out) || !fs::exists(sidecar)) return false;
  std::ifstream in(sidecar);
  std::string stored;
  in >> stored;
  return stored == hash;
}

void write_sidecar(const fs::path& sidecar, const std::string& hash) {
  std::ofstream out(sidecar, std::ios::binary);
  out << hash << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

struct SynthArgs {
  std::string out;
  int participants = 12;
  int clips_each = 20;
  std::uint64_t seed = 7;
  double strength = 1.0;
};

int run_synth(const SynthArgs& a) {
  data::SynthConfig cfg;
  cfg.out_dir = a.out;
  cfg.n_participants = a.participants;
  cfg.clips_per_participant = a.clips_each;
  cfg.seed = a.seed;
  cfg.signal_strength = a.strength;
  std::vector<data::ClipRecord> records = data::synth_generate(cfg);
  data::SplitSpec split =
      data::split_by_participant(records, {0.6, 0.2, 0.2}, a.seed);
  data::write_split((fs::path(a.out) / "split.json").string(), split);
  std::cout << "synth: " << records.size() << " clips from " << a.participants
            << " participants -> " << a.out << "\n"
            << "split: train " << split.clip_counts[0] << " / val "
            << split.clip_counts[1] << " / test " << split.clip_counts[2]
            << " clips\n";
  return 0;
}

struct PreprocessArgs {
  std::string manifest;
  std::string cache;
  int workers = 1;
  std::string config_path;
};

int run_preprocess(const PreprocessArgs& a) {
  config::RunConfig cfg;
  if (!a.config_path.empty()) cfg = config::load_config(a.config_path);
  const std::vector<data::ClipRecord> records =
      data::read_manifest(a.manifest);
  fs::create_directories(a.cache);

  std::ostringstream afp;
  afp << "audio1|sr=" << cfg.preprocess.mel.sample_rate
      << "|n_fft=" << cfg.preprocess.mel.n_fft
      << "|hop=" << cfg.preprocess.mel.hop
      << "|mels=" << cfg.preprocess.mel.n_mels
      << "|fmin=" << cfg.preprocess.mel.fmin
      << "|fmax=" << cfg.preprocess.mel.fmax
      << "|sec=" << cfg.preprocess.clip_seconds;
  std::ostringstream vfp;
  vfp << "video1|depth=" << cfg.preprocess.video_depth
      << "|fps=" << cfg.preprocess.video_fps
      << "|rh=" << cfg.preprocess.resize_height
      << "|rw=" << cfg.preprocess.resize_width
      << "|ch=" << cfg.preprocess.crop_height
      << "|cw=" << cfg.preprocess.crop_width
      << "|sec=" << cfg.preprocess.clip_seconds;
  const std::string audio_fp = afp.str(), video_fp = vfp.str();

  long wrote = 0, skipped = 0, failed = 0;
  std::vector<std::string> failures;
  const long n = static_cast<long>(records.size());
#pragma omp parallel for num_threads(a.workers) schedule(dynamic) \
    reduction(+ : wrote, skipped, failed)
  for (long i = 0; i < n; ++i) {
    const data::ClipRecord& r = records[static_cast<std::size_t>(i)];
    try {
      const std::string wav_path = data::resolve_path(a.manifest, r.audio_path);
      const fs::path aout = fs::path(a.cache) / (r.clip_id + ".audio.mmt");
      const fs::path aside = fs::path(a.cache) / (r.clip_id + ".audio.src");
      const std::string ahash = hex64(fnv1a(audio_fp, fnv1a(read_bytes(wav_path))));
      if (cache_current(aout, aside, ahash)) {
        ++skipped;
      } else {
        audio::Waveform w = io::read_wav(wav_path);
        w = audio::resample(w, cfg.preprocess.mel.sample_rate);
        const auto want = static_cast<std::size_t>(
            std::llround(cfg.preprocess.clip_seconds *
                         cfg.preprocess.mel.sample_rate));
        w = audio::fix_length(w, want);
        io::save_tensor(aout.string(),
                        audio::mel_spectrogram(w, cfg.preprocess.mel));
        write_sidecar(aside, ahash);
        ++wrote;
      }

      const std::string vid_path = data::resolve_path(a.manifest, r.video_path);
      const fs::path vout = fs::path(a.cache) / (r.clip_id + ".video.mmt");
      const fs::path vside = fs::path(a.cache) / (r.clip_id + ".video.src");
      const std::string vhash = hex64(fnv1a(video_fp, fnv1a(read_bytes(vid_path))));
      if (cache_current(vout, vside, vhash)) {
        ++skipped;
      } else {
        video::VideoClip clip = video::read_mmv1(vid_path);
        const double native_fps = clip.frames / r.duration_seconds;
        std::vector<video::Image> frames = video::decode_resized(
            clip, native_fps, cfg.preprocess.video_depth,
            cfg.preprocess.video_fps, cfg.preprocess.resize_height,
            cfg.preprocess.resize_width);
        io::save_tensor(vout.string(),
                        video::finish_volume(frames, cfg.preprocess.crop_height,
                                             cfg.preprocess.crop_width));
        write_sidecar(vside, vhash);
        ++wrote;
      }
    } catch (const std::exception& e) {
      ++failed;
#pragma omp critical
      failures.push_back(r.clip_id + ": " + e.what());
    }
  }

  for (const std::string& f : failures) std::cerr << "preprocess: " << f << "\n";
  std::cerr << "preprocess: wrote " << wrote << ", skipped " << skipped
            << ", failed " << failed << " (of " << records.size()
            << " clips)\n";
  return failed > 0 ? 1 : 0;
}

int run_train(const std::string& config_path) {
  const config::RunConfig cfg = config::load_config(config_path);
  const fs::path out_dir(cfg.paths.out_dir);
  fs::create_directories(out_dir);
  config::save_config((out_dir / "config.json").string(), cfg);

  const auto records = data::read_manifest(cfg.paths.manifest);
  const data::SplitSpec split = data::read_split(cfg.paths.split);
  const auto train_recs = data::select_split(records, split.train);
  const auto val_recs = data::select_split(records, split.val);
  if (train_recs.empty() || val_recs.empty()) {
    throw std::runtime_error("train/val splits must select at least one clip");
  }
  std::cerr << "train: " << train_recs.size() << " train / "
            << val_recs.size() << " val clips\n";

  train::Dataset train_ds =
      train::load_dataset(train_recs, cfg.paths.cache_dir, cfg.paths.manifest,
                          cfg.augment.visual.enabled);
  train::Dataset val_ds = train::load_dataset(val_recs, cfg.paths.cache_dir,
                                              cfg.paths.manifest, false);

  Rng init_rng = Rng(cfg.seed).split(0);
  model::MMModel m(cfg.model, init_rng);
  std::cerr << "train: model has " << m.param_count() << " parameters\n";

  const train::FitResult res =
      train::fit(m, train_ds, val_ds, cfg.train, cfg.augment,
                 (out_dir / "model.ckpt").string(),
                 (out_dir / "train_log.tsv").string());

  write_text(out_dir / "val_report.txt",
             metrics::report_text(res.best_val_report));
  write_text(out_dir / "val_report.json",
             metrics::report_json(res.best_val_report));
  std::cerr << "train: ran " << res.epochs_run << " epochs, best epoch "
            << res.best_epoch << " (val loss " << res.best_val_loss
            << ", global F1 " << res.best_val_report.global_f1 << ")\n"
            << "train: artifacts in " << out_dir.string() << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string manifest;  // optional override
  std::string split = "val";
  std::string config_path;  // optional; default sits beside the checkpoint
};

int run_eval(const EvalArgs& a) {
  std::string config_path = a.config_path;
  if (config_path.empty()) {
    config_path =
        (fs::path(a.checkpoint).parent_path() / "config.json").string();
  }
  config::RunConfig cfg = config::load_config(config_path);
  if (!a.manifest.empty()) cfg.paths.manifest = a.manifest;

  const auto records = data::read_manifest(cfg.paths.manifest);
  const data::SplitSpec split = data::read_split(cfg.paths.split);
  const std::vector<std::string>* participants = nullptr;
  if (a.split == "train") participants = &split.train;
  if (a.split == "val") participants = &split.val;
  if (a.split == "test") participants = &split.test;
  const auto recs = data::select_split(records, *participants);
  if (recs.empty()) {
    throw std::runtime_error("split '" + a.split + "' selects zero clips");
  }

  train::Dataset ds = train::load_dataset(recs, cfg.paths.cache_dir,
                                          cfg.paths.manifest, false);
  Rng rng(0);
  model::MMModel m(cfg.model, rng);
  m.load(a.checkpoint);
  const metrics::MetricsReport rep =
      train::evaluate(m, ds, cfg.train.threshold);

  const std::string text = metrics::report_text(rep);
  std::cout << text;
  const fs::path dir = fs::path(a.checkpoint).parent_path();
  write_text(dir / ("eval_" + a.split + ".txt"), text);
  write_text(dir / ("eval_" + a.split + ".json"), metrics::report_json(rep));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal multitask cognitive-load toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* s = app.add_subcommand("synth", "generate a synthetic dataset");
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_option("--participants", synth.participants, "participant count")
      ->check([](const std::string& v) -> std::string {
        if (std::stoll(v) < 3) return "at least 3 participants are required";
        return {};
      });
  s->add_option("--clips-each", synth.clips_each, "clips per participant")
      ->check(CLI::PositiveNumber);
  s->add_option("--seed", synth.seed, "generator seed");
  s->add_option("--strength", synth.strength, "planted signal strength")
      ->check(CLI::NonNegativeNumber);

  PreprocessArgs pre;
  CLI::App* p = app.add_subcommand("preprocess", "build the tensor cache");
  p->add_option("--manifest", pre.manifest, "dataset manifest")->required();
  p->add_option("--cache", pre.cache, "cache directory")->required();
  p->add_option("--workers", pre.workers, "parallel clip workers")
      ->check(CLI::PositiveNumber);
  p->add_option("--config", pre.config_path, "run config for pipeline knobs");

  std::string train_config;
  CLI::App* t = app.add_subcommand("train", "train a model from a run config");
  t->add_option("--config", train_config, "run config file")->required();

  EvalArgs ev;
  CLI::App* e = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  e->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
  e->add_option("--manifest", ev.manifest, "manifest override");
  e->add_option("--split", ev.split, "which split to score")
      ->check(CLI::IsMember({"train", "val", "test"}));
  e->add_option("--config", ev.config_path,
                "run config (default: config.json beside the checkpoint)");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(s)) return run_synth(synth);
    if (app.got_subcommand(p)) return run_preprocess(pre);
    if (app.got_subcommand(t)) return run_train(train_config);
    if (app.got_subcommand(e)) return run_eval(ev);
    return 2;
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
