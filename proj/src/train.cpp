#include "mmtk/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "mmtk/ops.hpp"
#include "mmtk/serialize.hpp"

namespace mmtk::train {

namespace {

template <typename T>
Tensor<T> bce_impl(const Tensor<T>& p, const Tensor<T>& y) {
  if (!p.defined() || p.numel() == 0) {
    throw std::invalid_argument("bce_loss: empty batch");
  }
  if (p.shape() != y.shape()) {
    throw std::invalid_argument("bce_loss: prediction shape " +
                                shape_str(p.shape()) + " vs label shape " +
                                shape_str(y.shape()));
  }
  const T lo = static_cast<T>(1e-7);
  const T hi = static_cast<T>(1.0 - 1e-7);
  Tensor<T> pc = ops::clamp(p, lo, hi);
  Tensor<T> pos = ops::mul(y, ops::log(pc));
  Tensor<T> neg = ops::mul(ops::affine(y, T(-1), T(1)),
                           ops::log(ops::affine(pc, T(-1), T(1))));
  Tensor<T> mean = ops::mean_all(ops::add(pos, neg));
  return ops::affine(mean, T(-1), T(0));
}

template <typename T>
Tensor<T> global_loss_impl(const std::array<Tensor<T>, 3>& losses,
                           const LossWeights& weights) {
  weights.validate();
  Tensor<T> acc = ops::affine(losses[0], static_cast<T>(weights.w[0]), T(0));
  for (std::size_t k = 1; k < 3; ++k) {
    acc = ops::add(acc,
                   ops::affine(losses[k], static_cast<T>(weights.w[k]), T(0)));
  }
  return acc;
}

struct Batch {
  Tensor<float> mel;               // [B,1,mels,frames]
  Tensor<float> vol;               // [B,1,D,H,W]
  std::array<Tensor<float>, 3> y;  // [B]
  std::size_t size = 0;
};

Tensor<float> sample_volume(const Sample& s, const augment::Policy* policy,
                            Rng* aug_rng) {
  if (s.raw != nullptr) {
    std::vector<video::Image> frames = video::decode_resized(*s.raw,
                                                             s.native_fps);
    if (policy != nullptr && policy->visual.enabled && aug_rng != nullptr) {
      augment::visual_augment(frames, policy->visual, *aug_rng);
    }
    return video::finish_volume(frames);
  }
  if (!s.vol.defined()) {
    throw std::logic_error("sample has neither a cached volume nor raw video");
  }
  return s.vol;
}

Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& order,
                 std::size_t begin, std::size_t end,
                 const augment::Policy* policy, Rng* aug_rng) {
  Batch b;
  b.size = end - begin;
  const Sample& first = ds[order[begin]];
  const std::size_t mels = first.mel.dim(0), frames = first.mel.dim(1);
  Tensor<float> vol0 = sample_volume(first, nullptr, nullptr);
  const std::size_t D = vol0.dim(0), H = vol0.dim(1), W = vol0.dim(2);

  b.mel = Tensor<float>::zeros({b.size, 1, mels, frames});
  b.vol = Tensor<float>::zeros({b.size, 1, D, H, W});
  std::array<std::vector<float>, 3> labels;
  for (auto& l : labels) l.resize(b.size);

  for (std::size_t i = 0; i < b.size; ++i) {
    const Sample& s = ds[order[begin + i]];
    if (s.mel.dim(0) != mels || s.mel.dim(1) != frames) {
      throw std::invalid_argument("batch: inconsistent spectrogram shapes (" +
                                  shape_str(s.mel.shape()) + " vs " +
                                  shape_str(first.mel.shape()) + ")");
    }
    Tensor<float> mel = s.mel;
    if (policy != nullptr && policy->audio.enabled && aug_rng != nullptr) {
      mel = augment::augment_audio(mel, policy->audio, *aug_rng);
    }
    std::memcpy(b.mel.data().data() + i * mels * frames, mel.data().data(),
                mels * frames * sizeof(float));
    Tensor<float> vol = sample_volume(s, policy, aug_rng);
    if (vol.dim(0) != D || vol.dim(1) != H || vol.dim(2) != W) {
      throw std::invalid_argument("batch: inconsistent volume shapes");
    }
    std::memcpy(b.vol.data().data() + i * D * H * W, vol.data().data(),
                D * H * W * sizeof(float));
    for (std::size_t k = 0; k < 3; ++k) {
      labels[k][i] = static_cast<float>(s.labels[k]);
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    b.y[k] = Tensor<float>::from({b.size}, std::move(labels[k]));
  }
  return b;
}

struct ValResult {
  double loss = 0.0;
  metrics::MetricsReport report;
};

ValResult run_validation(model::MMModel& m, const Dataset& val,
                         const TrainConfig& cfg) {
  Rng unused(0);
  std::vector<std::size_t> order(val.size());
  std::iota(order.begin(), order.end(), 0);
  std::array<double, 3> loss_sums{};
  std::array<std::vector<float>, 3> probs;
  std::array<std::vector<int>, 3> labels;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (std::size_t begin = 0; begin < val.size(); begin += bs) {
    const std::size_t end = std::min(begin + bs, val.size());
    Batch b = make_batch(val, order, begin, end, nullptr, nullptr);
    auto out = m.forward(b.mel, b.vol, Mode::kEval, unused);
    for (std::size_t k = 0; k < 3; ++k) {
      Tensor<float> loss = bce_loss(out[k], b.y[k]);
      loss_sums[k] += static_cast<double>(loss.item()) *
                      static_cast<double>(b.size);
      for (std::size_t i = 0; i < b.size; ++i) {
        probs[k].push_back(out[k].data()[i]);
        labels[k].push_back(static_cast<int>(b.y[k].data()[i]));
      }
    }
  }
  ValResult r;
  for (std::size_t k = 0; k < 3; ++k) {
    r.loss += cfg.loss_weights.w[k] *
              (loss_sums[k] / static_cast<double>(val.size()));
  }
  r.report = metrics::compute_report(probs, labels, cfg.threshold);
  return r;
}

}  // namespace

Tensor<float> bce_loss(const Tensor<float>& p, const Tensor<float>& y) {
  return bce_impl(p, y);
}
Tensor<double> bce_loss(const Tensor<double>& p, const Tensor<double>& y) {
  return bce_impl(p, y);
}

void LossWeights::validate() const {
  double mx = 0.0;
  for (double x : w) {
    if (x < 0.0) {
      throw std::invalid_argument("loss weights must be nonnegative");
    }
    mx = std::max(mx, x);
  }
  if (mx == 0.0) {
    throw std::invalid_argument("at least one loss weight must be positive");
  }
}

Tensor<float> global_loss(const std::array<Tensor<float>, 3>& losses,
                          const LossWeights& weights) {
  return global_loss_impl(losses, weights);
}
Tensor<double> global_loss(const std::array<Tensor<double>, 3>& losses,
                           const LossWeights& weights) {
  return global_loss_impl(losses, weights);
}

Adam::Adam(std::vector<model::NamedTensor>& params, double beta1, double beta2,
           double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  slots_.reserve(params.size());
  for (auto& p : params) {
    if (!p.tensor.requires_grad()) {
      throw std::invalid_argument("adam: parameter '" + p.name +
                                  "' has no gradient buffer");
    }
    Slot s;
    s.name = p.name;
    s.param = p.tensor;
    s.m.assign(p.tensor.numel(), 0.0f);
    s.v.assign(p.tensor.numel(), 0.0f);
    slots_.push_back(std::move(s));
  }
}

void Adam::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Slot& s : slots_) {
    const std::vector<float>& g = s.param.grad();
    std::vector<float>& theta = s.param.data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = beta1_ * s.m[i] + (1.0 - beta1_) * gi;
      const double vi = beta2_ * s.v[i] + (1.0 - beta2_) * gi * gi;
      s.m[i] = static_cast<float>(mi);
      s.v[i] = static_cast<float>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      theta[i] = static_cast<float>(theta[i] -
                                    lr * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

double step_lr(int epoch, double base_lr, int step, double gamma) {
  if (epoch < 1) throw std::invalid_argument("step_lr: epoch is 1-based");
  if (step < 1) throw std::invalid_argument("step_lr: step must be >= 1");
  return base_lr * std::pow(gamma, (epoch - 1) / step);
}

StopDecision early_stop(const std::vector<double>& val_losses, int patience) {
  if (val_losses.empty()) {
    throw std::invalid_argument("early_stop: empty history");
  }
  if (patience < 1) {
    throw std::invalid_argument("early_stop: patience must be >= 1");
  }
  double best = val_losses[0];
  int best_epoch = 1;
  for (std::size_t i = 1; i < val_losses.size(); ++i) {
    if (val_losses[i] < best) {
      best = val_losses[i];
      best_epoch = static_cast<int>(i) + 1;
    }
  }
  const int since = static_cast<int>(val_losses.size()) - best_epoch;
  return {since >= patience, best_epoch};
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 1) {
    throw std::invalid_argument("train: batch_size must be >= 1");
  }
  if (patience < 1 || patience > epochs) {
    throw std::invalid_argument("train: need 1 <= patience <= epochs");
  }
  if (!(base_lr > 0.0)) throw std::invalid_argument("train: base_lr <= 0");
  if (lr_step < 1) throw std::invalid_argument("train: lr_step must be >= 1");
  if (!(lr_gamma > 0.0)) throw std::invalid_argument("train: lr_gamma <= 0");
  if (threshold < 0.0 || threshold > 1.0) {
    throw std::invalid_argument("train: threshold must lie in [0, 1]");
  }
  loss_weights.validate();
}

Dataset load_dataset(const std::vector<data::ClipRecord>& records,
                     const std::string& cache_dir,
                     const std::string& manifest_path, bool keep_raw_video) {
  Dataset ds;
  ds.reserve(records.size());
  for (const data::ClipRecord& r : records) {
    Sample s;
    const std::filesystem::path cache(cache_dir);
    s.mel = io::load_tensor<float>((cache / (r.clip_id + ".audio.mmt")).string());
    if (s.mel.rank() != 2) {
      throw std::runtime_error("cache: expected a rank-2 spectrogram for '" +
                               r.clip_id + "', got " +
                               shape_str(s.mel.shape()));
    }
    if (keep_raw_video) {
      s.raw = std::make_shared<video::VideoClip>(video::read_mmv1(
          data::resolve_path(manifest_path, r.video_path)));
      s.native_fps = static_cast<double>(s.raw->frames) / r.duration_seconds;
    } else {
      s.vol =
          io::load_tensor<float>((cache / (r.clip_id + ".video.mmt")).string());
      if (s.vol.rank() != 3) {
        throw std::runtime_error("cache: expected a rank-3 volume for '" +
                                 r.clip_id + "', got " +
                                 shape_str(s.vol.shape()));
      }
    }
    s.labels = r.labels;
    ds.push_back(std::move(s));
  }
  return ds;
}

FitResult fit(model::MMModel& m, const Dataset& train_set,
              const Dataset& val_set, const TrainConfig& cfg,
              const augment::Policy& policy,
              const std::string& checkpoint_path,
              const std::string& log_path) {
  cfg.validate();
  if (train_set.empty() || val_set.empty()) {
    throw std::invalid_argument("fit: train and val sets must be nonempty");
  }
  Rng root(cfg.seed);
  Rng shuffle_rng = root.split(1);
  Rng dropout_rng = root.split(2);
  Rng aug_rng = root.split(3);
  Adam adam(m.params());

  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw std::runtime_error("cannot write epoch log '" + log_path + "'");
  log << "epoch\tlr";
  for (const char* t : model::kTaskNames) log << "\ttrain_loss_" << t;
  log << "\tval_loss";
  for (const char* t : model::kTaskNames) log << "\tval_f1_" << t;
  log << "\n";

  FitResult res;
  std::vector<double> val_history;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = step_lr(epoch, cfg.base_lr, cfg.lr_step, cfg.lr_gamma);
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    std::array<double, 3> train_loss{};
    int batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += bs) {
      const std::size_t end = std::min(begin + bs, order.size());
      Batch b = make_batch(train_set, order, begin, end, &policy, &aug_rng);
      auto out = m.forward(b.mel, b.vol, Mode::kTrain, dropout_rng);
      std::array<Tensor<float>, 3> losses;
      for (std::size_t k = 0; k < 3; ++k) {
        losses[k] = bce_loss(out[k], b.y[k]);
        if (std::isnan(losses[k].item())) {
          throw std::runtime_error(
              "training aborted: NaN loss at epoch " + std::to_string(epoch) +
              ", batch " + std::to_string(batch_index) + ", branch " +
              model::kTaskNames[k]);
        }
        train_loss[k] += static_cast<double>(losses[k].item()) *
                         static_cast<double>(b.size);
      }
      Tensor<float> total = global_loss(losses, cfg.loss_weights);
      m.zero_grad();
      total.backward();
      adam.step(lr);
      ++batch_index;
    }
    for (double& v : train_loss) v /= static_cast<double>(train_set.size());

    const ValResult val = run_validation(m, val_set, cfg);
    val_history.push_back(val.loss);
    res.epochs_run = epoch;

    char line[512];
    std::snprintf(line, sizeof line,
                  "%d\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\n",
                  epoch, lr, train_loss[0], train_loss[1], train_loss[2],
                  val.loss, val.report.task_f1[0], val.report.task_f1[1],
                  val.report.task_f1[2]);
    log << line;
    log.flush();

    if (val.loss < res.best_val_loss) {
      res.best_val_loss = val.loss;
      res.best_epoch = epoch;
      res.best_val_report = val.report;
      m.save(checkpoint_path);
    }
    if (early_stop(val_history, cfg.patience).stop) break;
  }

  m.load(checkpoint_path);
  return res;
}

metrics::MetricsReport evaluate(model::MMModel& m, const Dataset& ds,
                                double threshold, int batch_size) {
  if (ds.empty()) throw std::invalid_argument("evaluate: empty dataset");
  if (batch_size < 1) {
    throw std::invalid_argument("evaluate: batch_size must be >= 1");
  }
  Rng unused(0);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::array<std::vector<float>, 3> probs;
  std::array<std::vector<int>, 3> labels;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t begin = 0; begin < ds.size(); begin += bs) {
    const std::size_t end = std::min(begin + bs, ds.size());
    Batch b = make_batch(ds, order, begin, end, nullptr, nullptr);
    auto out = m.forward(b.mel, b.vol, Mode::kEval, unused);
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t i = 0; i < b.size; ++i) {
        probs[k].push_back(out[k].data()[i]);
        labels[k].push_back(static_cast<int>(b.y[k].data()[i]));
      }
    }
  }
  return metrics::compute_report(probs, labels, threshold);
}

}  // namespace mmtk::train
