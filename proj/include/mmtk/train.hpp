#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "mmtk/augment.hpp"
#include "mmtk/data.hpp"
#include "mmtk/metrics.hpp"
#include "mmtk/model.hpp"
#include "mmtk/tensor.hpp"
#include "mmtk/video.hpp"

// Multitask training: per-branch BCE losses combined by nonnegative weights,
// Adam with a step learning-rate schedule, strict-improvement early stopping
// on the global validation loss, best-checkpoint persistence, and a
// tab-separated epoch log.

namespace mmtk::train {

// -(1/N) * sum(y*log(p) + (1-y)*log(1-p)) with p clamped to
// [1e-7, 1 - 1e-7]; built from differentiable primitives so gradients flow
Tensor<float> bce_loss(const Tensor<float>& p, const Tensor<float>& y);
Tensor<double> bce_loss(const Tensor<double>& p, const Tensor<double>& y);

struct LossWeights {
  std::array<double, 3> w{1.0, 1.0, 1.0};
  void validate() const;  // all >= 0, at least one > 0
};

Tensor<float> global_loss(const std::array<Tensor<float>, 3>& losses,
                          const LossWeights& weights);
Tensor<double> global_loss(const std::array<Tensor<double>, 3>& losses,
                           const LossWeights& weights);

// bias-corrected Adam over the registered parameters
class Adam {
 public:
  explicit Adam(std::vector<model::NamedTensor>& params, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step(double lr);
  long step_count() const { return t_; }

 private:
  struct Slot {
    std::string name;
    Tensor<float> param;
    std::vector<float> m, v;
  };
  std::vector<Slot> slots_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

// lr = base * gamma^floor((epoch - 1) / step); epoch is 1-based
double step_lr(int epoch, double base_lr = 1e-3, int step = 10,
               double gamma = 0.1);

struct StopDecision {
  bool stop = false;
  int best_epoch = 0;  // 1-based; 0 when the history is empty
};

// Stops once `patience` consecutive epochs fail to strictly improve on the
// running best validation loss; ties count as non-improving.
StopDecision early_stop(const std::vector<double>& val_losses,
                        int patience = 10);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 256;
  double base_lr = 1e-3;
  int lr_step = 10;
  double lr_gamma = 0.1;
  int patience = 10;
  std::uint64_t seed = 0;
  LossWeights loss_weights;
  double threshold = 0.5;  // binarization threshold for validation F1
  void validate() const;
};

// One preprocessed clip. `vol` is the cached video volume; when visual
// augmentation is on, `raw` holds the source clip instead and volumes are
// produced per epoch.
struct Sample {
  Tensor<float> mel;  // [mels, frames]
  Tensor<float> vol;  // [depth, height, width]; may be undefined when raw set
  std::shared_ptr<video::VideoClip> raw;
  double native_fps = 5.0;
  std::array<int, 3> labels{};
};
using Dataset = std::vector<Sample>;

// Reads <clip_id>.audio.mmt / <clip_id>.video.mmt from cache_dir (or the raw
// video container when keep_raw_video is set, for train-time augmentation).
Dataset load_dataset(const std::vector<data::ClipRecord>& records,
                     const std::string& cache_dir,
                     const std::string& manifest_path,
                     bool keep_raw_video = false);

struct FitResult {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  metrics::MetricsReport best_val_report;
};

// Runs at most cfg.epochs epochs of shuffled minibatches (remainder kept),
// validates each epoch, persists the best checkpoint to checkpoint_path,
// appends one log line per epoch to log_path, honors early stopping, and
// finally reloads the best checkpoint into the model. Aborts with a
// diagnostic naming (epoch, batch, branch) if a loss turns NaN.
FitResult fit(model::MMModel& m, const Dataset& train_set,
              const Dataset& val_set, const TrainConfig& cfg,
              const augment::Policy& policy,
              const std::string& checkpoint_path, const std::string& log_path);

// Eval-mode batched forward over the dataset; throws on an empty dataset.
metrics::MetricsReport evaluate(model::MMModel& m, const Dataset& ds,
                                double threshold = 0.5, int batch_size = 32);

}  // namespace mmtk::train
