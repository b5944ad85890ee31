#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "mmtk/ops.hpp"
#include "mmtk/rng.hpp"
#include "mmtk/tensor.hpp"

// The audio-visual multitask network: a 2D-conv audio encoder and a 3D-conv
// video encoder meet in a cross-modal multihead attention block, followed by
// a shared trunk and three per-task sigmoid branches.

namespace mmtk::model {

// kPooled treats each clip as a single 128-d token per modality (the
// attention softmax is then a singleton and equals 1 exactly); kSequence
// keeps a short temporal token sequence per modality instead.
enum class AttentionMode { kPooled, kSequence };
enum class QueryFrom { kAudio, kVideo };
enum class Modality { kMultimodal, kAudioOnly, kVideoOnly };

// Four-branch 3D inception widths; out() is the concatenated channel count.
struct InceptionSpec {
  int b1;         // 1x1x1 branch
  int b2_reduce;  // 1x1x1 bottleneck feeding the first 3x3x3 branch
  int b2;
  int b3_reduce;
  int b3;
  int b4;  // 1x1x1 projection after the 3x3x3 stride-1 max-pool
  int out() const { return b1 + b2 + b3 + b4; }
};

struct ModelConfig {
  std::array<int, 4> audio_channels{16, 32, 64, 128};
  int video_stem_channels = 16;
  InceptionSpec inception1{16, 16, 32, 8, 8, 8};    // concat width 64
  InceptionSpec inception2{32, 32, 64, 16, 16, 16};  // concat width 128
  int d_model = 128;
  int heads = 4;
  int branch_hidden = 64;
  int seq_tokens = 4;  // tokens per modality in sequence mode
  AttentionMode attention_mode = AttentionMode::kPooled;
  QueryFrom query_from = QueryFrom::kAudio;
  Modality modality = Modality::kMultimodal;
  double dropout_p = 0.5;
  float bn_momentum = 0.1f;
  float bn_eps = 1e-5f;

  int d_k() const { return d_model / heads; }
  void validate() const;  // throws std::invalid_argument

  // quarter-width variant sized for CPU-budget end-to-end runs
  static ModelConfig desk_scale();
};

// Registry entry; the tensor handle shares storage with the owning layer.
struct NamedTensor {
  std::string name;
  Tensor<float> tensor;
};

struct ConvBnBlock {
  Tensor<float> w, b;
  Tensor<float> gamma, beta;
  Tensor<float> run_mean, run_var;
};

struct Conv3dUnit {
  Tensor<float> w, b;
};

struct LinearUnit {
  Tensor<float> w, b;
};

struct InceptionModule {
  Conv3dUnit b1, b2_reduce, b2, b3_reduce, b3, b4;
};

struct AttentionParams {
  std::vector<Tensor<float>> wq, wk, wv;  // per head, each [d_model, d_k]
  Tensor<float> wo;                       // [d_model, d_model]
};

struct BranchParams {
  LinearUnit fc1, fc2;
};

class MMModel {
 public:
  // Parameters are created and initialized in registry order from init_rng,
  // so equal seeds give bit-identical models.
  MMModel(const ModelConfig& cfg, Rng& init_rng);

  // mel [B,1,mels,frames] -> tokens [B,S,d_model] (S=1 when pooled)
  Tensor<float> audio_tokens(const Tensor<float>& mel, Mode mode, Rng& rng);
  // vol [B,1,D,H,W] -> tokens [B,S,d_model]
  Tensor<float> video_tokens(const Tensor<float>& vol, Mode mode, Rng& rng);

  // Scaled dot-product multihead attention over token sequences:
  // per head Q = q·Wq, K = kv·Wk, V = kv·Wv, weights = softmax(QK^T/sqrt(dk)),
  // output = Concat(heads)·Wo. Stores per-head weights for inspection.
  Tensor<float> attend_tokens(const Tensor<float>& query_tokens,
                              const Tensor<float>& kv_tokens);
  // feature-vector wrapper: audio [B,d] x video [B,d] -> [B,d]; the query
  // side follows config().query_from
  Tensor<float> attend(const Tensor<float>& audio_feat,
                       const Tensor<float>& video_feat);

  Tensor<float> shared_forward(const Tensor<float>& fused);
  // three branches on the shared representation, each [B] of probabilities,
  // order (mental_demand, effort, temporal_demand)
  std::array<Tensor<float>, 3> branches_forward(const Tensor<float>& shared,
                                                Mode mode, Rng& rng);
  std::array<Tensor<float>, 3> heads_forward(const Tensor<float>& fused,
                                             Mode mode, Rng& rng);

  // Full pipeline. Multimodal: encoders -> attention -> residual add of the
  // query tokens (keeps the query modality in the fused representation and
  // gives its encoder a gradient path even when the singleton softmax has a
  // zero Jacobian) -> token mean -> shared trunk -> branches. Ablations skip
  // the absent modality and the attention block entirely.
  std::array<Tensor<float>, 3> forward(const Tensor<float>& mel,
                                       const Tensor<float>& vol, Mode mode,
                                       Rng& rng);

  const ModelConfig& config() const { return cfg_; }
  std::vector<NamedTensor>& params() { return params_; }
  const std::vector<NamedTensor>& params() const { return params_; }
  std::vector<NamedTensor>& buffers() { return buffers_; }
  const std::vector<NamedTensor>& buffers() const { return buffers_; }
  // registry lookup; throws std::invalid_argument on unknown name
  Tensor<float> param(const std::string& name) const;
  std::size_t param_count() const;
  void zero_grad();

  // per-head attention weights [B,Sq,Skv] saved by the last attend call
  const std::vector<Tensor<float>>& last_attention() const {
    return last_attention_;
  }

  // checkpoint archive holding every parameter and running statistic
  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  Tensor<float> register_param(const std::string& name, Tensor<float> t);
  Tensor<float> register_buffer(const std::string& name, Tensor<float> t);
  LinearUnit make_linear(const std::string& name, int in, int out, Rng& rng);
  Conv3dUnit make_conv3d(const std::string& name, int in, int out, int k,
                         Rng& rng);
  InceptionModule make_inception(const std::string& name, int in,
                                 const InceptionSpec& spec, Rng& rng);
  Tensor<float> inception_forward(const Tensor<float>& x,
                                  const InceptionModule& m);

  ModelConfig cfg_;
  std::vector<ConvBnBlock> audio_blocks_;
  LinearUnit audio_fc_;
  Conv3dUnit video_stem_;
  InceptionModule incep1_, incep2_;
  LinearUnit video_fc_;
  AttentionParams attn_;
  LinearUnit shared_;
  std::array<BranchParams, 3> branches_;
  std::vector<NamedTensor> params_;
  std::vector<NamedTensor> buffers_;
  std::vector<Tensor<float>> last_attention_;
};

// canonical branch order used across training, metrics, and reports
extern const std::array<const char*, 3> kTaskNames;

}  // namespace mmtk::model
