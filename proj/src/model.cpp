#include "mmtk/model.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "mmtk/serialize.hpp"

namespace mmtk::model {

const std::array<const char*, 3> kTaskNames = {"mental_demand", "effort",
                                               "temporal_demand"};

void ModelConfig::validate() const {
  for (int c : audio_channels) {
    if (c < 1) throw std::invalid_argument("model: audio channels must be >= 1");
  }
  if (video_stem_channels < 1) {
    throw std::invalid_argument("model: video stem channels must be >= 1");
  }
  for (const InceptionSpec* s : {&inception1, &inception2}) {
    if (s->b1 < 1 || s->b2_reduce < 1 || s->b2 < 1 || s->b3_reduce < 1 ||
        s->b3 < 1 || s->b4 < 1) {
      throw std::invalid_argument("model: inception widths must be >= 1");
    }
  }
  if (d_model < 1 || heads < 1 || d_model % heads != 0) {
    throw std::invalid_argument(
        "model: heads must divide d_model (got d_model=" +
        std::to_string(d_model) + ", heads=" + std::to_string(heads) + ")");
  }
  if (branch_hidden < 1) {
    throw std::invalid_argument("model: branch hidden width must be >= 1");
  }
  if (seq_tokens < 1) {
    throw std::invalid_argument("model: seq_tokens must be >= 1");
  }
  if (dropout_p < 0.0 || dropout_p >= 1.0) {
    throw std::invalid_argument("model: dropout must lie in [0, 1)");
  }
}

ModelConfig ModelConfig::desk_scale() {
  ModelConfig cfg;
  cfg.audio_channels = {4, 8, 16, 32};
  cfg.video_stem_channels = 4;
  cfg.inception1 = {4, 4, 8, 2, 2, 2};    // concat width 16
  cfg.inception2 = {8, 8, 16, 4, 4, 4};   // concat width 32
  return cfg;
}

Tensor<float> MMModel::register_param(const std::string& name,
                                      Tensor<float> t) {
  params_.push_back({name, t});
  return t;
}

Tensor<float> MMModel::register_buffer(const std::string& name,
                                       Tensor<float> t) {
  buffers_.push_back({name, t});
  return t;
}

LinearUnit MMModel::make_linear(const std::string& name, int in, int out,
                                Rng& rng) {
  LinearUnit u;
  u.w = register_param(
      name + ".weight",
      Tensor<float>::kaiming_uniform({static_cast<std::size_t>(in),
                                      static_cast<std::size_t>(out)},
                                     static_cast<std::size_t>(in), rng));
  u.b = register_param(name + ".bias",
                       Tensor<float>::zeros({static_cast<std::size_t>(out)},
                                            /*requires_grad=*/true));
  return u;
}

Conv3dUnit MMModel::make_conv3d(const std::string& name, int in, int out,
                                int k, Rng& rng) {
  Conv3dUnit u;
  const std::size_t fan_in =
      static_cast<std::size_t>(in) * k * k * k;
  u.w = register_param(
      name + ".weight",
      Tensor<float>::kaiming_uniform(
          {static_cast<std::size_t>(out), static_cast<std::size_t>(in),
           static_cast<std::size_t>(k), static_cast<std::size_t>(k),
           static_cast<std::size_t>(k)},
          fan_in, rng));
  u.b = register_param(name + ".bias",
                       Tensor<float>::zeros({static_cast<std::size_t>(out)},
                                            /*requires_grad=*/true));
  return u;
}

InceptionModule MMModel::make_inception(const std::string& name, int in,
                                        const InceptionSpec& spec, Rng& rng) {
  InceptionModule m;
  m.b1 = make_conv3d(name + ".b1", in, spec.b1, 1, rng);
  m.b2_reduce = make_conv3d(name + ".b2_reduce", in, spec.b2_reduce, 1, rng);
  m.b2 = make_conv3d(name + ".b2", spec.b2_reduce, spec.b2, 3, rng);
  m.b3_reduce = make_conv3d(name + ".b3_reduce", in, spec.b3_reduce, 1, rng);
  m.b3 = make_conv3d(name + ".b3", spec.b3_reduce, spec.b3, 3, rng);
  m.b4 = make_conv3d(name + ".b4", in, spec.b4, 1, rng);
  return m;
}

MMModel::MMModel(const ModelConfig& cfg, Rng& init_rng) : cfg_(cfg) {
  cfg_.validate();
  const bool use_audio = cfg_.modality != Modality::kVideoOnly;
  const bool use_video = cfg_.modality != Modality::kAudioOnly;
  const bool pooled = cfg_.attention_mode == AttentionMode::kPooled;

  if (use_audio) {
    int in_ch = 1;
    for (int i = 0; i < 4; ++i) {
      const std::string name = "audio.block" + std::to_string(i + 1);
      const int out_ch = cfg_.audio_channels[static_cast<std::size_t>(i)];
      ConvBnBlock blk;
      blk.w = register_param(
          name + ".conv.weight",
          Tensor<float>::kaiming_uniform(
              {static_cast<std::size_t>(out_ch),
               static_cast<std::size_t>(in_ch), 3, 3},
              static_cast<std::size_t>(in_ch) * 9, init_rng));
      blk.b = register_param(
          name + ".conv.bias",
          Tensor<float>::zeros({static_cast<std::size_t>(out_ch)}, true));
      blk.gamma = register_param(
          name + ".bn.gamma",
          Tensor<float>::full({static_cast<std::size_t>(out_ch)}, 1.0f, true));
      blk.beta = register_param(
          name + ".bn.beta",
          Tensor<float>::zeros({static_cast<std::size_t>(out_ch)}, true));
      blk.run_mean = register_buffer(
          name + ".bn.running_mean",
          Tensor<float>::zeros({static_cast<std::size_t>(out_ch)}));
      blk.run_var = register_buffer(
          name + ".bn.running_var",
          Tensor<float>::full({static_cast<std::size_t>(out_ch)}, 1.0f));
      audio_blocks_.push_back(std::move(blk));
      in_ch = out_ch;
    }
    // pooled mode flattens the 4x4 adaptive grid; sequence mode projects one
    // token per retained time step
    const int fc_in = pooled ? cfg_.audio_channels[3] * 16
                             : cfg_.audio_channels[3];
    audio_fc_ = make_linear("audio.fc", fc_in, cfg_.d_model, init_rng);
  }

  if (use_video) {
    video_stem_ = make_conv3d("video.stem", 1, cfg_.video_stem_channels, 7,
                              init_rng);
    incep1_ = make_inception("video.incep1", cfg_.video_stem_channels,
                             cfg_.inception1, init_rng);
    incep2_ = make_inception("video.incep2", cfg_.inception1.out(),
                             cfg_.inception2, init_rng);
    video_fc_ = make_linear("video.fc", cfg_.inception2.out(), cfg_.d_model,
                            init_rng);
  }

  if (use_audio && use_video) {
    const std::size_t dm = static_cast<std::size_t>(cfg_.d_model);
    const std::size_t dk = static_cast<std::size_t>(cfg_.d_k());
    for (int h = 0; h < cfg_.heads; ++h) {
      const std::string name = "attn.head" + std::to_string(h + 1);
      attn_.wq.push_back(register_param(
          name + ".wq", Tensor<float>::kaiming_uniform({dm, dk}, dm,
                                                       init_rng)));
      attn_.wk.push_back(register_param(
          name + ".wk", Tensor<float>::kaiming_uniform({dm, dk}, dm,
                                                       init_rng)));
      attn_.wv.push_back(register_param(
          name + ".wv", Tensor<float>::kaiming_uniform({dm, dk}, dm,
                                                       init_rng)));
    }
    attn_.wo = register_param(
        "attn.wo", Tensor<float>::kaiming_uniform({dm, dm}, dm, init_rng));
  }

  shared_ = make_linear("shared", cfg_.d_model, cfg_.d_model, init_rng);
  for (int k = 0; k < 3; ++k) {
    const std::string name = std::string("branch.") + kTaskNames[k];
    branches_[static_cast<std::size_t>(k)].fc1 =
        make_linear(name + ".fc1", cfg_.d_model, cfg_.branch_hidden, init_rng);
    branches_[static_cast<std::size_t>(k)].fc2 =
        make_linear(name + ".fc2", cfg_.branch_hidden, 1, init_rng);
  }
}

Tensor<float> MMModel::audio_tokens(const Tensor<float>& mel, Mode mode,
                                    Rng& rng) {
  if (cfg_.modality == Modality::kVideoOnly) {
    throw std::logic_error("audio_tokens: model built without an audio path");
  }
  if (mel.rank() != 4 || mel.dim(1) != 1) {
    throw std::invalid_argument("audio_tokens: expected [B,1,mels,frames], got " +
                                shape_str(mel.shape()));
  }
  const std::size_t B = mel.dim(0);
  Tensor<float> x = mel;
  for (auto& blk : audio_blocks_) {
    x = ops::conv2d(x, blk.w, blk.b, 1, 1, 1, 1);
    x = ops::batch_norm(x, blk.gamma, blk.beta, blk.run_mean, blk.run_var,
                        cfg_.bn_momentum, cfg_.bn_eps, mode);
    x = ops::relu(x);
    x = ops::maxpool2d(x, 2, 2, 2, 2);
  }
  const std::size_t C = x.dim(1);
  const std::size_t dm = static_cast<std::size_t>(cfg_.d_model);
  if (cfg_.attention_mode == AttentionMode::kPooled) {
    x = ops::adaptive_avg2d(x, 4, 4);
    x = ops::reshape(x, {B, C * 16});
    x = ops::dropout(x, cfg_.dropout_p, mode, rng);
    x = ops::linear(x, audio_fc_.w, audio_fc_.b);
    return ops::reshape(x, {B, 1, dm});
  }
  const int S = cfg_.seq_tokens;
  x = ops::adaptive_avg2d(x, 1, S);
  x = ops::reshape(x, {B, C, static_cast<std::size_t>(S)});
  x = ops::transpose12(x);
  x = ops::dropout(x, cfg_.dropout_p, mode, rng);
  return ops::linear(x, audio_fc_.w, audio_fc_.b);
}

Tensor<float> MMModel::inception_forward(const Tensor<float>& x,
                                         const InceptionModule& m) {
  Tensor<float> br1 = ops::relu(ops::conv3d(x, m.b1.w, m.b1.b, 1, 1, 1, 0, 0, 0));
  Tensor<float> r2 =
      ops::relu(ops::conv3d(x, m.b2_reduce.w, m.b2_reduce.b, 1, 1, 1, 0, 0, 0));
  Tensor<float> br2 = ops::relu(ops::conv3d(r2, m.b2.w, m.b2.b, 1, 1, 1, 1, 1, 1));
  Tensor<float> r3 =
      ops::relu(ops::conv3d(x, m.b3_reduce.w, m.b3_reduce.b, 1, 1, 1, 0, 0, 0));
  Tensor<float> br3 = ops::relu(ops::conv3d(r3, m.b3.w, m.b3.b, 1, 1, 1, 1, 1, 1));
  Tensor<float> pooled = ops::maxpool3d(x, 3, 3, 3, 1, 1, 1, 1, 1, 1);
  Tensor<float> br4 =
      ops::relu(ops::conv3d(pooled, m.b4.w, m.b4.b, 1, 1, 1, 0, 0, 0));
  return ops::concat<float>({br1, br2, br3, br4}, 1);
}

Tensor<float> MMModel::video_tokens(const Tensor<float>& vol, Mode mode,
                                    Rng& rng) {
  if (cfg_.modality == Modality::kAudioOnly) {
    throw std::logic_error("video_tokens: model built without a video path");
  }
  if (vol.rank() != 5 || vol.dim(1) != 1) {
    throw std::invalid_argument("video_tokens: expected [B,1,D,H,W], got " +
                                shape_str(vol.shape()));
  }
  const std::size_t B = vol.dim(0);
  Tensor<float> x =
      ops::relu(ops::conv3d(vol, video_stem_.w, video_stem_.b, 2, 2, 2, 3, 3, 3));
  x = ops::maxpool3d(x, 1, 2, 2, 1, 2, 2);
  x = inception_forward(x, incep1_);
  x = ops::maxpool3d(x, 2, 2, 2, 2, 2, 2);
  x = inception_forward(x, incep2_);
  const std::size_t C = x.dim(1);
  const std::size_t dm = static_cast<std::size_t>(cfg_.d_model);
  if (cfg_.attention_mode == AttentionMode::kPooled) {
    x = ops::adaptive_avg3d(x, 1, 1, 1);
    x = ops::reshape(x, {B, C});
    x = ops::dropout(x, cfg_.dropout_p, mode, rng);
    x = ops::linear(x, video_fc_.w, video_fc_.b);
    return ops::reshape(x, {B, 1, dm});
  }
  const int S = cfg_.seq_tokens;
  x = ops::adaptive_avg3d(x, S, 1, 1);
  x = ops::reshape(x, {B, C, static_cast<std::size_t>(S)});
  x = ops::transpose12(x);
  x = ops::dropout(x, cfg_.dropout_p, mode, rng);
  return ops::linear(x, video_fc_.w, video_fc_.b);
}

Tensor<float> MMModel::attend_tokens(const Tensor<float>& query_tokens,
                                     const Tensor<float>& kv_tokens) {
  if (cfg_.modality != Modality::kMultimodal) {
    throw std::logic_error("attend_tokens: model built without attention");
  }
  const std::size_t dm = static_cast<std::size_t>(cfg_.d_model);
  if (query_tokens.rank() != 3 || kv_tokens.rank() != 3 ||
      query_tokens.dim(2) != dm || kv_tokens.dim(2) != dm ||
      query_tokens.dim(0) != kv_tokens.dim(0)) {
    throw std::invalid_argument(
        "attend_tokens: expected [B,S," + std::to_string(dm) + "] inputs, got " +
        shape_str(query_tokens.shape()) + " and " +
        shape_str(kv_tokens.shape()));
  }
  const float scale = 1.0f / std::sqrt(static_cast<float>(cfg_.d_k()));
  last_attention_.clear();
  std::vector<Tensor<float>> heads;
  heads.reserve(static_cast<std::size_t>(cfg_.heads));
  for (int h = 0; h < cfg_.heads; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    Tensor<float> q = ops::matmul(query_tokens, attn_.wq[hi]);
    Tensor<float> k = ops::matmul(kv_tokens, attn_.wk[hi]);
    Tensor<float> v = ops::matmul(kv_tokens, attn_.wv[hi]);
    Tensor<float> scores = ops::affine(ops::bmm_nt(q, k), scale, 0.0f);
    Tensor<float> weights = ops::softmax(scores, 2);
    last_attention_.push_back(weights.detach());
    heads.push_back(ops::bmm(weights, v));
  }
  Tensor<float> cat = ops::concat(heads, 2);
  return ops::matmul(cat, attn_.wo);
}

Tensor<float> MMModel::attend(const Tensor<float>& audio_feat,
                              const Tensor<float>& video_feat) {
  const std::size_t dm = static_cast<std::size_t>(cfg_.d_model);
  if (audio_feat.rank() != 2 || video_feat.rank() != 2 ||
      audio_feat.dim(1) != dm || video_feat.dim(1) != dm) {
    throw std::invalid_argument("attend: feature width must equal d_model=" +
                                std::to_string(cfg_.d_model) + ", got " +
                                shape_str(audio_feat.shape()) + " and " +
                                shape_str(video_feat.shape()));
  }
  const std::size_t B = audio_feat.dim(0);
  Tensor<float> a = ops::reshape(audio_feat, {B, 1, dm});
  Tensor<float> v = ops::reshape(video_feat, {B, 1, dm});
  const bool audio_query = cfg_.query_from == QueryFrom::kAudio;
  Tensor<float> out =
      audio_query ? attend_tokens(a, v) : attend_tokens(v, a);
  return ops::reshape(out, {B, dm});
}

Tensor<float> MMModel::shared_forward(const Tensor<float>& fused) {
  return ops::relu(ops::linear(fused, shared_.w, shared_.b));
}

std::array<Tensor<float>, 3> MMModel::branches_forward(
    const Tensor<float>& shared, Mode mode, Rng& rng) {
  const std::size_t B = shared.dim(0);
  std::array<Tensor<float>, 3> out;
  for (std::size_t k = 0; k < 3; ++k) {
    const BranchParams& br = branches_[k];
    Tensor<float> h = ops::relu(ops::linear(shared, br.fc1.w, br.fc1.b));
    h = ops::dropout(h, cfg_.dropout_p, mode, rng);
    Tensor<float> p = ops::sigmoid(ops::linear(h, br.fc2.w, br.fc2.b));
    out[k] = ops::reshape(p, {B});
  }
  return out;
}

std::array<Tensor<float>, 3> MMModel::heads_forward(const Tensor<float>& fused,
                                                    Mode mode, Rng& rng) {
  return branches_forward(shared_forward(fused), mode, rng);
}

std::array<Tensor<float>, 3> MMModel::forward(const Tensor<float>& mel,
                                              const Tensor<float>& vol,
                                              Mode mode, Rng& rng) {
  Tensor<float> fused;
  switch (cfg_.modality) {
    case Modality::kAudioOnly:
      fused = ops::mean_tokens(audio_tokens(mel, mode, rng));
      break;
    case Modality::kVideoOnly:
      fused = ops::mean_tokens(video_tokens(vol, mode, rng));
      break;
    case Modality::kMultimodal: {
      Tensor<float> a = audio_tokens(mel, mode, rng);
      Tensor<float> v = video_tokens(vol, mode, rng);
      const bool audio_query = cfg_.query_from == QueryFrom::kAudio;
      Tensor<float> query = audio_query ? a : v;
      Tensor<float> kv = audio_query ? v : a;
      Tensor<float> attn_out = attend_tokens(query, kv);
      fused = ops::mean_tokens(ops::add(attn_out, query));
      break;
    }
  }
  return heads_forward(fused, mode, rng);
}

Tensor<float> MMModel::param(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  for (const auto& b : buffers_) {
    if (b.name == name) return b.tensor;
  }
  throw std::invalid_argument("model: unknown parameter '" + name + "'");
}

std::size_t MMModel::param_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.tensor.numel();
  return total;
}

void MMModel::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

void MMModel::save(const std::string& path) const {
  std::vector<std::pair<std::string, Tensor<float>>> entries;
  entries.reserve(params_.size() + buffers_.size());
  for (const auto& p : params_) entries.emplace_back(p.name, p.tensor);
  for (const auto& b : buffers_) entries.emplace_back(b.name, b.tensor);
  io::save_archive(path, entries);
}

void MMModel::load(const std::string& path) {
  auto entries = io::load_archive<float>(path);
  std::unordered_map<std::string, Tensor<float>*> by_name;
  by_name.reserve(entries.size());
  for (auto& e : entries) by_name[e.first] = &e.second;
  if (entries.size() != params_.size() + buffers_.size()) {
    throw std::runtime_error(
        "checkpoint '" + path + "': entry count " +
        std::to_string(entries.size()) + " does not match model (" +
        std::to_string(params_.size() + buffers_.size()) + ")");
  }
  auto copy_into = [&](NamedTensor& dst) {
    auto it = by_name.find(dst.name);
    if (it == by_name.end()) {
      throw std::runtime_error("checkpoint '" + path + "': missing entry '" +
                               dst.name + "'");
    }
    if (it->second->shape() != dst.tensor.shape()) {
      throw std::runtime_error("checkpoint '" + path + "': entry '" +
                               dst.name + "' has shape " +
                               shape_str(it->second->shape()) + ", expected " +
                               shape_str(dst.tensor.shape()));
    }
    dst.tensor.data() = it->second->data();
  };
  for (auto& p : params_) copy_into(p);
  for (auto& b : buffers_) copy_into(b);
}

}  // namespace mmtk::model
