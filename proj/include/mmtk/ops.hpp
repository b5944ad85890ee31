#pragma once

#include <cstddef>
#include <vector>

#include "mmtk/rng.hpp"
#include "mmtk/tensor.hpp"

// Differentiable tensor operations. Every op validates shapes up front,
// computes the forward value eagerly, and (when any input requires grad)
// attaches a backward closure that accumulates into the parents' grad
// buffers. Gradients accumulate across repeated backward() calls until
// zero_grad().

namespace mmtk::ops {

// ---- elementwise ----
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
// scale * x + shift with scalar constants (covers scale/negate/one-minus)
template <typename T>
Tensor<T> affine(const Tensor<T>& x, T scale, T shift);
// x [..., n] + b [n] broadcast over leading dims
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& b);
template <typename T>
Tensor<T> relu(const Tensor<T>& x);
// numerically stable branch form; exact 0.5 at x = 0
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
// natural log; throws on non-positive input
template <typename T>
Tensor<T> log(const Tensor<T>& x);
template <typename T>
Tensor<T> exp(const Tensor<T>& x);
// gradient passes where lo <= x <= hi, zero outside
template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi);

// ---- linear algebra ----
// x [..., k] times w [k, n] -> [..., n]; leading dims flattened to rows
template <typename T>
Tensor<T> matmul(const Tensor<T>& x, const Tensor<T>& w);
// matmul(x, w) + b
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);
// batched products: a [B,m,k] x b [B,k,n] -> [B,m,n]
template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b);
// a [B,m,k] x b [B,n,k]^T -> [B,m,n]
template <typename T>
Tensor<T> bmm_nt(const Tensor<T>& a, const Tensor<T>& b);
// max-subtracted exponentiation; every slice along axis sums to 1
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);

// ---- shape ----
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& shape);
// [B, C, S] -> [B, S, C]
template <typename T>
Tensor<T> transpose12(const Tensor<T>& x);

// ---- reductions ----
template <typename T>
Tensor<T> mean_all(const Tensor<T>& x);
template <typename T>
Tensor<T> sum_all(const Tensor<T>& x);
// [B, S, d] -> [B, d], mean over the token axis
template <typename T>
Tensor<T> mean_tokens(const Tensor<T>& x);

// ---- convolution / pooling ----
// x [B,C,H,W], w [F,C,kh,kw], optional bias [F] (pass undefined to skip);
// cross-correlation, out extent floor((H + 2p - kh)/stride) + 1
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 int sh, int sw, int ph, int pw);
template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 int sd, int sh, int sw, int pd, int ph, int pw);
// gradient routed to the argmax; ties break to the lowest flat index;
// padding is -inf (window clipped to the valid region)
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x, int kh, int kw, int sh, int sw,
                    int ph = 0, int pw = 0);
template <typename T>
Tensor<T> maxpool3d(const Tensor<T>& x, int kd, int kh, int kw, int sd, int sh,
                    int sw, int pd = 0, int ph = 0, int pw = 0);
// canonical floor/ceil bin partition
template <typename T>
Tensor<T> adaptive_avg2d(const Tensor<T>& x, int oh, int ow);
template <typename T>
Tensor<T> adaptive_avg3d(const Tensor<T>& x, int od, int oh, int ow);

// ---- stateful layers ----
// channel axis is dim 1; train mode normalizes by batch statistics and
// updates running stats in place, eval mode reads running stats
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, Tensor<T>& running_mean,
                     Tensor<T>& running_var, T momentum, T eps, Mode mode);
// inverted dropout: train zeroes with probability p and scales survivors by
// 1/(1-p); eval is the identity; mask drawn serially from rng
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Mode mode, Rng& rng);

}  // namespace mmtk::ops
