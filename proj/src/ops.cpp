#include "mmtk/ops.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

#include "mmtk/kernels.hpp"

namespace mmtk::ops {

namespace {

template <typename T>
bool any_grad(const Tensor<T>& a) {
  return a.requires_grad();
}

template <typename T, typename... Rest>
bool any_grad(const Tensor<T>& a, const Rest&... rest) {
  return a.requires_grad() || any_grad(rest...);
}

// output extent of a strided correlation, or -1 if the kernel does not fit
inline int conv_out(int in, int k, int stride, int pad) {
  const int span = in + 2 * pad - k;
  if (span < 0) return -1;
  return span / stride + 1;
}

}  // namespace

// ---------------------------------------------------------------- elementwise

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("add: shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  }
  const bool rg = any_grad(a, b);
  Tensor<T> out = Tensor<T>::zeros(a.shape(), rg);
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i) {
    out.data()[i] = a.data()[i] + b.data()[i];
  }
  if (rg) {
    auto pa = a.impl(), pb = b.impl();
    out.impl()->parents = {pa, pb};
    out.impl()->backward_fn = [pa, pb](TensorImpl<T>& self) {
      const std::size_t n = self.data.size();
      if (pa->requires_grad) {
        for (std::size_t i = 0; i < n; ++i) pa->grad[i] += self.grad[i];
      }
      if (pb->requires_grad) {
        for (std::size_t i = 0; i < n; ++i) pb->grad[i] += self.grad[i];
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("mul: shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  }
  const bool rg = any_grad(a, b);
  Tensor<T> out = Tensor<T>::zeros(a.shape(), rg);
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i) {
    out.data()[i] = a.data()[i] * b.data()[i];
  }
  if (rg) {
    auto pa = a.impl(), pb = b.impl();
    out.impl()->parents = {pa, pb};
    out.impl()->backward_fn = [pa, pb](TensorImpl<T>& self) {
      const std::size_t n = self.data.size();
      if (pa->requires_grad) {
        for (std::size_t i = 0; i < n; ++i) {
          pa->grad[i] += self.grad[i] * pb->data[i];
        }
      }
      if (pb->requires_grad) {
        for (std::size_t i = 0; i < n; ++i) {
          pb->grad[i] += self.grad[i] * pa->data[i];
        }
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> affine(const Tensor<T>& x, T scale, T shift) {
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros(x.shape(), rg);
  const std::size_t n = x.numel();
  for (std::size_t i = 0; i < n; ++i) {
    out.data()[i] = scale * x.data()[i] + shift;
  }
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px, scale](TensorImpl<T>& self) {
      const std::size_t n = self.data.size();
      for (std::size_t i = 0; i < n; ++i) px->grad[i] += scale * self.grad[i];
    };
  }
  return out;
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& b) {
  if (b.rank() != 1 || x.rank() < 1 ||
      x.shape().back() != b.dim(0)) {
    throw std::invalid_argument("add_bias: shape mismatch " +
                                shape_str(x.shape()) + " vs " +
                                shape_str(b.shape()));
  }
  const std::size_t n = b.dim(0);
  const std::size_t rows = x.numel() / n;
  const bool rg = any_grad(x, b);
  Tensor<T> out = Tensor<T>::zeros(x.shape(), rg);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      out.data()[r * n + j] = x.data()[r * n + j] + b.data()[j];
    }
  }
  if (rg) {
    auto px = x.impl(), pb = b.impl();
    out.impl()->parents = {px, pb};
    out.impl()->backward_fn = [px, pb, rows, n](TensorImpl<T>& self) {
      if (px->requires_grad) {
        for (std::size_t i = 0; i < rows * n; ++i) {
          px->grad[i] += self.grad[i];
        }
      }
      if (pb->requires_grad) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < n; ++j) {
            pb->grad[j] += self.grad[r * n + j];
          }
        }
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros(x.shape(), rg);
  const std::size_t n = x.numel();
  for (std::size_t i = 0; i < n; ++i) {
    const T v = x.data()[i];
    out.data()[i] = v > T(0) ? v : T(0);
  }
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px](TensorImpl<T>& self) {
      const std::size_t n = self.data.size();
      for (std::size_t i = 0; i < n; ++i) {
        if (px->data[i] > T(0)) px->grad[i] += self.grad[i];
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros(x.shape(), rg);
  const std::size_t n = x.numel();
  for (std::size_t i = 0; i < n; ++i) {
    const T v = x.data()[i];
    if (v >= T(0)) {
      out.data()[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out.data()[i] = e / (T(1) + e);
    }
  }
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px](TensorImpl<T>& self) {
      const std::size_t n = self.data.size();
      for (std::size_t i = 0; i < n; ++i) {
        const T y = self.data[i];
        px->grad[i] += self.grad[i] * y * (T(1) - y);
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> log(const Tensor<T>& x) {
  // NaN is deliberately let through so a poisoned loss can be diagnosed by
  // the trainer; only genuine non-positive values are rejected here
  for (T v : x.data()) {
    if (v <= T(0)) {
      throw std::domain_error("log: input must be strictly positive, got " +
                              std::to_string(static_cast<double>(v)));
    }
  }
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros(x.shape(), rg);
  const std::size_t n = x.numel();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = std::log(x.data()[i]);
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px](TensorImpl<T>& self) {
      const std::size_t n = self.data.size();
      for (std::size_t i = 0; i < n; ++i) {
        px->grad[i] += self.grad[i] / px->data[i];
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> exp(const Tensor<T>& x) {
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros(x.shape(), rg);
  const std::size_t n = x.numel();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = std::exp(x.data()[i]);
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px](TensorImpl<T>& self) {
      const std::size_t n = self.data.size();
      for (std::size_t i = 0; i < n; ++i) {
        px->grad[i] += self.grad[i] * self.data[i];
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo must be <= hi");
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros(x.shape(), rg);
  const std::size_t n = x.numel();
  for (std::size_t i = 0; i < n; ++i) {
    const T v = x.data()[i];
    out.data()[i] = v < lo ? lo : (v > hi ? hi : v);
  }
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px, lo, hi](TensorImpl<T>& self) {
      const std::size_t n = self.data.size();
      for (std::size_t i = 0; i < n; ++i) {
        const T v = px->data[i];
        if (v >= lo && v <= hi) px->grad[i] += self.grad[i];
      }
    };
  }
  return out;
}

// ------------------------------------------------------------- linear algebra

template <typename T>
Tensor<T> matmul(const Tensor<T>& x, const Tensor<T>& w) {
  if (x.rank() < 1 || w.rank() != 2 || x.shape().back() != w.dim(0)) {
    throw std::invalid_argument("matmul: inner dimensions disagree: " +
                                shape_str(x.shape()) + " vs " +
                                shape_str(w.shape()));
  }
  const std::size_t k = w.dim(0), n = w.dim(1);
  const std::size_t m = x.numel() / k;
  Shape out_shape = x.shape();
  out_shape.back() = n;
  const bool rg = any_grad(x, w);
  Tensor<T> out = Tensor<T>::zeros(out_shape, rg);
  kern::matmul(x.data().data(), w.data().data(), out.data().data(),
               static_cast<int>(m), static_cast<int>(k), static_cast<int>(n));
  if (rg) {
    auto px = x.impl(), pw = w.impl();
    out.impl()->parents = {px, pw};
    out.impl()->backward_fn = [px, pw, m, k, n](TensorImpl<T>& self) {
      if (px->requires_grad) {
        std::vector<T> tmp(m * k);
        kern::matmul_nt(self.grad.data(), pw->data.data(), tmp.data(),
                        static_cast<int>(m), static_cast<int>(n),
                        static_cast<int>(k));
        for (std::size_t i = 0; i < tmp.size(); ++i) px->grad[i] += tmp[i];
      }
      if (pw->requires_grad) {
        std::vector<T> tmp(k * n);
        kern::matmul_tn(px->data.data(), self.grad.data(), tmp.data(),
                        static_cast<int>(k), static_cast<int>(m),
                        static_cast<int>(n));
        for (std::size_t i = 0; i < tmp.size(); ++i) pw->grad[i] += tmp[i];
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  return add_bias(matmul(x, w), b);
}

template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) ||
      a.dim(2) != b.dim(1)) {
    throw std::invalid_argument("bmm: shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  }
  const std::size_t B = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  const bool rg = any_grad(a, b);
  Tensor<T> out = Tensor<T>::zeros({B, m, n}, rg);
  for (std::size_t i = 0; i < B; ++i) {
    kern::matmul(a.data().data() + i * m * k, b.data().data() + i * k * n,
                 out.data().data() + i * m * n, static_cast<int>(m),
                 static_cast<int>(k), static_cast<int>(n));
  }
  if (rg) {
    auto pa = a.impl(), pb = b.impl();
    out.impl()->backward_fn = [pa, pb, B, m, k, n](TensorImpl<T>& self) {
      std::vector<T> tmp;
      for (std::size_t i = 0; i < B; ++i) {
        const T* dy = self.grad.data() + i * m * n;
        if (pa->requires_grad) {
          tmp.assign(m * k, T(0));
          kern::matmul_nt(dy, pb->data.data() + i * k * n, tmp.data(),
                          static_cast<int>(m), static_cast<int>(n),
                          static_cast<int>(k));
          T* g = pa->grad.data() + i * m * k;
          for (std::size_t j = 0; j < tmp.size(); ++j) g[j] += tmp[j];
        }
        if (pb->requires_grad) {
          tmp.assign(k * n, T(0));
          kern::matmul_tn(pa->data.data() + i * m * k, dy, tmp.data(),
                          static_cast<int>(k), static_cast<int>(m),
                          static_cast<int>(n));
          T* g = pb->grad.data() + i * k * n;
          for (std::size_t j = 0; j < tmp.size(); ++j) g[j] += tmp[j];
        }
      }
    };
    out.impl()->parents = {pa, pb};
  }
  return out;
}

template <typename T>
Tensor<T> bmm_nt(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) ||
      a.dim(2) != b.dim(2)) {
    throw std::invalid_argument("bmm_nt: shape mismatch " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
  const std::size_t B = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(1);
  const bool rg = any_grad(a, b);
  Tensor<T> out = Tensor<T>::zeros({B, m, n}, rg);
  for (std::size_t i = 0; i < B; ++i) {
    kern::matmul_nt(a.data().data() + i * m * k, b.data().data() + i * n * k,
                    out.data().data() + i * m * n, static_cast<int>(m),
                    static_cast<int>(k), static_cast<int>(n));
  }
  if (rg) {
    auto pa = a.impl(), pb = b.impl();
    out.impl()->backward_fn = [pa, pb, B, m, k, n](TensorImpl<T>& self) {
      std::vector<T> tmp;
      for (std::size_t i = 0; i < B; ++i) {
        const T* dy = self.grad.data() + i * m * n;
        if (pa->requires_grad) {
          tmp.assign(m * k, T(0));
          kern::matmul(dy, pb->data.data() + i * n * k, tmp.data(),
                       static_cast<int>(m), static_cast<int>(n),
                       static_cast<int>(k));
          T* g = pa->grad.data() + i * m * k;
          for (std::size_t j = 0; j < tmp.size(); ++j) g[j] += tmp[j];
        }
        if (pb->requires_grad) {
          tmp.assign(n * k, T(0));
          kern::matmul_tn(dy, pa->data.data() + i * m * k, tmp.data(),
                          static_cast<int>(n), static_cast<int>(m),
                          static_cast<int>(k));
          T* g = pb->grad.data() + i * n * k;
          for (std::size_t j = 0; j < tmp.size(); ++j) g[j] += tmp[j];
        }
      }
    };
    out.impl()->parents = {pa, pb};
  }
  return out;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw std::invalid_argument("softmax: axis " + std::to_string(axis) +
                                " out of range for " + shape_str(x.shape()));
  }
  const std::size_t L = x.dim(axis);
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros(x.shape(), rg);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * L * inner + in;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t l = 0; l < L; ++l) {
        mx = std::max(mx, x.data()[base + l * inner]);
      }
      T sum = T(0);
      for (std::size_t l = 0; l < L; ++l) {
        const T e = std::exp(x.data()[base + l * inner] - mx);
        out.data()[base + l * inner] = e;
        sum += e;
      }
      for (std::size_t l = 0; l < L; ++l) out.data()[base + l * inner] /= sum;
    }
  }
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px, L, outer, inner](TensorImpl<T>& self) {
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t base = o * L * inner + in;
          T dot = T(0);
          for (std::size_t l = 0; l < L; ++l) {
            const std::size_t idx = base + l * inner;
            dot += self.grad[idx] * self.data[idx];
          }
          for (std::size_t l = 0; l < L; ++l) {
            const std::size_t idx = base + l * inner;
            px->grad[idx] += self.data[idx] * (self.grad[idx] - dot);
          }
        }
      }
    };
  }
  return out;
}

// ------------------------------------------------------------------- shape

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) {
    throw std::invalid_argument("concat: axis " + std::to_string(axis) +
                                " out of range for " + shape_str(s0));
  }
  std::size_t total = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.rank() != s0.size()) {
      throw std::invalid_argument("concat: rank mismatch " + shape_str(s0) +
                                  " vs " + shape_str(p.shape()));
    }
    for (std::size_t i = 0; i < s0.size(); ++i) {
      if (i != axis && p.dim(i) != s0[i]) {
        throw std::invalid_argument("concat: off-axis extent mismatch " +
                                    shape_str(s0) + " vs " +
                                    shape_str(p.shape()));
      }
    }
    total += p.dim(axis);
    rg = rg || p.requires_grad();
  }
  Shape out_shape = s0;
  out_shape[axis] = total;
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s0[i];
  for (std::size_t i = axis + 1; i < s0.size(); ++i) inner *= s0[i];

  Tensor<T> out = Tensor<T>::zeros(out_shape, rg);
  std::size_t pos = 0;
  for (const auto& p : parts) {
    const std::size_t ext = p.dim(axis);
    for (std::size_t o = 0; o < outer; ++o) {
      std::memcpy(out.data().data() + (o * total + pos) * inner,
                  p.data().data() + o * ext * inner,
                  ext * inner * sizeof(T));
    }
    pos += ext;
  }
  if (rg) {
    std::vector<std::shared_ptr<TensorImpl<T>>> impls;
    std::vector<std::size_t> extents;
    for (const auto& p : parts) {
      impls.push_back(p.impl());
      extents.push_back(p.dim(axis));
    }
    out.impl()->parents = impls;
    out.impl()->backward_fn = [impls, extents, outer, inner,
                               total](TensorImpl<T>& self) {
      std::size_t pos = 0;
      for (std::size_t pi = 0; pi < impls.size(); ++pi) {
        const std::size_t ext = extents[pi];
        if (impls[pi]->requires_grad) {
          for (std::size_t o = 0; o < outer; ++o) {
            const T* src = self.grad.data() + (o * total + pos) * inner;
            T* dst = impls[pi]->grad.data() + o * ext * inner;
            for (std::size_t j = 0; j < ext * inner; ++j) dst[j] += src[j];
          }
        }
        pos += ext;
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& shape) {
  if (shape_numel(shape) != x.numel()) {
    throw std::invalid_argument("reshape: cannot view " +
                                shape_str(x.shape()) + " as " +
                                shape_str(shape));
  }
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::from(shape, x.data(), rg);
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px](TensorImpl<T>& self) {
      const std::size_t n = self.data.size();
      for (std::size_t i = 0; i < n; ++i) px->grad[i] += self.grad[i];
    };
  }
  return out;
}

template <typename T>
Tensor<T> transpose12(const Tensor<T>& x) {
  if (x.rank() != 3) {
    throw std::invalid_argument("transpose12: expected rank 3, got " +
                                shape_str(x.shape()));
  }
  const std::size_t B = x.dim(0), C = x.dim(1), S = x.dim(2);
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros({B, S, C}, rg);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t s = 0; s < S; ++s) {
        out.data()[(b * S + s) * C + c] = x.data()[(b * C + c) * S + s];
      }
    }
  }
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px, B, C, S](TensorImpl<T>& self) {
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t s = 0; s < S; ++s) {
            px->grad[(b * C + c) * S + s] += self.grad[(b * S + s) * C + c];
          }
        }
      }
    };
  }
  return out;
}

// --------------------------------------------------------------- reductions

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
  const std::size_t n = x.numel();
  T sum = T(0);
  for (std::size_t i = 0; i < n; ++i) sum += x.data()[i];
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::from({1}, {sum / static_cast<T>(n)}, rg);
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px, n](TensorImpl<T>& self) {
      const T g = self.grad[0] / static_cast<T>(n);
      for (std::size_t i = 0; i < n; ++i) px->grad[i] += g;
    };
  }
  return out;
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  const std::size_t n = x.numel();
  T sum = T(0);
  for (std::size_t i = 0; i < n; ++i) sum += x.data()[i];
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::from({1}, {sum}, rg);
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px, n](TensorImpl<T>& self) {
      const T g = self.grad[0];
      for (std::size_t i = 0; i < n; ++i) px->grad[i] += g;
    };
  }
  return out;
}

template <typename T>
Tensor<T> mean_tokens(const Tensor<T>& x) {
  if (x.rank() != 3) {
    throw std::invalid_argument("mean_tokens: expected rank 3, got " +
                                shape_str(x.shape()));
  }
  const std::size_t B = x.dim(0), S = x.dim(1), d = x.dim(2);
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros({B, d}, rg);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t j = 0; j < d; ++j) {
        out.data()[b * d + j] += x.data()[(b * S + s) * d + j];
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      out.data()[b * d + j] /= static_cast<T>(S);
    }
  }
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px, B, S, d](TensorImpl<T>& self) {
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t s = 0; s < S; ++s) {
          for (std::size_t j = 0; j < d; ++j) {
            px->grad[(b * S + s) * d + j] +=
                self.grad[b * d + j] / static_cast<T>(S);
          }
        }
      }
    };
  }
  return out;
}

// -------------------------------------------------------- convolution / pool

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 int sh, int sw, int ph, int pw) {
  if (x.rank() != 4 || w.rank() != 4 || x.dim(1) != w.dim(1)) {
    throw std::invalid_argument("conv2d: shape mismatch " +
                                shape_str(x.shape()) + " vs " +
                                shape_str(w.shape()));
  }
  if (sh < 1 || sw < 1 || ph < 0 || pw < 0) {
    throw std::invalid_argument("conv2d: invalid stride/padding");
  }
  const int B = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
  const int H = static_cast<int>(x.dim(2)), W = static_cast<int>(x.dim(3));
  const int F = static_cast<int>(w.dim(0));
  const int kh = static_cast<int>(w.dim(2)), kw = static_cast<int>(w.dim(3));
  const int OH = conv_out(H, kh, sh, ph), OW = conv_out(W, kw, sw, pw);
  if (OH < 1 || OW < 1) {
    throw std::invalid_argument("conv2d: kernel " + shape_str(w.shape()) +
                                " does not fit padded input " +
                                shape_str(x.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != w.dim(0))) {
    throw std::invalid_argument("conv2d: bias shape " +
                                shape_str(bias.shape()) + " != (" +
                                std::to_string(F) + ")");
  }
  const bool rg = any_grad(x, w) || (bias.defined() && bias.requires_grad());
  Tensor<T> out = Tensor<T>::zeros(
      {x.dim(0), w.dim(0), static_cast<std::size_t>(OH),
       static_cast<std::size_t>(OW)},
      rg);
  kern::conv2d_forward(x.data().data(), w.data().data(),
                       bias.defined() ? bias.data().data() : nullptr,
                       out.data().data(), B, C, H, W, F, kh, kw, sh, sw, ph,
                       pw, OH, OW);
  if (rg) {
    auto px = x.impl(), pw_ = w.impl();
    auto pb = bias.defined() ? bias.impl() : nullptr;
    out.impl()->parents = {px, pw_};
    if (pb) out.impl()->parents.push_back(pb);
    out.impl()->backward_fn = [px, pw_, pb, B, C, H, W, F, kh, kw, sh, sw, ph,
                               pw, OH, OW](TensorImpl<T>& self) {
      if (px->requires_grad) {
        kern::conv2d_backward_input(self.grad.data(), pw_->data.data(),
                                    px->grad.data(), B, C, H, W, F, kh, kw,
                                    sh, sw, ph, pw, OH, OW);
      }
      if (pw_->requires_grad) {
        kern::conv2d_backward_weight(self.grad.data(), px->data.data(),
                                     pw_->grad.data(), B, C, H, W, F, kh, kw,
                                     sh, sw, ph, pw, OH, OW);
      }
      if (pb && pb->requires_grad) {
        kern::conv2d_backward_bias(self.grad.data(), pb->grad.data(), B, F,
                                   OH * OW);
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 int sd, int sh, int sw, int pd, int ph, int pw) {
  if (x.rank() != 5 || w.rank() != 5 || x.dim(1) != w.dim(1)) {
    throw std::invalid_argument("conv3d: shape mismatch " +
                                shape_str(x.shape()) + " vs " +
                                shape_str(w.shape()));
  }
  if (sd < 1 || sh < 1 || sw < 1 || pd < 0 || ph < 0 || pw < 0) {
    throw std::invalid_argument("conv3d: invalid stride/padding");
  }
  const int B = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
  const int D = static_cast<int>(x.dim(2)), H = static_cast<int>(x.dim(3));
  const int W = static_cast<int>(x.dim(4));
  const int F = static_cast<int>(w.dim(0));
  const int kd = static_cast<int>(w.dim(2)), kh = static_cast<int>(w.dim(3));
  const int kw = static_cast<int>(w.dim(4));
  const int OD = conv_out(D, kd, sd, pd);
  const int OH = conv_out(H, kh, sh, ph);
  const int OW = conv_out(W, kw, sw, pw);
  if (OD < 1 || OH < 1 || OW < 1) {
    throw std::invalid_argument("conv3d: kernel " + shape_str(w.shape()) +
                                " does not fit padded input " +
                                shape_str(x.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != w.dim(0))) {
    throw std::invalid_argument("conv3d: bias shape " +
                                shape_str(bias.shape()) + " != (" +
                                std::to_string(F) + ")");
  }
  const bool rg = any_grad(x, w) || (bias.defined() && bias.requires_grad());
  Tensor<T> out = Tensor<T>::zeros(
      {x.dim(0), w.dim(0), static_cast<std::size_t>(OD),
       static_cast<std::size_t>(OH), static_cast<std::size_t>(OW)},
      rg);
  kern::conv3d_forward(x.data().data(), w.data().data(),
                       bias.defined() ? bias.data().data() : nullptr,
                       out.data().data(), B, C, D, H, W, F, kd, kh, kw, sd,
                       sh, sw, pd, ph, pw, OD, OH, OW);
  if (rg) {
    auto px = x.impl(), pw_ = w.impl();
    auto pb = bias.defined() ? bias.impl() : nullptr;
    out.impl()->parents = {px, pw_};
    if (pb) out.impl()->parents.push_back(pb);
    out.impl()->backward_fn = [px, pw_, pb, B, C, D, H, W, F, kd, kh, kw, sd,
                               sh, sw, pd, ph, pw, OD, OH,
                               OW](TensorImpl<T>& self) {
      if (px->requires_grad) {
        kern::conv3d_backward_input(self.grad.data(), pw_->data.data(),
                                    px->grad.data(), B, C, D, H, W, F, kd, kh,
                                    kw, sd, sh, sw, pd, ph, pw, OD, OH, OW);
      }
      if (pw_->requires_grad) {
        kern::conv3d_backward_weight(self.grad.data(), px->data.data(),
                                     pw_->grad.data(), B, C, D, H, W, F, kd,
                                     kh, kw, sd, sh, sw, pd, ph, pw, OD, OH,
                                     OW);
      }
      if (pb && pb->requires_grad) {
        kern::conv2d_backward_bias(self.grad.data(), pb->grad.data(), B, F,
                                   OD * OH * OW);
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x, int kh, int kw, int sh, int sw,
                    int ph, int pw) {
  if (x.rank() != 4) {
    throw std::invalid_argument("maxpool2d: expected rank 4, got " +
                                shape_str(x.shape()));
  }
  const int B = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
  const int H = static_cast<int>(x.dim(2)), W = static_cast<int>(x.dim(3));
  if (ph < 0 || pw < 0 || 2 * ph >= kh || 2 * pw >= kw) {
    throw std::invalid_argument("maxpool2d: pad must satisfy 2*pad < window");
  }
  if (kh < 1 || kw < 1 || kh > H + 2 * ph || kw > W + 2 * pw) {
    throw std::invalid_argument("maxpool2d: window " + std::to_string(kh) +
                                "x" + std::to_string(kw) +
                                " exceeds input " + shape_str(x.shape()));
  }
  if (sh < 1 || sw < 1) throw std::invalid_argument("maxpool2d: bad stride");
  const int OH = (H + 2 * ph - kh) / sh + 1, OW = (W + 2 * pw - kw) / sw + 1;
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros(
      {x.dim(0), x.dim(1), static_cast<std::size_t>(OH),
       static_cast<std::size_t>(OW)},
      rg);
  std::vector<std::int64_t> argmax(out.numel());
  kern::maxpool2d_forward(x.data().data(), out.data().data(), argmax.data(),
                          B, C, H, W, kh, kw, sh, sw, ph, pw, OH, OW);
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px, argmax = std::move(argmax), B, C, H, W, OH,
                               OW](TensorImpl<T>& self) {
      kern::maxpool2d_backward(self.grad.data(), argmax.data(),
                               px->grad.data(), B, C, H, W, OH, OW);
    };
  }
  return out;
}

template <typename T>
Tensor<T> maxpool3d(const Tensor<T>& x, int kd, int kh, int kw, int sd,
                    int sh, int sw, int pd, int ph, int pw) {
  if (x.rank() != 5) {
    throw std::invalid_argument("maxpool3d: expected rank 5, got " +
                                shape_str(x.shape()));
  }
  const int B = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
  const int D = static_cast<int>(x.dim(2)), H = static_cast<int>(x.dim(3));
  const int W = static_cast<int>(x.dim(4));
  if (pd < 0 || ph < 0 || pw < 0 || 2 * pd >= kd || 2 * ph >= kh ||
      2 * pw >= kw) {
    throw std::invalid_argument("maxpool3d: pad must satisfy 2*pad < window");
  }
  if (kd < 1 || kh < 1 || kw < 1 || kd > D + 2 * pd || kh > H + 2 * ph ||
      kw > W + 2 * pw) {
    throw std::invalid_argument("maxpool3d: window exceeds input " +
                                shape_str(x.shape()));
  }
  if (sd < 1 || sh < 1 || sw < 1) {
    throw std::invalid_argument("maxpool3d: bad stride");
  }
  const int OD = (D + 2 * pd - kd) / sd + 1;
  const int OH = (H + 2 * ph - kh) / sh + 1;
  const int OW = (W + 2 * pw - kw) / sw + 1;
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros(
      {x.dim(0), x.dim(1), static_cast<std::size_t>(OD),
       static_cast<std::size_t>(OH), static_cast<std::size_t>(OW)},
      rg);
  std::vector<std::int64_t> argmax(out.numel());
  kern::maxpool3d_forward(x.data().data(), out.data().data(), argmax.data(),
                          B, C, D, H, W, kd, kh, kw, sd, sh, sw, pd, ph, pw,
                          OD, OH, OW);
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px, argmax = std::move(argmax), B, C, D, H, W,
                               OD, OH, OW](TensorImpl<T>& self) {
      kern::maxpool3d_backward(self.grad.data(), argmax.data(),
                               px->grad.data(), B, C, D, H, W, OD, OH, OW);
    };
  }
  return out;
}

template <typename T>
Tensor<T> adaptive_avg2d(const Tensor<T>& x, int oh, int ow) {
  if (x.rank() != 4) {
    throw std::invalid_argument("adaptive_avg2d: expected rank 4, got " +
                                shape_str(x.shape()));
  }
  if (oh < 1 || ow < 1) {
    throw std::invalid_argument("adaptive_avg2d: target must be >= 1");
  }
  const int B = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
  const int H = static_cast<int>(x.dim(2)), W = static_cast<int>(x.dim(3));
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros(
      {x.dim(0), x.dim(1), static_cast<std::size_t>(oh),
       static_cast<std::size_t>(ow)},
      rg);
  kern::adaptive_avg2d_forward(x.data().data(), out.data().data(), B, C, H, W,
                               oh, ow);
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px, B, C, H, W, oh, ow](TensorImpl<T>& self) {
      kern::adaptive_avg2d_backward(self.grad.data(), px->grad.data(), B, C,
                                    H, W, oh, ow);
    };
  }
  return out;
}

template <typename T>
Tensor<T> adaptive_avg3d(const Tensor<T>& x, int od, int oh, int ow) {
  if (x.rank() != 5) {
    throw std::invalid_argument("adaptive_avg3d: expected rank 5, got " +
                                shape_str(x.shape()));
  }
  if (od < 1 || oh < 1 || ow < 1) {
    throw std::invalid_argument("adaptive_avg3d: target must be >= 1");
  }
  const int B = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
  const int D = static_cast<int>(x.dim(2)), H = static_cast<int>(x.dim(3));
  const int W = static_cast<int>(x.dim(4));
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros(
      {x.dim(0), x.dim(1), static_cast<std::size_t>(od),
       static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)},
      rg);
  kern::adaptive_avg3d_forward(x.data().data(), out.data().data(), B, C, D, H,
                               W, od, oh, ow);
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px, B, C, D, H, W, od, oh,
                               ow](TensorImpl<T>& self) {
      kern::adaptive_avg3d_backward(self.grad.data(), px->grad.data(), B, C,
                                    D, H, W, od, oh, ow);
    };
  }
  return out;
}

// ------------------------------------------------------------ stateful layers

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, Tensor<T>& running_mean,
                     Tensor<T>& running_var, T momentum, T eps, Mode mode) {
  if (x.rank() < 2) {
    throw std::invalid_argument("batch_norm: expected rank >= 2, got " +
                                shape_str(x.shape()));
  }
  const std::size_t B = x.dim(0), C = x.dim(1);
  const std::size_t spatial = x.numel() / (B * C);
  const std::size_t N = B * spatial;  // elements per channel
  if (gamma.numel() != C || beta.numel() != C || running_mean.numel() != C ||
      running_var.numel() != C) {
    throw std::invalid_argument("batch_norm: channel axis " +
                                std::to_string(C) +
                                " does not match state length " +
                                std::to_string(gamma.numel()));
  }
  std::vector<T> mean(C), inv_std(C);
  if (mode == Mode::kTrain) {
    for (std::size_t c = 0; c < C; ++c) {
      T sum = T(0);
      for (std::size_t b = 0; b < B; ++b) {
        const T* p = x.data().data() + (b * C + c) * spatial;
        for (std::size_t s = 0; s < spatial; ++s) sum += p[s];
      }
      const T mu = sum / static_cast<T>(N);
      T ss = T(0);
      for (std::size_t b = 0; b < B; ++b) {
        const T* p = x.data().data() + (b * C + c) * spatial;
        for (std::size_t s = 0; s < spatial; ++s) {
          const T d = p[s] - mu;
          ss += d * d;
        }
      }
      const T var = ss / static_cast<T>(N);
      mean[c] = mu;
      inv_std[c] = T(1) / std::sqrt(var + eps);
      // running stats follow the usual convention: biased variance
      // normalizes the batch, unbiased variance feeds the running estimate
      const T var_run =
          N > 1 ? ss / static_cast<T>(N - 1) : var;
      running_mean.data()[c] =
          (T(1) - momentum) * running_mean.data()[c] + momentum * mu;
      running_var.data()[c] =
          (T(1) - momentum) * running_var.data()[c] + momentum * var_run;
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = running_mean.data()[c];
      inv_std[c] = T(1) / std::sqrt(running_var.data()[c] + eps);
    }
  }

  const bool rg = any_grad(x, gamma, beta);
  Tensor<T> out = Tensor<T>::zeros(x.shape(), rg);
  std::vector<T> xhat(x.numel());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (b * C + c) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        const T h = (x.data()[base + s] - mean[c]) * inv_std[c];
        xhat[base + s] = h;
        out.data()[base + s] = gamma.data()[c] * h + beta.data()[c];
      }
    }
  }
  if (rg) {
    auto px = x.impl(), pg = gamma.impl(), pbeta = beta.impl();
    const bool train_stats = (mode == Mode::kTrain);
    out.impl()->parents = {px, pg, pbeta};
    out.impl()->backward_fn = [px, pg, pbeta, xhat = std::move(xhat),
                               inv_std = std::move(inv_std), B, C, spatial, N,
                               train_stats](TensorImpl<T>& self) {
      for (std::size_t c = 0; c < C; ++c) {
        T s1 = T(0), s2 = T(0);  // sum(dy), sum(dy * xhat) for this pass
        for (std::size_t b = 0; b < B; ++b) {
          const std::size_t base = (b * C + c) * spatial;
          for (std::size_t s = 0; s < spatial; ++s) {
            s1 += self.grad[base + s];
            s2 += self.grad[base + s] * xhat[base + s];
          }
        }
        if (pg->requires_grad) pg->grad[c] += s2;
        if (pbeta->requires_grad) pbeta->grad[c] += s1;
        if (px->requires_grad) {
          const T g = pg->data[c] * inv_std[c];
          if (train_stats) {
            const T m1 = s1 / static_cast<T>(N);
            const T m2 = s2 / static_cast<T>(N);
            for (std::size_t b = 0; b < B; ++b) {
              const std::size_t base = (b * C + c) * spatial;
              for (std::size_t s = 0; s < spatial; ++s) {
                px->grad[base + s] +=
                    g * (self.grad[base + s] - m1 - xhat[base + s] * m2);
              }
            }
          } else {
            for (std::size_t b = 0; b < B; ++b) {
              const std::size_t base = (b * C + c) * spatial;
              for (std::size_t s = 0; s < spatial; ++s) {
                px->grad[base + s] += g * self.grad[base + s];
              }
            }
          }
        }
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Mode mode, Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw std::invalid_argument("dropout: p must be in [0,1), got " +
                                std::to_string(p));
  }
  if (mode == Mode::kEval || p == 0.0) return x;
  const std::size_t n = x.numel();
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  std::vector<T> mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = rng.bernoulli(p) ? T(0) : keep_scale;
  }
  const bool rg = x.requires_grad();
  Tensor<T> out = Tensor<T>::zeros(x.shape(), rg);
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = x.data()[i] * mask[i];
  if (rg) {
    auto px = x.impl();
    out.impl()->parents = {px};
    out.impl()->backward_fn = [px, mask = std::move(mask)](TensorImpl<T>& self) {
      const std::size_t n = self.data.size();
      for (std::size_t i = 0; i < n; ++i) {
        px->grad[i] += self.grad[i] * mask[i];
      }
    };
  }
  return out;
}

// ----------------------------------------------------------- instantiations

#define MMTK_INSTANTIATE_OPS(T)                                               \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> affine<T>(const Tensor<T>&, T, T);                       \
  template Tensor<T> add_bias<T>(const Tensor<T>&, const Tensor<T>&);         \
  template Tensor<T> relu<T>(const Tensor<T>&);                               \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                            \
  template Tensor<T> log<T>(const Tensor<T>&);                                \
  template Tensor<T> exp<T>(const Tensor<T>&);                                \
  template Tensor<T> clamp<T>(const Tensor<T>&, T, T);                        \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&,            \
                               const Tensor<T>&);                             \
  template Tensor<T> bmm<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> bmm_nt<T>(const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> softmax<T>(const Tensor<T>&, std::size_t);               \
  template Tensor<T> concat<T>(const std::vector<Tensor<T>>&, std::size_t);   \
  template Tensor<T> reshape<T>(const Tensor<T>&, const Shape&);              \
  template Tensor<T> transpose12<T>(const Tensor<T>&);                        \
  template Tensor<T> mean_all<T>(const Tensor<T>&);                           \
  template Tensor<T> sum_all<T>(const Tensor<T>&);                            \
  template Tensor<T> mean_tokens<T>(const Tensor<T>&);                        \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&,            \
                               const Tensor<T>&, int, int, int, int);         \
  template Tensor<T> conv3d<T>(const Tensor<T>&, const Tensor<T>&,            \
                               const Tensor<T>&, int, int, int, int, int,     \
                               int);                                          \
  template Tensor<T> maxpool2d<T>(const Tensor<T>&, int, int, int, int, int,  \
                                  int);                                       \
  template Tensor<T> maxpool3d<T>(const Tensor<T>&, int, int, int, int, int,  \
                                  int, int, int, int);                        \
  template Tensor<T> adaptive_avg2d<T>(const Tensor<T>&, int, int);           \
  template Tensor<T> adaptive_avg3d<T>(const Tensor<T>&, int, int, int);      \
  template Tensor<T> batch_norm<T>(const Tensor<T>&, const Tensor<T>&,        \
                                   const Tensor<T>&, Tensor<T>&, Tensor<T>&,  \
                                   T, T, Mode);                               \
  template Tensor<T> dropout<T>(const Tensor<T>&, double, Mode, Rng&);

MMTK_INSTANTIATE_OPS(float)
MMTK_INSTANTIATE_OPS(double)

}  // namespace mmtk::ops
