#pragma once

#include <cstdint>

// Raw-array compute kernels. mmtk::kern is the OpenMP path used by the ops
// layer; mmtk::kernref is a naive serial implementation kept as a reference
// for tests and the kernel benchmark. Both are deterministic: kern only
// parallelizes across disjoint output elements and every per-element
// reduction runs in a fixed serial order, so results are bit-identical to a
// single-threaded run at any thread count.

namespace mmtk::kern {

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n);
// c[m,n] = a[m,k] * b[n,k]^T
template <typename T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n);
// c[m,n] = a[k,m]^T * b[k,n]
template <typename T>
void matmul_tn(const T* a, const T* b, T* c, int m, int k, int n);

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, int B, int C,
                    int H, int W, int F, int kh, int kw, int sh, int sw,
                    int ph, int pw, int OH, int OW);
template <typename T>
void conv2d_backward_input(const T* dy, const T* w, T* dx, int B, int C, int H,
                           int W, int F, int kh, int kw, int sh, int sw,
                           int ph, int pw, int OH, int OW);
template <typename T>
void conv2d_backward_weight(const T* dy, const T* x, T* dw, int B, int C,
                            int H, int W, int F, int kh, int kw, int sh,
                            int sw, int ph, int pw, int OH, int OW);
template <typename T>
void conv2d_backward_bias(const T* dy, T* db, int B, int F, int outer);

template <typename T>
void conv3d_forward(const T* x, const T* w, const T* bias, T* y, int B, int C,
                    int D, int H, int W, int F, int kd, int kh, int kw, int sd,
                    int sh, int sw, int pd, int ph, int pw, int OD, int OH,
                    int OW);
template <typename T>
void conv3d_backward_input(const T* dy, const T* w, T* dx, int B, int C, int D,
                           int H, int W, int F, int kd, int kh, int kw, int sd,
                           int sh, int sw, int pd, int ph, int pw, int OD,
                           int OH, int OW);
template <typename T>
void conv3d_backward_weight(const T* dy, const T* x, T* dw, int B, int C,
                            int D, int H, int W, int F, int kd, int kh, int kw,
                            int sd, int sh, int sw, int pd, int ph, int pw,
                            int OD, int OH, int OW);

// argmax holds the flat input offset within the (b,c) plane; ties go to the
// lowest flat index; padding is -inf (window clipped to the valid region)
template <typename T>
void maxpool2d_forward(const T* x, T* y, std::int64_t* argmax, int B, int C,
                       int H, int W, int kh, int kw, int sh, int sw, int ph,
                       int pw, int OH, int OW);
template <typename T>
void maxpool2d_backward(const T* dy, const std::int64_t* argmax, T* dx, int B,
                        int C, int H, int W, int OH, int OW);

template <typename T>
void maxpool3d_forward(const T* x, T* y, std::int64_t* argmax, int B, int C,
                       int D, int H, int W, int kd, int kh, int kw, int sd,
                       int sh, int sw, int pd, int ph, int pw, int OD, int OH,
                       int OW);
template <typename T>
void maxpool3d_backward(const T* dy, const std::int64_t* argmax, T* dx, int B,
                        int C, int D, int H, int W, int OD, int OH, int OW);

// canonical floor/ceil bins: bin i covers [floor(i*in/out), ceil((i+1)*in/out))
template <typename T>
void adaptive_avg2d_forward(const T* x, T* y, int B, int C, int H, int W,
                            int OH, int OW);
template <typename T>
void adaptive_avg2d_backward(const T* dy, T* dx, int B, int C, int H, int W,
                             int OH, int OW);
template <typename T>
void adaptive_avg3d_forward(const T* x, T* y, int B, int C, int D, int H,
                            int W, int OD, int OH, int OW);
template <typename T>
void adaptive_avg3d_backward(const T* dy, T* dx, int B, int C, int D, int H,
                             int W, int OD, int OH, int OW);

inline int bin_lo(int i, int in, int out) {
  return static_cast<int>((static_cast<std::int64_t>(i) * in) / out);
}
inline int bin_hi(int i, int in, int out) {
  return static_cast<int>(
      (static_cast<std::int64_t>(i + 1) * in + out - 1) / out);
}

}  // namespace mmtk::kern

namespace mmtk::kernref {

// serial reference path, independent loop structure, no OpenMP
template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n);
template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, int B, int C,
                    int H, int W, int F, int kh, int kw, int sh, int sw,
                    int ph, int pw, int OH, int OW);
template <typename T>
void conv2d_backward_input(const T* dy, const T* w, T* dx, int B, int C, int H,
                           int W, int F, int kh, int kw, int sh, int sw,
                           int ph, int pw, int OH, int OW);
template <typename T>
void conv2d_backward_weight(const T* dy, const T* x, T* dw, int B, int C,
                            int H, int W, int F, int kh, int kw, int sh,
                            int sw, int ph, int pw, int OH, int OW);
template <typename T>
void conv3d_forward(const T* x, const T* w, const T* bias, T* y, int B, int C,
                    int D, int H, int W, int F, int kd, int kh, int kw, int sd,
                    int sh, int sw, int pd, int ph, int pw, int OD, int OH,
                    int OW);
template <typename T>
void conv3d_backward_input(const T* dy, const T* w, T* dx, int B, int C, int D,
                           int H, int W, int F, int kd, int kh, int kw, int sd,
                           int sh, int sw, int pd, int ph, int pw, int OD,
                           int OH, int OW);
template <typename T>
void conv3d_backward_weight(const T* dy, const T* x, T* dw, int B, int C,
                            int D, int H, int W, int F, int kd, int kh, int kw,
                            int sd, int sh, int sw, int pd, int ph, int pw,
                            int OD, int OH, int OW);
template <typename T>
void maxpool2d_forward(const T* x, T* y, std::int64_t* argmax, int B, int C,
                       int H, int W, int kh, int kw, int sh, int sw, int ph,
                       int pw, int OH, int OW);
template <typename T>
void adaptive_avg2d_forward(const T* x, T* y, int B, int C, int H, int W,
                            int OH, int OW);

}  // namespace mmtk::kernref
