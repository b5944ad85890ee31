// Serial reference kernels. Deliberately written in the most naive
// scatter/accumulate style so they share no loop structure with the
// parallel versions in kernels.cpp; the test suite and bench tool compare
// the two implementations element by element.
#include "mmtk/kernels.hpp"

#include <limits>

namespace mmtk::kernref {

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T acc = T(0);
      for (int p = 0; p < k; ++p) {
        acc += a[static_cast<std::size_t>(i) * k + p] *
               b[static_cast<std::size_t>(p) * n + j];
      }
      c[static_cast<std::size_t>(i) * n + j] = acc;
    }
  }
}

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, int B, int C,
                    int H, int W, int F, int kh, int kw, int sh, int sw,
                    int ph, int pw, int OH, int OW) {
  for (int b = 0; b < B; ++b) {
    for (int f = 0; f < F; ++f) {
      for (int oy = 0; oy < OH; ++oy) {
        for (int ox = 0; ox < OW; ++ox) {
          T acc = bias ? bias[f] : T(0);
          for (int c = 0; c < C; ++c) {
            for (int ky = 0; ky < kh; ++ky) {
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * sh - ph + ky;
                const int ix = ox * sw - pw + kx;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                acc += x[((static_cast<std::size_t>(b) * C + c) * H + iy) * W +
                         ix] *
                       w[((static_cast<std::size_t>(f) * C + c) * kh + ky) *
                             kw +
                         kx];
              }
            }
          }
          y[((static_cast<std::size_t>(b) * F + f) * OH + oy) * OW + ox] = acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const T* dy, const T* w, T* dx, int B, int C, int H,
                           int W, int F, int kh, int kw, int sh, int sw,
                           int ph, int pw, int OH, int OW) {
  for (int b = 0; b < B; ++b) {
    for (int f = 0; f < F; ++f) {
      for (int oy = 0; oy < OH; ++oy) {
        for (int ox = 0; ox < OW; ++ox) {
          const T g =
              dy[((static_cast<std::size_t>(b) * F + f) * OH + oy) * OW + ox];
          for (int c = 0; c < C; ++c) {
            for (int ky = 0; ky < kh; ++ky) {
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * sh - ph + ky;
                const int ix = ox * sw - pw + kx;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                dx[((static_cast<std::size_t>(b) * C + c) * H + iy) * W +
                   ix] +=
                    g *
                    w[((static_cast<std::size_t>(f) * C + c) * kh + ky) * kw +
                      kx];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weight(const T* dy, const T* x, T* dw, int B, int C,
                            int H, int W, int F, int kh, int kw, int sh,
                            int sw, int ph, int pw, int OH, int OW) {
  for (int b = 0; b < B; ++b) {
    for (int f = 0; f < F; ++f) {
      for (int oy = 0; oy < OH; ++oy) {
        for (int ox = 0; ox < OW; ++ox) {
          const T g =
              dy[((static_cast<std::size_t>(b) * F + f) * OH + oy) * OW + ox];
          for (int c = 0; c < C; ++c) {
            for (int ky = 0; ky < kh; ++ky) {
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * sh - ph + ky;
                const int ix = ox * sw - pw + kx;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                dw[((static_cast<std::size_t>(f) * C + c) * kh + ky) * kw +
                   kx] +=
                    g *
                    x[((static_cast<std::size_t>(b) * C + c) * H + iy) * W +
                      ix];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv3d_forward(const T* x, const T* w, const T* bias, T* y, int B, int C,
                    int D, int H, int W, int F, int kd, int kh, int kw, int sd,
                    int sh, int sw, int pd, int ph, int pw, int OD, int OH,
                    int OW) {
  for (int b = 0; b < B; ++b) {
    for (int f = 0; f < F; ++f) {
      for (int od = 0; od < OD; ++od) {
        for (int oy = 0; oy < OH; ++oy) {
          for (int ox = 0; ox < OW; ++ox) {
            T acc = bias ? bias[f] : T(0);
            for (int c = 0; c < C; ++c) {
              for (int kz = 0; kz < kd; ++kz) {
                for (int ky = 0; ky < kh; ++ky) {
                  for (int kx = 0; kx < kw; ++kx) {
                    const int id = od * sd - pd + kz;
                    const int iy = oy * sh - ph + ky;
                    const int ix = ox * sw - pw + kx;
                    if (id < 0 || id >= D || iy < 0 || iy >= H || ix < 0 ||
                        ix >= W)
                      continue;
                    acc +=
                        x[(((static_cast<std::size_t>(b) * C + c) * D + id) *
                               H +
                           iy) *
                              W +
                          ix] *
                        w[(((static_cast<std::size_t>(f) * C + c) * kd + kz) *
                               kh +
                           ky) *
                              kw +
                          kx];
                  }
                }
              }
            }
            y[(((static_cast<std::size_t>(b) * F + f) * OD + od) * OH + oy) *
                  OW +
              ox] = acc;
          }
        }
      }
    }
  }
}

template <typename T>
void conv3d_backward_input(const T* dy, const T* w, T* dx, int B, int C, int D,
                           int H, int W, int F, int kd, int kh, int kw, int sd,
                           int sh, int sw, int pd, int ph, int pw, int OD,
                           int OH, int OW) {
  for (int b = 0; b < B; ++b) {
    for (int f = 0; f < F; ++f) {
      for (int od = 0; od < OD; ++od) {
        for (int oy = 0; oy < OH; ++oy) {
          for (int ox = 0; ox < OW; ++ox) {
            const T g =
                dy[(((static_cast<std::size_t>(b) * F + f) * OD + od) * OH +
                    oy) *
                       OW +
                   ox];
            for (int c = 0; c < C; ++c) {
              for (int kz = 0; kz < kd; ++kz) {
                for (int ky = 0; ky < kh; ++ky) {
                  for (int kx = 0; kx < kw; ++kx) {
                    const int id = od * sd - pd + kz;
                    const int iy = oy * sh - ph + ky;
                    const int ix = ox * sw - pw + kx;
                    if (id < 0 || id >= D || iy < 0 || iy >= H || ix < 0 ||
                        ix >= W)
                      continue;
                    dx[(((static_cast<std::size_t>(b) * C + c) * D + id) * H +
                        iy) *
                           W +
                       ix] +=
                        g *
                        w[(((static_cast<std::size_t>(f) * C + c) * kd + kz) *
                               kh +
                           ky) *
                              kw +
                          kx];
                  }
                }
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv3d_backward_weight(const T* dy, const T* x, T* dw, int B, int C,
                            int D, int H, int W, int F, int kd, int kh, int kw,
                            int sd, int sh, int sw, int pd, int ph, int pw,
                            int OD, int OH, int OW) {
  for (int b = 0; b < B; ++b) {
    for (int f = 0; f < F; ++f) {
      for (int od = 0; od < OD; ++od) {
        for (int oy = 0; oy < OH; ++oy) {
          for (int ox = 0; ox < OW; ++ox) {
            const T g =
                dy[(((static_cast<std::size_t>(b) * F + f) * OD + od) * OH +
                    oy) *
                       OW +
                   ox];
            for (int c = 0; c < C; ++c) {
              for (int kz = 0; kz < kd; ++kz) {
                for (int ky = 0; ky < kh; ++ky) {
                  for (int kx = 0; kx < kw; ++kx) {
                    const int id = od * sd - pd + kz;
                    const int iy = oy * sh - ph + ky;
                    const int ix = ox * sw - pw + kx;
                    if (id < 0 || id >= D || iy < 0 || iy >= H || ix < 0 ||
                        ix >= W)
                      continue;
                    dw[(((static_cast<std::size_t>(f) * C + c) * kd + kz) *
                            kh +
                        ky) *
                           kw +
                       kx] +=
                        g *
                        x[(((static_cast<std::size_t>(b) * C + c) * D + id) *
                               H +
                           iy) *
                              W +
                          ix];
                  }
                }
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void maxpool2d_forward(const T* x, T* y, std::int64_t* argmax, int B, int C,
                       int H, int W, int kh, int kw, int sh, int sw, int ph,
                       int pw, int OH, int OW) {
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const T* xp = x + (static_cast<std::size_t>(b) * C + c) * H * W;
      for (int oy = 0; oy < OH; ++oy) {
        for (int ox = 0; ox < OW; ++ox) {
          T best = -std::numeric_limits<T>::infinity();
          std::int64_t best_idx = -1;
          for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
              const int iy = oy * sh - ph + ky;
              const int ix = ox * sw - pw + kx;
              if (iy < 0 || ix < 0 || iy >= H || ix >= W) continue;
              const std::int64_t idx = static_cast<std::int64_t>(iy) * W + ix;
              if (xp[idx] > best) {
                best = xp[idx];
                best_idx = idx;
              }
            }
          }
          const std::size_t o =
              ((static_cast<std::size_t>(b) * C + c) * OH + oy) * OW + ox;
          y[o] = best;
          argmax[o] = best_idx;
        }
      }
    }
  }
}

template <typename T>
void adaptive_avg2d_forward(const T* x, T* y, int B, int C, int H, int W,
                            int OH, int OW) {
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const T* xp = x + (static_cast<std::size_t>(b) * C + c) * H * W;
      for (int oy = 0; oy < OH; ++oy) {
        for (int ox = 0; ox < OW; ++ox) {
          const int y0 = kern::bin_lo(oy, H, OH), y1 = kern::bin_hi(oy, H, OH);
          const int x0 = kern::bin_lo(ox, W, OW), x1 = kern::bin_hi(ox, W, OW);
          T acc = T(0);
          for (int iy = y0; iy < y1; ++iy) {
            for (int ix = x0; ix < x1; ++ix) {
              acc += xp[static_cast<std::size_t>(iy) * W + ix];
            }
          }
          y[((static_cast<std::size_t>(b) * C + c) * OH + oy) * OW + ox] =
              acc / static_cast<T>((y1 - y0) * (x1 - x0));
        }
      }
    }
  }
}

#define MMTK_INSTANTIATE_REF(T)                                               \
  template void matmul<T>(const T*, const T*, T*, int, int, int);             \
  template void conv2d_forward<T>(const T*, const T*, const T*, T*, int, int, \
                                  int, int, int, int, int, int, int, int,     \
                                  int, int, int);                             \
  template void conv2d_backward_input<T>(const T*, const T*, T*, int, int,    \
                                         int, int, int, int, int, int, int,   \
                                         int, int, int, int);                 \
  template void conv2d_backward_weight<T>(const T*, const T*, T*, int, int,   \
                                          int, int, int, int, int, int, int,  \
                                          int, int, int, int);                \
  template void conv3d_forward<T>(const T*, const T*, const T*, T*, int, int, \
                                  int, int, int, int, int, int, int, int,     \
                                  int, int, int, int, int, int, int, int);    \
  template void conv3d_backward_input<T>(const T*, const T*, T*, int, int,    \
                                         int, int, int, int, int, int, int,   \
                                         int, int, int, int, int, int, int,   \
                                         int, int);                           \
  template void conv3d_backward_weight<T>(const T*, const T*, T*, int, int,   \
                                          int, int, int, int, int, int, int,  \
                                          int, int, int, int, int, int, int,  \
                                          int, int);                          \
  template void maxpool2d_forward<T>(const T*, T*, std::int64_t*, int, int,   \
                                     int, int, int, int, int, int, int, int,  \
                                     int, int);                               \
  template void adaptive_avg2d_forward<T>(const T*, T*, int, int, int, int,   \
                                          int, int);

MMTK_INSTANTIATE_REF(float)
MMTK_INSTANTIATE_REF(double)

}  // namespace mmtk::kernref
