#include "mmtk/kernels.hpp"

#include <limits>

namespace mmtk::kern {

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    T* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = T(0);
    const T* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const T av = ai[p];
      const T* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

template <typename T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<std::size_t>(i) * k;
    T* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const T* bj = b + static_cast<std::size_t>(j) * k;
      T acc = T(0);
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

template <typename T>
void matmul_tn(const T* a, const T* b, T* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    T* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = T(0);
    for (int p = 0; p < k; ++p) {
      const T av = a[static_cast<std::size_t>(p) * m + i];
      const T* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, int B, int C,
                    int H, int W, int F, int kh, int kw, int sh, int sw,
                    int ph, int pw, int OH, int OW) {
  const std::size_t xplane = static_cast<std::size_t>(H) * W;
  const std::size_t yplane = static_cast<std::size_t>(OH) * OW;
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b) {
    for (int f = 0; f < F; ++f) {
      const T* xb = x + static_cast<std::size_t>(b) * C * xplane;
      const T* wf = w + static_cast<std::size_t>(f) * C * kh * kw;
      T* yp = y + (static_cast<std::size_t>(b) * F + f) * yplane;
      const T bv = bias ? bias[f] : T(0);
      for (int oy = 0; oy < OH; ++oy) {
        for (int ox = 0; ox < OW; ++ox) {
          T acc = bv;
          const int iy0 = oy * sh - ph;
          const int ix0 = ox * sw - pw;
          for (int c = 0; c < C; ++c) {
            const T* xc = xb + static_cast<std::size_t>(c) * xplane;
            const T* wc = wf + static_cast<std::size_t>(c) * kh * kw;
            for (int ky = 0; ky < kh; ++ky) {
              const int iy = iy0 + ky;
              if (iy < 0 || iy >= H) continue;
              const T* xrow = xc + static_cast<std::size_t>(iy) * W;
              const T* wrow = wc + static_cast<std::size_t>(ky) * kw;
              for (int kx = 0; kx < kw; ++kx) {
                const int ix = ix0 + kx;
                if (ix < 0 || ix >= W) continue;
                acc += xrow[ix] * wrow[kx];
              }
            }
          }
          yp[static_cast<std::size_t>(oy) * OW + ox] = acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const T* dy, const T* w, T* dx, int B, int C, int H,
                           int W, int F, int kh, int kw, int sh, int sw,
                           int ph, int pw, int OH, int OW) {
  const std::size_t xplane = static_cast<std::size_t>(H) * W;
  const std::size_t yplane = static_cast<std::size_t>(OH) * OW;
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      T* dxp = dx + (static_cast<std::size_t>(b) * C + c) * xplane;
      for (int iy = 0; iy < H; ++iy) {
        for (int ix = 0; ix < W; ++ix) {
          T acc = T(0);
          for (int f = 0; f < F; ++f) {
            const T* dyp = dy + (static_cast<std::size_t>(b) * F + f) * yplane;
            const T* wfc =
                w + (static_cast<std::size_t>(f) * C + c) * kh * kw;
            for (int ky = 0; ky < kh; ++ky) {
              const int ty = iy + ph - ky;
              if (ty < 0 || ty % sh != 0) continue;
              const int oy = ty / sh;
              if (oy >= OH) continue;
              for (int kx = 0; kx < kw; ++kx) {
                const int tx = ix + pw - kx;
                if (tx < 0 || tx % sw != 0) continue;
                const int ox = tx / sw;
                if (ox >= OW) continue;
                acc += dyp[static_cast<std::size_t>(oy) * OW + ox] *
                       wfc[static_cast<std::size_t>(ky) * kw + kx];
              }
            }
          }
          dxp[static_cast<std::size_t>(iy) * W + ix] += acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weight(const T* dy, const T* x, T* dw, int B, int C,
                            int H, int W, int F, int kh, int kw, int sh,
                            int sw, int ph, int pw, int OH, int OW) {
  const std::size_t xplane = static_cast<std::size_t>(H) * W;
  const std::size_t yplane = static_cast<std::size_t>(OH) * OW;
#pragma omp parallel for collapse(2) schedule(static)
  for (int f = 0; f < F; ++f) {
    for (int c = 0; c < C; ++c) {
      T* dwp = dw + (static_cast<std::size_t>(f) * C + c) * kh * kw;
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          T acc = T(0);
          for (int b = 0; b < B; ++b) {
            const T* dyp = dy + (static_cast<std::size_t>(b) * F + f) * yplane;
            const T* xp = x + (static_cast<std::size_t>(b) * C + c) * xplane;
            for (int oy = 0; oy < OH; ++oy) {
              const int iy = oy * sh - ph + ky;
              if (iy < 0 || iy >= H) continue;
              const T* dyrow = dyp + static_cast<std::size_t>(oy) * OW;
              const T* xrow = xp + static_cast<std::size_t>(iy) * W;
              for (int ox = 0; ox < OW; ++ox) {
                const int ix = ox * sw - pw + kx;
                if (ix < 0 || ix >= W) continue;
                acc += dyrow[ox] * xrow[ix];
              }
            }
          }
          dwp[static_cast<std::size_t>(ky) * kw + kx] += acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_bias(const T* dy, T* db, int B, int F, int outer) {
#pragma omp parallel for schedule(static)
  for (int f = 0; f < F; ++f) {
    T acc = T(0);
    for (int b = 0; b < B; ++b) {
      const T* p = dy + (static_cast<std::size_t>(b) * F + f) * outer;
      for (int i = 0; i < outer; ++i) acc += p[i];
    }
    db[f] += acc;
  }
}

template <typename T>
void conv3d_forward(const T* x, const T* w, const T* bias, T* y, int B, int C,
                    int D, int H, int W, int F, int kd, int kh, int kw, int sd,
                    int sh, int sw, int pd, int ph, int pw, int OD, int OH,
                    int OW) {
  const std::size_t xvol = static_cast<std::size_t>(D) * H * W;
  const std::size_t yvol = static_cast<std::size_t>(OD) * OH * OW;
  const std::size_t kvol = static_cast<std::size_t>(kd) * kh * kw;
#pragma omp parallel for collapse(3) schedule(static)
  for (int b = 0; b < B; ++b) {
    for (int f = 0; f < F; ++f) {
      for (int od = 0; od < OD; ++od) {
        const T* xb = x + static_cast<std::size_t>(b) * C * xvol;
        const T* wf = w + static_cast<std::size_t>(f) * C * kvol;
        T* yp = y + (static_cast<std::size_t>(b) * F + f) * yvol +
                static_cast<std::size_t>(od) * OH * OW;
        const T bv = bias ? bias[f] : T(0);
        const int id0 = od * sd - pd;
        for (int oy = 0; oy < OH; ++oy) {
          const int iy0 = oy * sh - ph;
          for (int ox = 0; ox < OW; ++ox) {
            const int ix0 = ox * sw - pw;
            T acc = bv;
            for (int c = 0; c < C; ++c) {
              const T* xc = xb + static_cast<std::size_t>(c) * xvol;
              const T* wc = wf + static_cast<std::size_t>(c) * kvol;
              for (int kz = 0; kz < kd; ++kz) {
                const int id = id0 + kz;
                if (id < 0 || id >= D) continue;
                const T* xslab = xc + static_cast<std::size_t>(id) * H * W;
                const T* wslab = wc + static_cast<std::size_t>(kz) * kh * kw;
                for (int ky = 0; ky < kh; ++ky) {
                  const int iy = iy0 + ky;
                  if (iy < 0 || iy >= H) continue;
                  const T* xrow = xslab + static_cast<std::size_t>(iy) * W;
                  const T* wrow = wslab + static_cast<std::size_t>(ky) * kw;
                  for (int kx = 0; kx < kw; ++kx) {
                    const int ix = ix0 + kx;
                    if (ix < 0 || ix >= W) continue;
                    acc += xrow[ix] * wrow[kx];
                  }
                }
              }
            }
            yp[static_cast<std::size_t>(oy) * OW + ox] = acc;
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
  const std::size_t xvol = static_cast<std::size_t>(D) * H * W;
  const std::size_t yvol = static_cast<std::size_t>(OD) * OH * OW;
  const std::size_t kvol = static_cast<std::size_t>(kd) * kh * kw;
#pragma omp parallel for collapse(3) schedule(static)
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      for (int id = 0; id < D; ++id) {
        T* dxp = dx + (static_cast<std::size_t>(b) * C + c) * xvol +
                 static_cast<std::size_t>(id) * H * W;
        for (int iy = 0; iy < H; ++iy) {
          for (int ix = 0; ix < W; ++ix) {
            T acc = T(0);
            for (int f = 0; f < F; ++f) {
              const T* dyp =
                  dy + (static_cast<std::size_t>(b) * F + f) * yvol;
              const T* wfc = w + (static_cast<std::size_t>(f) * C + c) * kvol;
              for (int kz = 0; kz < kd; ++kz) {
                const int td = id + pd - kz;
                if (td < 0 || td % sd != 0) continue;
                const int od = td / sd;
                if (od >= OD) continue;
                for (int ky = 0; ky < kh; ++ky) {
                  const int ty = iy + ph - ky;
                  if (ty < 0 || ty % sh != 0) continue;
                  const int oy = ty / sh;
                  if (oy >= OH) continue;
                  for (int kx = 0; kx < kw; ++kx) {
                    const int tx = ix + pw - kx;
                    if (tx < 0 || tx % sw != 0) continue;
                    const int ox = tx / sw;
                    if (ox >= OW) continue;
                    acc += dyp[(static_cast<std::size_t>(od) * OH + oy) * OW +
                               ox] *
                           wfc[(static_cast<std::size_t>(kz) * kh + ky) * kw +
                               kx];
                  }
                }
              }
            }
            dxp[static_cast<std::size_t>(iy) * W + ix] += acc;
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
  const std::size_t xvol = static_cast<std::size_t>(D) * H * W;
  const std::size_t yvol = static_cast<std::size_t>(OD) * OH * OW;
  const std::size_t kvol = static_cast<std::size_t>(kd) * kh * kw;
#pragma omp parallel for collapse(3) schedule(static)
  for (int f = 0; f < F; ++f) {
    for (int c = 0; c < C; ++c) {
      for (int kz = 0; kz < kd; ++kz) {
        T* dwp = dw + (static_cast<std::size_t>(f) * C + c) * kvol +
                 static_cast<std::size_t>(kz) * kh * kw;
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            T acc = T(0);
            for (int b = 0; b < B; ++b) {
              const T* dyp = dy + (static_cast<std::size_t>(b) * F + f) * yvol;
              const T* xp = x + (static_cast<std::size_t>(b) * C + c) * xvol;
              for (int od = 0; od < OD; ++od) {
                const int id = od * sd - pd + kz;
                if (id < 0 || id >= D) continue;
                const T* xslab = xp + static_cast<std::size_t>(id) * H * W;
                const T* dyslab =
                    dyp + static_cast<std::size_t>(od) * OH * OW;
                for (int oy = 0; oy < OH; ++oy) {
                  const int iy = oy * sh - ph + ky;
                  if (iy < 0 || iy >= H) continue;
                  const T* xrow = xslab + static_cast<std::size_t>(iy) * W;
                  const T* dyrow = dyslab + static_cast<std::size_t>(oy) * OW;
                  for (int ox = 0; ox < OW; ++ox) {
                    const int ix = ox * sw - pw + kx;
                    if (ix < 0 || ix >= W) continue;
                    acc += dyrow[ox] * xrow[ix];
                  }
                }
              }
            }
            dwp[static_cast<std::size_t>(ky) * kw + kx] += acc;
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
  const std::size_t xplane = static_cast<std::size_t>(H) * W;
  const std::size_t yplane = static_cast<std::size_t>(OH) * OW;
  const int planes = B * C;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const T* xp = x + static_cast<std::size_t>(p) * xplane;
    T* yp = y + static_cast<std::size_t>(p) * yplane;
    std::int64_t* ap = argmax + static_cast<std::size_t>(p) * yplane;
    for (int oy = 0; oy < OH; ++oy) {
      for (int ox = 0; ox < OW; ++ox) {
        T best = -std::numeric_limits<T>::infinity();
        std::int64_t best_idx = -1;
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = oy * sh - ph + ky;
          if (iy < 0) continue;
          if (iy >= H) break;
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = ox * sw - pw + kx;
            if (ix < 0) continue;
            if (ix >= W) break;
            const std::int64_t idx = static_cast<std::int64_t>(iy) * W + ix;
            const T v = xp[idx];
            if (v > best) {
              best = v;
              best_idx = idx;
            }
          }
        }
        yp[static_cast<std::size_t>(oy) * OW + ox] = best;
        ap[static_cast<std::size_t>(oy) * OW + ox] = best_idx;
      }
    }
  }
}

template <typename T>
void maxpool2d_backward(const T* dy, const std::int64_t* argmax, T* dx, int B,
                        int C, int H, int W, int OH, int OW) {
  const std::size_t xplane = static_cast<std::size_t>(H) * W;
  const std::size_t yplane = static_cast<std::size_t>(OH) * OW;
  const int planes = B * C;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const T* dyp = dy + static_cast<std::size_t>(p) * yplane;
    const std::int64_t* ap = argmax + static_cast<std::size_t>(p) * yplane;
    T* dxp = dx + static_cast<std::size_t>(p) * xplane;
    for (std::size_t i = 0; i < yplane; ++i) dxp[ap[i]] += dyp[i];
  }
}

template <typename T>
void maxpool3d_forward(const T* x, T* y, std::int64_t* argmax, int B, int C,
                       int D, int H, int W, int kd, int kh, int kw, int sd,
                       int sh, int sw, int pd, int ph, int pw, int OD, int OH,
                       int OW) {
  const std::size_t xvol = static_cast<std::size_t>(D) * H * W;
  const std::size_t yvol = static_cast<std::size_t>(OD) * OH * OW;
  const int planes = B * C;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const T* xp = x + static_cast<std::size_t>(p) * xvol;
    T* yp = y + static_cast<std::size_t>(p) * yvol;
    std::int64_t* ap = argmax + static_cast<std::size_t>(p) * yvol;
    for (int od = 0; od < OD; ++od) {
      for (int oy = 0; oy < OH; ++oy) {
        for (int ox = 0; ox < OW; ++ox) {
          T best = -std::numeric_limits<T>::infinity();
          std::int64_t best_idx = -1;
          for (int kz = 0; kz < kd; ++kz) {
            const int id = od * sd - pd + kz;
            if (id < 0) continue;
            if (id >= D) break;
            for (int ky = 0; ky < kh; ++ky) {
              const int iy = oy * sh - ph + ky;
              if (iy < 0) continue;
              if (iy >= H) break;
              for (int kx = 0; kx < kw; ++kx) {
                const int ix = ox * sw - pw + kx;
                if (ix < 0) continue;
                if (ix >= W) break;
                const std::int64_t idx =
                    (static_cast<std::int64_t>(id) * H + iy) * W + ix;
                const T v = xp[idx];
                if (v > best) {
                  best = v;
                  best_idx = idx;
                }
              }
            }
          }
          yp[(static_cast<std::size_t>(od) * OH + oy) * OW + ox] = best;
          ap[(static_cast<std::size_t>(od) * OH + oy) * OW + ox] = best_idx;
        }
      }
    }
  }
}

template <typename T>
void maxpool3d_backward(const T* dy, const std::int64_t* argmax, T* dx, int B,
                        int C, int D, int H, int W, int OD, int OH, int OW) {
  const std::size_t xvol = static_cast<std::size_t>(D) * H * W;
  const std::size_t yvol = static_cast<std::size_t>(OD) * OH * OW;
  const int planes = B * C;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const T* dyp = dy + static_cast<std::size_t>(p) * yvol;
    const std::int64_t* ap = argmax + static_cast<std::size_t>(p) * yvol;
    T* dxp = dx + static_cast<std::size_t>(p) * xvol;
    for (std::size_t i = 0; i < yvol; ++i) dxp[ap[i]] += dyp[i];
  }
}

template <typename T>
void adaptive_avg2d_forward(const T* x, T* y, int B, int C, int H, int W,
                            int OH, int OW) {
  const std::size_t xplane = static_cast<std::size_t>(H) * W;
  const std::size_t yplane = static_cast<std::size_t>(OH) * OW;
  const int planes = B * C;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const T* xp = x + static_cast<std::size_t>(p) * xplane;
    T* yp = y + static_cast<std::size_t>(p) * yplane;
    for (int oy = 0; oy < OH; ++oy) {
      const int y0 = bin_lo(oy, H, OH), y1 = bin_hi(oy, H, OH);
      for (int ox = 0; ox < OW; ++ox) {
        const int x0 = bin_lo(ox, W, OW), x1 = bin_hi(ox, W, OW);
        T acc = T(0);
        for (int iy = y0; iy < y1; ++iy) {
          const T* row = xp + static_cast<std::size_t>(iy) * W;
          for (int ix = x0; ix < x1; ++ix) acc += row[ix];
        }
        yp[static_cast<std::size_t>(oy) * OW + ox] =
            acc / static_cast<T>((y1 - y0) * (x1 - x0));
      }
    }
  }
}

template <typename T>
void adaptive_avg2d_backward(const T* dy, T* dx, int B, int C, int H, int W,
                             int OH, int OW) {
  const std::size_t xplane = static_cast<std::size_t>(H) * W;
  const std::size_t yplane = static_cast<std::size_t>(OH) * OW;
  const int planes = B * C;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const T* dyp = dy + static_cast<std::size_t>(p) * yplane;
    T* dxp = dx + static_cast<std::size_t>(p) * xplane;
    for (int oy = 0; oy < OH; ++oy) {
      const int y0 = bin_lo(oy, H, OH), y1 = bin_hi(oy, H, OH);
      for (int ox = 0; ox < OW; ++ox) {
        const int x0 = bin_lo(ox, W, OW), x1 = bin_hi(ox, W, OW);
        const T g = dyp[static_cast<std::size_t>(oy) * OW + ox] /
                    static_cast<T>((y1 - y0) * (x1 - x0));
        for (int iy = y0; iy < y1; ++iy) {
          T* row = dxp + static_cast<std::size_t>(iy) * W;
          for (int ix = x0; ix < x1; ++ix) row[ix] += g;
        }
      }
    }
  }
}

template <typename T>
void adaptive_avg3d_forward(const T* x, T* y, int B, int C, int D, int H,
                            int W, int OD, int OH, int OW) {
  const std::size_t xvol = static_cast<std::size_t>(D) * H * W;
  const std::size_t yvol = static_cast<std::size_t>(OD) * OH * OW;
  const int planes = B * C;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const T* xp = x + static_cast<std::size_t>(p) * xvol;
    T* yp = y + static_cast<std::size_t>(p) * yvol;
    for (int od = 0; od < OD; ++od) {
      const int d0 = bin_lo(od, D, OD), d1 = bin_hi(od, D, OD);
      for (int oy = 0; oy < OH; ++oy) {
        const int y0 = bin_lo(oy, H, OH), y1 = bin_hi(oy, H, OH);
        for (int ox = 0; ox < OW; ++ox) {
          const int x0 = bin_lo(ox, W, OW), x1 = bin_hi(ox, W, OW);
          T acc = T(0);
          for (int id = d0; id < d1; ++id) {
            for (int iy = y0; iy < y1; ++iy) {
              const T* row = xp + (static_cast<std::size_t>(id) * H + iy) * W;
              for (int ix = x0; ix < x1; ++ix) acc += row[ix];
            }
          }
          yp[(static_cast<std::size_t>(od) * OH + oy) * OW + ox] =
              acc / static_cast<T>((d1 - d0) * (y1 - y0) * (x1 - x0));
        }
      }
    }
  }
}

template <typename T>
void adaptive_avg3d_backward(const T* dy, T* dx, int B, int C, int D, int H,
                             int W, int OD, int OH, int OW) {
  const std::size_t xvol = static_cast<std::size_t>(D) * H * W;
  const std::size_t yvol = static_cast<std::size_t>(OD) * OH * OW;
  const int planes = B * C;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const T* dyp = dy + static_cast<std::size_t>(p) * yvol;
    T* dxp = dx + static_cast<std::size_t>(p) * xvol;
    for (int od = 0; od < OD; ++od) {
      const int d0 = bin_lo(od, D, OD), d1 = bin_hi(od, D, OD);
      for (int oy = 0; oy < OH; ++oy) {
        const int y0 = bin_lo(oy, H, OH), y1 = bin_hi(oy, H, OH);
        for (int ox = 0; ox < OW; ++ox) {
          const int x0 = bin_lo(ox, W, OW), x1 = bin_hi(ox, W, OW);
          const T g = dyp[(static_cast<std::size_t>(od) * OH + oy) * OW + ox] /
                      static_cast<T>((d1 - d0) * (y1 - y0) * (x1 - x0));
          for (int id = d0; id < d1; ++id) {
            for (int iy = y0; iy < y1; ++iy) {
              T* row = dxp + (static_cast<std::size_t>(id) * H + iy) * W;
              for (int ix = x0; ix < x1; ++ix) row[ix] += g;
            }
          }
        }
      }
    }
  }
}

#define MMTK_INSTANTIATE_KERNELS(T)                                           \
  template void matmul<T>(const T*, const T*, T*, int, int, int);             \
  template void matmul_nt<T>(const T*, const T*, T*, int, int, int);          \
  template void matmul_tn<T>(const T*, const T*, T*, int, int, int);          \
  template void conv2d_forward<T>(const T*, const T*, const T*, T*, int, int, \
                                  int, int, int, int, int, int, int, int,     \
                                  int, int, int);                             \
  template void conv2d_backward_input<T>(const T*, const T*, T*, int, int,    \
                                         int, int, int, int, int, int, int,   \
                                         int, int, int, int);                 \
  template void conv2d_backward_weight<T>(const T*, const T*, T*, int, int,   \
                                          int, int, int, int, int, int, int,  \
                                          int, int, int, int);                \
  template void conv2d_backward_bias<T>(const T*, T*, int, int, int);         \
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
  template void maxpool2d_backward<T>(const T*, const std::int64_t*, T*, int, \
                                      int, int, int, int, int);               \
  template void maxpool3d_forward<T>(const T*, T*, std::int64_t*, int, int,   \
                                     int, int, int, int, int, int, int, int,  \
                                     int, int, int, int, int, int, int);      \
  template void maxpool3d_backward<T>(const T*, const std::int64_t*, T*, int, \
                                      int, int, int, int, int, int, int);     \
  template void adaptive_avg2d_forward<T>(const T*, T*, int, int, int, int,   \
                                          int, int);                          \
  template void adaptive_avg2d_backward<T>(const T*, T*, int, int, int, int,  \
                                           int, int);                         \
  template void adaptive_avg3d_forward<T>(const T*, T*, int, int, int, int,   \
                                          int, int, int, int);                \
  template void adaptive_avg3d_backward<T>(const T*, T*, int, int, int, int,  \
                                           int, int, int, int);

MMTK_INSTANTIATE_KERNELS(float)
MMTK_INSTANTIATE_KERNELS(double)

}  // namespace mmtk::kern
