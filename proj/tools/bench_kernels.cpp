// Times the OpenMP kernels against the serial reference implementations and
// verifies that both paths agree bitwise on identical inputs.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mmtk/kernels.hpp"
#include "mmtk/rng.hpp"

using namespace mmtk;

namespace {

std::vector<float> random_vec(std::size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

int mismatches(const std::vector<float>& a, const std::vector<float>& b) {
  int bad = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) ++bad;  // bitwise agreement expected
  }
  return bad;
}

struct Row {
  std::string name;
  double serial_ms;
  double omp_ms;
  int bad;
};

}  // namespace

int main() {
  Rng rng(42);
  std::vector<Row> rows;

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif

  {
    const int m = 256, k = 256, n = 256;
    auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
    auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
    std::vector<float> c_ref(static_cast<std::size_t>(m) * n);
    std::vector<float> c_omp(c_ref.size());
    const double ts = time_ms(
        [&] { kernref::matmul(a.data(), b.data(), c_ref.data(), m, k, n); }, 3);
    const double tp = time_ms(
        [&] { kern::matmul(a.data(), b.data(), c_omp.data(), m, k, n); }, 3);
    rows.push_back({"matmul 256^3", ts, tp, mismatches(c_ref, c_omp)});
  }

  {
    const int B = 4, C = 8, H = 64, W = 64, F = 16, kh = 3, kw = 3;
    const int OH = H, OW = W;  // stride 1, pad 1
    auto x = random_vec(static_cast<std::size_t>(B) * C * H * W, rng);
    auto w = random_vec(static_cast<std::size_t>(F) * C * kh * kw, rng);
    auto bias = random_vec(F, rng);
    std::vector<float> y_ref(static_cast<std::size_t>(B) * F * OH * OW);
    std::vector<float> y_omp(y_ref.size());
    const double ts = time_ms(
        [&] {
          kernref::conv2d_forward(x.data(), w.data(), bias.data(),
                                  y_ref.data(), B, C, H, W, F, kh, kw, 1, 1,
                                  1, 1, OH, OW);
        },
        3);
    const double tp = time_ms(
        [&] {
          kern::conv2d_forward(x.data(), w.data(), bias.data(), y_omp.data(),
                               B, C, H, W, F, kh, kw, 1, 1, 1, 1, OH, OW);
        },
        3);
    rows.push_back({"conv2d 4x8x64x64 -> 16", ts, tp, mismatches(y_ref, y_omp)});
  }

  {
    const int B = 2, C = 4, D = 16, H = 32, W = 32, F = 8;
    const int kd = 3, kh = 3, kw = 3, OD = D, OH = H, OW = W;
    auto x = random_vec(static_cast<std::size_t>(B) * C * D * H * W, rng);
    auto w = random_vec(static_cast<std::size_t>(F) * C * kd * kh * kw, rng);
    auto bias = random_vec(F, rng);
    std::vector<float> y_ref(static_cast<std::size_t>(B) * F * OD * OH * OW);
    std::vector<float> y_omp(y_ref.size());
    const double ts = time_ms(
        [&] {
          kernref::conv3d_forward(x.data(), w.data(), bias.data(),
                                  y_ref.data(), B, C, D, H, W, F, kd, kh, kw,
                                  1, 1, 1, 1, 1, 1, OD, OH, OW);
        },
        3);
    const double tp = time_ms(
        [&] {
          kern::conv3d_forward(x.data(), w.data(), bias.data(), y_omp.data(),
                               B, C, D, H, W, F, kd, kh, kw, 1, 1, 1, 1, 1, 1,
                               OD, OH, OW);
        },
        3);
    rows.push_back(
        {"conv3d 2x4x16x32x32 -> 8", ts, tp, mismatches(y_ref, y_omp)});
  }

  {
    const int B = 8, C = 32, H = 128, W = 128, kh = 2, kw = 2;
    const int OH = H / 2, OW = W / 2;
    auto x = random_vec(static_cast<std::size_t>(B) * C * H * W, rng);
    std::vector<float> y_ref(static_cast<std::size_t>(B) * C * OH * OW);
    std::vector<float> y_omp(y_ref.size());
    std::vector<std::int64_t> am_ref(y_ref.size()), am_omp(y_ref.size());
    const double ts = time_ms(
        [&] {
          kernref::maxpool2d_forward(x.data(), y_ref.data(), am_ref.data(), B,
                                     C, H, W, kh, kw, 2, 2, 0, 0, OH, OW);
        },
        5);
    const double tp = time_ms(
        [&] {
          kern::maxpool2d_forward(x.data(), y_omp.data(), am_omp.data(), B, C,
                                  H, W, kh, kw, 2, 2, 0, 0, OH, OW);
        },
        5);
    rows.push_back({"maxpool2d 8x32x128x128", ts, tp, mismatches(y_ref, y_omp)});
  }

  {
    const int B = 8, C = 64, H = 96, W = 96, OH = 4, OW = 4;
    auto x = random_vec(static_cast<std::size_t>(B) * C * H * W, rng);
    std::vector<float> y_ref(static_cast<std::size_t>(B) * C * OH * OW);
    std::vector<float> y_omp(y_ref.size());
    const double ts = time_ms(
        [&] {
          kernref::adaptive_avg2d_forward(x.data(), y_ref.data(), B, C, H, W,
                                          OH, OW);
        },
        5);
    const double tp = time_ms(
        [&] {
          kern::adaptive_avg2d_forward(x.data(), y_omp.data(), B, C, H, W, OH,
                                       OW);
        },
        5);
    rows.push_back(
        {"adaptive_avg2d 8x64x96x96 -> 4x4", ts, tp, mismatches(y_ref, y_omp)});
  }

  std::printf("%-34s %12s %12s %9s %6s\n", "kernel", "serial (ms)", "omp (ms)",
              "speedup", "diff");
  bool ok = true;
  for (const Row& r : rows) {
    std::printf("%-34s %12.3f %12.3f %8.2fx %6d\n", r.name.c_str(),
                r.serial_ms, r.omp_ms, r.serial_ms / r.omp_ms, r.bad);
    if (r.bad != 0) ok = false;
  }
  if (!ok) {
    std::printf("FAIL: kernel paths disagree\n");
    return 1;
  }
  std::printf("all kernel pairs agree bitwise\n");
  return 0;
}
