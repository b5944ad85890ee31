#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "mmtk/kernels.hpp"
#include "mmtk/ops.hpp"
#include "mmtk/rng.hpp"
#include "mmtk/serialize.hpp"
#include "mmtk/tensor.hpp"

using namespace mmtk;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  fs::path dir = fs::temp_directory_path() / "mmtk_core_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<float> random_floats(std::size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

// the reference kernels use an independent loop structure, so accumulation
// order (and hence the last float bit) may differ on scatter-style passes
double max_rel_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({1.0, std::abs(static_cast<double>(a[i])),
                                   std::abs(static_cast<double>(b[i]))});
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) - b[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("gradient checks cover every differentiable op") {
  const double worst = gradcheck::check_all_ops([](const char* name,
                                                   double err) {
    INFO(name << " err=" << err);
    CHECK(err < 1e-5);
  });
  CHECK(worst < 1e-5);
}

TEST_CASE("end-to-end network gradients match finite differences") {
  CHECK(gradcheck::check_end_to_end(50) < 1e-4);
}

TEST_CASE("softmax matches the standard example") {
  auto x = Tensor<double>::from({3}, {1.0, 2.0, 3.0});
  auto y = ops::softmax(x, 0);
  CHECK(y.data()[0] == doctest::Approx(0.09003057).epsilon(1e-4));
  CHECK(y.data()[1] == doctest::Approx(0.24472847).epsilon(1e-4));
  CHECK(y.data()[2] == doctest::Approx(0.66524096).epsilon(1e-4));
  double sum = y.data()[0] + y.data()[1] + y.data()[2];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gradients accumulate until zero_grad") {
  auto x = Tensor<double>::from({2}, {1.0, 2.0}, true);
  auto loss = ops::sum_all(ops::mul(x, x));
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(4.0));  // second pass accumulates
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("tensor plumbing validates") {
  auto x = Tensor<float>::zeros({2, 3});
  CHECK(x.numel() == 6);
  CHECK_THROWS_AS((void)x.grad(), std::runtime_error);
  CHECK_THROWS_AS((void)x.item(), std::runtime_error);
  CHECK_THROWS_AS(ops::reshape(x, {4, 2}), std::invalid_argument);
  auto y = Tensor<float>::from({2, 2}, {1, 2, 3, 4});
  CHECK(y.at({0, 1}) == 2.0f);
  CHECK(y.at({1, 0}) == 3.0f);

  auto g = Tensor<float>::from({2}, {1, 2}, true);
  auto d = g.detach();
  CHECK_FALSE(d.requires_grad());
  CHECK(d.data() == g.data());
}

TEST_CASE("shape validation throws on mismatches") {
  auto a = Tensor<float>::zeros({2, 3});
  auto b = Tensor<float>::zeros({3, 2});
  CHECK_THROWS_AS(ops::add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(ops::matmul(a, a), std::invalid_argument);
  CHECK_THROWS_AS(ops::log(Tensor<float>::from({1}, {-1.0f})),
                  std::domain_error);
}

TEST_CASE("conv2d output shapes follow the floor formula") {
  Rng rng(3);
  const int cases[][6] = {
      // H, W, k, s, p -> expected checked below
      {7, 9, 3, 1, 0, 0}, {7, 9, 3, 2, 1, 0}, {8, 8, 5, 3, 2, 0},
      {6, 5, 1, 1, 0, 0}, {9, 7, 3, 3, 1, 0},
  };
  for (const auto& c : cases) {
    const int H = c[0], W = c[1], k = c[2], s = c[3], p = c[4];
    auto x = Tensor<float>::from({1, 2, static_cast<std::size_t>(H),
                                  static_cast<std::size_t>(W)},
                                 random_floats(2 * H * W, rng));
    auto w = Tensor<float>::from({3, 2, static_cast<std::size_t>(k),
                                  static_cast<std::size_t>(k)},
                                 random_floats(3 * 2 * k * k, rng));
    auto y = ops::conv2d(x, w, Tensor<float>(), s, s, p, p);
    CHECK(y.dim(2) == static_cast<std::size_t>((H + 2 * p - k) / s + 1));
    CHECK(y.dim(3) == static_cast<std::size_t>((W + 2 * p - k) / s + 1));
  }
}

TEST_CASE("1x1 conv with unit weight is the identity") {
  Rng rng(4);
  auto x = Tensor<float>::from({1, 1, 4, 5}, random_floats(20, rng));
  auto w = Tensor<float>::from({1, 1, 1, 1}, {1.0f});
  auto y = ops::conv2d(x, w, Tensor<float>(), 1, 1, 0, 0);
  CHECK(y.data() == x.data());
}

TEST_CASE("maxpool padding clips the window to valid cells") {
  auto x = Tensor<float>::from({1, 1, 2, 2}, {1, 2, 3, 4});
  auto y = ops::maxpool2d(x, 3, 3, 1, 1, 1, 1);
  REQUIRE(y.shape() == Shape{1, 1, 2, 2});
  for (float v : y.data()) CHECK(v == 4.0f);  // every clipped window sees 4
  CHECK_THROWS_AS(ops::maxpool2d(x, 2, 2, 1, 1, 1, 1), std::invalid_argument);
}

TEST_CASE("adaptive average pooling uses canonical floor/ceil bins") {
  auto x = Tensor<float>::from({1, 1, 1, 5}, {1, 2, 3, 4, 5});
  auto y = ops::adaptive_avg2d(x, 1, 2);
  // bins [0,3) and [2,5)
  CHECK(y.data()[0] == doctest::Approx(2.0));
  CHECK(y.data()[1] == doctest::Approx(4.0));
}

TEST_CASE("batch norm normalizes by batch statistics in train mode") {
  Rng rng(9);
  const std::size_t B = 8, C = 2, S = 4;
  auto x = Tensor<float>::from({B, C, S}, random_floats(B * C * S, rng));
  auto gamma = Tensor<float>::full({C}, 1.0f);
  auto beta = Tensor<float>::zeros({C});
  auto rm = Tensor<float>::zeros({C});
  auto rv = Tensor<float>::full({C}, 1.0f);
  auto y = ops::batch_norm(x, gamma, beta, rm, rv, 0.1f, 1e-5f, Mode::kTrain);

  const std::size_t N = B * S;
  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0.0, var = 0.0, in_mean = 0.0, in_ss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t s = 0; s < S; ++s) {
        mean += y.at({b, c, s});
        in_mean += x.at({b, c, s});
      }
    }
    mean /= N;
    in_mean /= N;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t s = 0; s < S; ++s) {
        var += (y.at({b, c, s}) - mean) * (y.at({b, c, s}) - mean);
        in_ss += (x.at({b, c, s}) - in_mean) * (x.at({b, c, s}) - in_mean);
      }
    }
    var /= N;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(std::abs(mean) < 1e-5);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    // running stats: (1 - m) * old + m * batch, unbiased variance
    CHECK(rm.data()[c] == doctest::Approx(0.1 * in_mean).epsilon(1e-5));
    CHECK(rv.data()[c] ==
          doctest::Approx(0.9 * 1.0 + 0.1 * (in_ss / (N - 1))).epsilon(1e-5));
  }

  // eval mode reads the running stats and leaves them untouched
  const auto rm_before = rm.data(), rv_before = rv.data();
  auto ye = ops::batch_norm(x, gamma, beta, rm, rv, 0.1f, 1e-5f, Mode::kEval);
  CHECK(rm.data() == rm_before);
  CHECK(rv.data() == rv_before);
  const float expect =
      (x.at({0, 0, 0}) - rm.data()[0]) / std::sqrt(rv.data()[0] + 1e-5f);
  CHECK(ye.at({0, 0, 0}) == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("dropout keep rate and scaling") {
  Rng rng(11);
  const std::size_t n = 100000;
  auto x = Tensor<float>::full({n}, 1.0f);
  auto y = ops::dropout(x, 0.5, Mode::kTrain, rng);
  std::size_t kept = 0;
  for (float v : y.data()) {
    if (v != 0.0f) {
      ++kept;
      CHECK(v == 2.0f);  // inverted scaling by 1/(1-p)
    }
  }
  const double rate = static_cast<double>(kept) / n;
  CHECK(rate > 0.49);
  CHECK(rate < 0.51);

  Rng rng2(12);
  auto ye = ops::dropout(x, 0.5, Mode::kEval, rng2);
  CHECK(ye.data() == x.data());  // eval is the identity
  auto y0 = ops::dropout(x, 0.0, Mode::kTrain, rng2);
  CHECK(y0.data() == x.data());  // p = 0 keeps everything
}

TEST_CASE("openmp kernels agree bitwise with the serial reference") {
  Rng rng(21);
  SUBCASE("matmul") {
    const int m = 33, k = 17, n = 29;
    auto a = random_floats(m * k, rng);
    auto b = random_floats(k * n, rng);
    std::vector<float> c1(m * n), c2(m * n);
    kern::matmul(a.data(), b.data(), c1.data(), m, k, n);
    kernref::matmul(a.data(), b.data(), c2.data(), m, k, n);
    CHECK(c1 == c2);
  }
  SUBCASE("conv2d forward and backward") {
    const int B = 2, C = 3, H = 9, W = 8, F = 4, kh = 3, kw = 3;
    const int sh = 2, sw = 1, ph = 1, pw = 1;
    const int OH = (H + 2 * ph - kh) / sh + 1, OW = (W + 2 * pw - kw) / sw + 1;
    auto x = random_floats(B * C * H * W, rng);
    auto w = random_floats(F * C * kh * kw, rng);
    auto bias = random_floats(F, rng);
    auto dy = random_floats(B * F * OH * OW, rng);
    std::vector<float> y1(B * F * OH * OW), y2(y1.size());
    kern::conv2d_forward(x.data(), w.data(), bias.data(), y1.data(), B, C, H,
                         W, F, kh, kw, sh, sw, ph, pw, OH, OW);
    kernref::conv2d_forward(x.data(), w.data(), bias.data(), y2.data(), B, C,
                            H, W, F, kh, kw, sh, sw, ph, pw, OH, OW);
    CHECK(y1 == y2);
    std::vector<float> dx1(x.size()), dx2(x.size());
    kern::conv2d_backward_input(dy.data(), w.data(), dx1.data(), B, C, H, W,
                                F, kh, kw, sh, sw, ph, pw, OH, OW);
    kernref::conv2d_backward_input(dy.data(), w.data(), dx2.data(), B, C, H,
                                   W, F, kh, kw, sh, sw, ph, pw, OH, OW);
    CHECK(max_rel_diff(dx1, dx2) < 1e-6);
    std::vector<float> dw1(w.size()), dw2(w.size());
    kern::conv2d_backward_weight(dy.data(), x.data(), dw1.data(), B, C, H, W,
                                 F, kh, kw, sh, sw, ph, pw, OH, OW);
    kernref::conv2d_backward_weight(dy.data(), x.data(), dw2.data(), B, C, H,
                                    W, F, kh, kw, sh, sw, ph, pw, OH, OW);
    CHECK(dw1 == dw2);
  }
  SUBCASE("conv3d forward and backward") {
    const int B = 1, C = 2, D = 5, H = 6, W = 6, F = 3;
    const int kd = 3, kh = 3, kw = 3, sd = 2, sh = 1, sw = 2;
    const int pd = 1, ph = 1, pw = 1;
    const int OD = (D + 2 * pd - kd) / sd + 1;
    const int OH = (H + 2 * ph - kh) / sh + 1;
    const int OW = (W + 2 * pw - kw) / sw + 1;
    auto x = random_floats(B * C * D * H * W, rng);
    auto w = random_floats(F * C * kd * kh * kw, rng);
    auto bias = random_floats(F, rng);
    auto dy = random_floats(B * F * OD * OH * OW, rng);
    std::vector<float> y1(B * F * OD * OH * OW), y2(y1.size());
    kern::conv3d_forward(x.data(), w.data(), bias.data(), y1.data(), B, C, D,
                         H, W, F, kd, kh, kw, sd, sh, sw, pd, ph, pw, OD, OH,
                         OW);
    kernref::conv3d_forward(x.data(), w.data(), bias.data(), y2.data(), B, C,
                            D, H, W, F, kd, kh, kw, sd, sh, sw, pd, ph, pw,
                            OD, OH, OW);
    CHECK(y1 == y2);
    std::vector<float> dx1(x.size()), dx2(x.size());
    kern::conv3d_backward_input(dy.data(), w.data(), dx1.data(), B, C, D, H,
                                W, F, kd, kh, kw, sd, sh, sw, pd, ph, pw, OD,
                                OH, OW);
    kernref::conv3d_backward_input(dy.data(), w.data(), dx2.data(), B, C, D,
                                   H, W, F, kd, kh, kw, sd, sh, sw, pd, ph,
                                   pw, OD, OH, OW);
    CHECK(max_rel_diff(dx1, dx2) < 1e-6);
    std::vector<float> dw1(w.size()), dw2(w.size());
    kern::conv3d_backward_weight(dy.data(), x.data(), dw1.data(), B, C, D, H,
                                 W, F, kd, kh, kw, sd, sh, sw, pd, ph, pw, OD,
                                 OH, OW);
    kernref::conv3d_backward_weight(dy.data(), x.data(), dw2.data(), B, C, D,
                                    H, W, F, kd, kh, kw, sd, sh, sw, pd, ph,
                                    pw, OD, OH, OW);
    CHECK(dw1 == dw2);
  }
  SUBCASE("maxpool2d with padding") {
    const int B = 2, C = 2, H = 7, W = 9, kh = 3, kw = 3, sh = 2, sw = 2;
    const int ph = 1, pw = 1;
    const int OH = (H + 2 * ph - kh) / sh + 1, OW = (W + 2 * pw - kw) / sw + 1;
    auto x = random_floats(B * C * H * W, rng);
    std::vector<float> y1(B * C * OH * OW), y2(y1.size());
    std::vector<std::int64_t> a1(y1.size()), a2(y1.size());
    kern::maxpool2d_forward(x.data(), y1.data(), a1.data(), B, C, H, W, kh,
                            kw, sh, sw, ph, pw, OH, OW);
    kernref::maxpool2d_forward(x.data(), y2.data(), a2.data(), B, C, H, W,
                               kh, kw, sh, sw, ph, pw, OH, OW);
    CHECK(y1 == y2);
    CHECK(a1 == a2);
  }
  SUBCASE("adaptive_avg2d") {
    const int B = 2, C = 3, H = 11, W = 7, OH = 4, OW = 3;
    auto x = random_floats(B * C * H * W, rng);
    std::vector<float> y1(B * C * OH * OW), y2(y1.size());
    kern::adaptive_avg2d_forward(x.data(), y1.data(), B, C, H, W, OH, OW);
    kernref::adaptive_avg2d_forward(x.data(), y2.data(), B, C, H, W, OH, OW);
    CHECK(y1 == y2);
  }
}

TEST_CASE("matmul transpose kernels match naive composition") {
  Rng rng(31);
  const int m = 5, k = 4, n = 6;
  auto a = random_floats(m * k, rng);   // for nt: a [m,k]
  auto b = random_floats(n * k, rng);   // b [n,k]
  std::vector<float> c(m * n), expect(m * n);
  kern::matmul_nt(a.data(), b.data(), c.data(), m, k, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      float s = 0;
      for (int t = 0; t < k; ++t) s += a[i * k + t] * b[j * k + t];
      expect[i * n + j] = s;
    }
  }
  CHECK(c == expect);

  auto a2 = random_floats(k * m, rng);  // for tn: a [k,m]
  auto b2 = random_floats(k * n, rng);  // b [k,n]
  std::vector<float> c2(m * n), expect2(m * n);
  kern::matmul_tn(a2.data(), b2.data(), c2.data(), m, k, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      float s = 0;
      for (int t = 0; t < k; ++t) s += a2[t * m + i] * b2[t * n + j];
      expect2[i * n + j] = s;
    }
  }
  CHECK(c2 == expect2);
}

TEST_CASE("tensor serialization round-trips exactly") {
  Rng rng(41);
  auto t32 = Tensor<float>::from({3, 4, 2}, random_floats(24, rng));
  const auto p32 = temp_file("t32.mmt");
  io::save_tensor(p32.string(), t32);
  auto r32 = io::load_tensor<float>(p32.string());
  CHECK(r32.shape() == t32.shape());
  CHECK(r32.data() == t32.data());

  std::vector<double> dv(10);
  for (double& x : dv) x = rng.normal();
  auto t64 = Tensor<double>::from({2, 5}, std::move(dv));
  const auto p64 = temp_file("t64.mmt");
  io::save_tensor(p64.string(), t64);
  auto r64 = io::load_tensor<double>(p64.string());
  CHECK(r64.data() == t64.data());

  // dtype mismatch is refused
  CHECK_THROWS(io::load_tensor<double>(p32.string()));

  SUBCASE("archive round trip keeps names, order, and bits") {
    std::vector<std::pair<std::string, Tensor<float>>> entries{
        {"alpha", Tensor<float>::from({2}, {1.f, 2.f})},
        {"beta/gamma", Tensor<float>::from({1, 3}, {4.f, 5.f, 6.f})},
    };
    const auto pa = temp_file("arch.mmc");
    io::save_archive(pa.string(), entries);
    auto back = io::load_archive<float>(pa.string());
    REQUIRE(back.size() == 2);
    CHECK(back[0].first == "alpha");
    CHECK(back[1].first == "beta/gamma");
    CHECK(back[0].second.data() == entries[0].second.data());
    CHECK(back[1].second.data() == entries[1].second.data());
  }

  SUBCASE("corrupted magic is refused") {
    const auto pb = temp_file("bad.mmt");
    std::ofstream out(pb, std::ios::binary);
    out << "NOPE garbage";
    out.close();
    CHECK_THROWS(io::load_tensor<float>(pb.string()));
  }
}

TEST_CASE("rng streams are deterministic and splittable") {
  Rng a(123), b(123), c(124);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
  }
  bool differs = false;
  Rng a2(123);
  for (int i = 0; i < 10; ++i) differs |= (a2.next_u64() != c.next_u64());
  CHECK(differs);

  Rng parent(7);
  Rng s1 = parent.split(1), s2 = parent.split(2);
  bool split_differs = false;
  for (int i = 0; i < 10; ++i) split_differs |= (s1.next_u64() != s2.next_u64());
  CHECK(split_differs);

  SUBCASE("uniform_int hits inclusive bounds") {
    Rng r(5);
    bool lo = false, hi = false;
    for (int i = 0; i < 1000; ++i) {
      const auto v = r.uniform_int(0, 3);
      CHECK(v >= 0);
      CHECK(v <= 3);
      lo |= (v == 0);
      hi |= (v == 3);
    }
    CHECK(lo);
    CHECK(hi);
  }

  SUBCASE("normal moments") {
    Rng r(6);
    const int n = 100000;
    double sum = 0, ss = 0;
    for (int i = 0; i < n; ++i) {
      const double x = r.normal();
      sum += x;
      ss += x * x;
    }
    const double mean = sum / n;
    const double var = ss / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
  }

  SUBCASE("u01 range") {
    Rng r(8);
    for (int i = 0; i < 1000; ++i) {
      const double u = r.next_u01();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
    }
  }
}
