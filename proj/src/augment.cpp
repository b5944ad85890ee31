#include "mmtk/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmtk::augment {

namespace {

std::size_t reflect_index(long long q, long long n) {
  if (n == 1) return 0;
  const long long period = 2 * (n - 1);
  long long r = q % period;
  if (r < 0) r += period;
  if (r >= n) r = period - r;
  return static_cast<std::size_t>(r);
}

float luma(float r, float g, float b) {
  return 0.299f * r + 0.587f * g + 0.114f * b;
}

// h in turns [0,1), s and v in [0,1]
void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  const float mx = std::max({r, g, b});
  const float mn = std::min({r, g, b});
  const float d = mx - mn;
  v = mx;
  s = mx <= 0.0f ? 0.0f : d / mx;
  if (d <= 0.0f) {
    h = 0.0f;
    return;
  }
  float hh;
  if (mx == r) {
    hh = (g - b) / d;
  } else if (mx == g) {
    hh = (b - r) / d + 2.0f;
  } else {
    hh = (r - g) / d + 4.0f;
  }
  h = hh / 6.0f;
  if (h < 0.0f) h += 1.0f;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  const float hh = (h - std::floor(h)) * 6.0f;
  const int sector = std::min(5, static_cast<int>(hh));
  const float f = hh - sector;
  const float p = v * (1.0f - s);
  const float q = v * (1.0f - s * f);
  const float t = v * (1.0f - s * (1.0f - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }

}  // namespace

Tensor<float> volume_jitter(const Tensor<float>& x, double range, Rng& rng) {
  if (range < 0.0) throw std::invalid_argument("volume_jitter: range < 0");
  const float g = static_cast<float>(rng.uniform(1.0 - range, 1.0 + range));
  Tensor<float> out = Tensor<float>::zeros(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    out.data()[i] = g * x.data()[i];
  }
  return out;
}

Tensor<float> volume_jitter_db(const Tensor<float>& spec, double range,
                               Rng& rng, float floor_db) {
  if (range < 0.0) throw std::invalid_argument("volume_jitter_db: range < 0");
  const double g = rng.uniform(1.0 - range, 1.0 + range);
  const float shift = static_cast<float>(20.0 * std::log10(g));
  Tensor<float> out = Tensor<float>::zeros(spec.shape());
  for (std::size_t i = 0; i < spec.numel(); ++i) {
    const float v = spec.data()[i];
    out.data()[i] = v <= floor_db ? floor_db : std::max(v + shift, floor_db);
  }
  return out;
}

Tensor<float> time_freq_mask(const Tensor<float>& spec, MaskAxis axis,
                             int max_size, int num, Rng& rng, float fill) {
  if (spec.rank() != 2) {
    throw std::invalid_argument("time_freq_mask: expected (mels, frames), got " +
                                shape_str(spec.shape()));
  }
  if (max_size < 0 || num < 0) {
    throw std::invalid_argument("time_freq_mask: sizes must be >= 0");
  }
  const std::size_t mels = spec.dim(0), frames = spec.dim(1);
  Tensor<float> out = Tensor<float>::from(spec.shape(), spec.data());
  const std::size_t extent = axis == MaskAxis::kTime ? frames : mels;
  for (int i = 0; i < num; ++i) {
    const std::size_t width = static_cast<std::size_t>(
        rng.uniform_int(0, max_size));
    const std::size_t start = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(extent) - 1));
    const std::size_t stop = std::min(start + width, extent);
    if (axis == MaskAxis::kTime) {
      for (std::size_t m = 0; m < mels; ++m) {
        for (std::size_t t = start; t < stop; ++t) {
          out.data()[m * frames + t] = fill;
        }
      }
    } else {
      for (std::size_t m = start; m < stop; ++m) {
        for (std::size_t t = 0; t < frames; ++t) {
          out.data()[m * frames + t] = fill;
        }
      }
    }
  }
  return out;
}

Tensor<float> random_crop_audio(const Tensor<float>& spec, double range_lo,
                                double range_hi, Rng& rng) {
  if (spec.rank() != 2) {
    throw std::invalid_argument("random_crop_audio: expected (mels, frames)");
  }
  const std::size_t mels = spec.dim(0);
  const long long frames = static_cast<long long>(spec.dim(1));
  const double r = rng.uniform(range_lo, range_hi);
  const long long win =
      std::max<long long>(1, std::llround(static_cast<double>(frames) * r));
  const long long max_off = std::max<long long>(frames - win, 0);
  const long long offset = rng.uniform_int(0, max_off);

  Tensor<float> out = Tensor<float>::zeros(spec.shape());
  for (std::size_t m = 0; m < mels; ++m) {
    const float* row = spec.data().data() + m * frames;
    for (long long j = 0; j < frames; ++j) {
      // map output column j onto the window, endpoints aligned
      const double src = frames == 1
                             ? 0.0
                             : static_cast<double>(j) * (win - 1) /
                                   static_cast<double>(frames - 1);
      const long long s0 = static_cast<long long>(std::floor(src));
      const double f = src - static_cast<double>(s0);
      const float a = row[reflect_index(offset + s0, frames)];
      if (f == 0.0) {
        out.data()[m * frames + j] = a;
      } else {
        const float b = row[reflect_index(offset + s0 + 1, frames)];
        out.data()[m * frames + j] =
            static_cast<float>((1.0 - f) * a + f * b);
      }
    }
  }
  return out;
}

Tensor<float> augment_audio(const Tensor<float>& spec, const AudioPolicy& p,
                            Rng& rng) {
  if (!p.enabled) return spec;
  Tensor<float> s = volume_jitter_db(spec, p.volume_jitter_range, rng);
  s = time_freq_mask(s, MaskAxis::kTime, p.time_mask_max, p.time_mask_num, rng);
  s = time_freq_mask(s, MaskAxis::kFreq, p.freq_mask_max, p.freq_mask_num, rng);
  s = random_crop_audio(s, p.crop_range_lo, p.crop_range_hi, rng);
  return s;
}

void visual_augment(std::vector<video::Image>& frames, const VisualPolicy& p,
                    Rng& rng) {
  if (!p.enabled || frames.empty()) return;
  const int H = frames[0].h, W = frames[0].w;

  // multi-scale crop: one window shared by the whole clip
  const double area = rng.uniform(p.multiscale_min_area, 1.0);
  const double aspect = rng.uniform(3.0 / 4.0, 4.0 / 3.0);
  if (area < 1.0) {
    const double target = area * H * W;
    int cw = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    int ch = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    cw = std::clamp(cw, 1, W);
    ch = std::clamp(ch, 1, H);
    const int top = static_cast<int>(rng.uniform_int(0, H - ch));
    const int left = static_cast<int>(rng.uniform_int(0, W - cw));
    for (auto& img : frames) {
      video::Image crop;
      crop.h = ch;
      crop.w = cw;
      crop.c = img.c;
      crop.px.resize(static_cast<std::size_t>(ch) * cw * img.c);
      for (int y = 0; y < ch; ++y) {
        for (int x = 0; x < cw; ++x) {
          for (int k = 0; k < img.c; ++k) {
            crop.at(y, x, k) = img.at(top + y, left + x, k);
          }
        }
      }
      img = video::resize_bilinear(crop, H, W);
    }
  }

  if (rng.bernoulli(p.hflip_p)) {
    for (auto& img : frames) {
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W / 2; ++x) {
          for (int k = 0; k < img.c; ++k) {
            std::swap(img.at(y, x, k), img.at(y, W - 1 - x, k));
          }
        }
      }
    }
  }

  // color jitter; factor-1 / shift-0 draws skip the arithmetic so identity
  // policies stay bit-exact
  const float fb = static_cast<float>(rng.uniform(
      std::max(0.0, 1.0 - p.jitter_brightness), 1.0 + p.jitter_brightness));
  const float fc = static_cast<float>(rng.uniform(
      std::max(0.0, 1.0 - p.jitter_contrast), 1.0 + p.jitter_contrast));
  const float fs = static_cast<float>(rng.uniform(
      std::max(0.0, 1.0 - p.jitter_saturation), 1.0 + p.jitter_saturation));
  const float fh =
      static_cast<float>(rng.uniform(-p.jitter_hue, p.jitter_hue));
  for (auto& img : frames) {
    if (fb != 1.0f) {
      for (float& v : img.px) v = clamp01(v * fb);
    }
    if (fc != 1.0f) {
      double mean = 0.0;
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          mean += luma(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
        }
      }
      const float m = static_cast<float>(mean / (static_cast<double>(H) * W));
      for (float& v : img.px) v = clamp01(m + fc * (v - m));
    }
    if (fs != 1.0f) {
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          const float g =
              luma(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
          for (int k = 0; k < 3; ++k) {
            img.at(y, x, k) = clamp01(g + fs * (img.at(y, x, k) - g));
          }
        }
      }
    }
    if (fh != 0.0f) {
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          float h, s, v;
          rgb_to_hsv(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2), h, s,
                     v);
          hsv_to_rgb(h + fh, s, v, img.at(y, x, 0), img.at(y, x, 1),
                     img.at(y, x, 2));
        }
      }
    }
  }

  if (rng.bernoulli(p.grayscale_p)) {
    for (auto& img : frames) {
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          const float g =
              luma(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
          img.at(y, x, 0) = img.at(y, x, 1) = img.at(y, x, 2) = g;
        }
      }
    }
  }

  for (int i = 0; i < p.cutout_num; ++i) {
    const int side = std::min<int>(
        {static_cast<int>(rng.uniform_int(0, p.cutout_max)), H, W});
    if (side < 1) continue;
    const int top = static_cast<int>(rng.uniform_int(0, H - side));
    const int left = static_cast<int>(rng.uniform_int(0, W - side));
    double mean = 0.0;
    std::size_t count = 0;
    for (const auto& img : frames) {
      for (float v : img.px) mean += v;
      count += img.px.size();
    }
    const float fill = static_cast<float>(mean / static_cast<double>(count));
    for (auto& img : frames) {
      for (int y = top; y < top + side; ++y) {
        for (int x = left; x < left + side; ++x) {
          for (int k = 0; k < img.c; ++k) img.at(y, x, k) = fill;
        }
      }
    }
  }
}

}  // namespace mmtk::augment
