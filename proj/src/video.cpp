#include "mmtk/video.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mmtk::video {

namespace {

template <typename U>
U get_le(std::istream& in) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = in.get();
    if (c < 0) throw std::runtime_error("mmv stream truncated");
    v |= static_cast<U>(static_cast<std::uint8_t>(c)) << (8 * i);
  }
  return v;
}

template <typename U>
void put_le(std::ostream& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

}  // namespace

VideoClip read_mmv1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open clip: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "MMV1", 4) != 0) {
    throw std::runtime_error("bad clip magic (expected MMV1): " + path);
  }
  VideoClip clip;
  clip.frames = get_le<std::uint16_t>(in);
  clip.height = get_le<std::uint16_t>(in);
  clip.width = get_le<std::uint16_t>(in);
  clip.channels = get_le<std::uint8_t>(in);
  if (clip.frames < 1 || clip.height < 1 || clip.width < 1 ||
      clip.channels != 3) {
    throw std::runtime_error("invalid clip header in " + path);
  }
  const std::size_t n = static_cast<std::size_t>(clip.frames) * clip.height *
                        clip.width * clip.channels;
  clip.data.resize(n);
  in.read(reinterpret_cast<char*>(clip.data.data()),
          static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("clip data truncated: " + path);
  return clip;
}

void write_mmv1(const std::string& path, const VideoClip& clip) {
  if (clip.channels != 3) {
    throw std::invalid_argument("write_mmv1: clips must be RGB");
  }
  const std::size_t n = static_cast<std::size_t>(clip.frames) * clip.height *
                        clip.width * clip.channels;
  if (clip.data.size() != n) {
    throw std::invalid_argument("write_mmv1: data size does not match header");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out.write("MMV1", 4);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(clip.frames));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(clip.height));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(clip.width));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(clip.channels));
  out.write(reinterpret_cast<const char*>(clip.data.data()),
            static_cast<std::streamsize>(n));
  if (!out) throw std::runtime_error("clip write failed: " + path);
}

std::vector<int> sample_frames(int native_count, double native_fps,
                               int target_depth, double target_fps) {
  if (native_count < 1) throw std::invalid_argument("sample_frames: empty clip");
  if (native_fps <= 0.0) {
    throw std::invalid_argument("sample_frames: native fps must be > 0");
  }
  std::vector<int> indices(target_depth);
  for (int i = 0; i < target_depth; ++i) {
    const double t = static_cast<double>(i) / target_fps;
    const int idx = static_cast<int>(std::llround(t * native_fps));
    indices[i] = std::min(idx, native_count - 1);
  }
  return indices;
}

Image frame_to_image(const VideoClip& clip, int index) {
  if (index < 0 || index >= clip.frames) {
    throw std::out_of_range("frame_to_image: index out of range");
  }
  Image img;
  img.h = clip.height;
  img.w = clip.width;
  img.c = clip.channels;
  const std::size_t n =
      static_cast<std::size_t>(img.h) * img.w * img.c;
  img.px.resize(n);
  const std::uint8_t* src = clip.data.data() + static_cast<std::size_t>(index) * n;
  for (std::size_t i = 0; i < n; ++i) {
    img.px[i] = static_cast<float>(src[i]) / 255.0f;
  }
  return img;
}

Image resize_bilinear(const Image& src, int oh, int ow) {
  if (src.h < 1 || src.w < 1 || oh < 1 || ow < 1) {
    throw std::invalid_argument("resize_bilinear: extents must be positive");
  }
  Image out;
  out.h = oh;
  out.w = ow;
  out.c = src.c;
  out.px.resize(static_cast<std::size_t>(oh) * ow * src.c);
  const double sy = static_cast<double>(src.h) / oh;
  const double sx = static_cast<double>(src.w) / ow;
  for (int y = 0; y < oh; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const int y0 = static_cast<int>(std::floor(fy));
    const double wy = fy - y0;
    const int ya = std::clamp(y0, 0, src.h - 1);
    const int yb = std::clamp(y0 + 1, 0, src.h - 1);
    for (int x = 0; x < ow; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const int x0 = static_cast<int>(std::floor(fx));
      const double wx = fx - x0;
      const int xa = std::clamp(x0, 0, src.w - 1);
      const int xb = std::clamp(x0 + 1, 0, src.w - 1);
      for (int ch = 0; ch < src.c; ++ch) {
        const double top = (1.0 - wx) * src.at(ya, xa, ch) +
                           wx * src.at(ya, xb, ch);
        const double bot = (1.0 - wx) * src.at(yb, xa, ch) +
                           wx * src.at(yb, xb, ch);
        out.at(y, x, ch) = static_cast<float>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

Image center_crop(const Image& src, int ch, int cw) {
  if (ch > src.h || cw > src.w) {
    throw std::invalid_argument("center_crop: crop " + std::to_string(ch) +
                                "x" + std::to_string(cw) +
                                " exceeds input " + std::to_string(src.h) +
                                "x" + std::to_string(src.w));
  }
  const int oy = (src.h - ch) / 2;
  const int ox = (src.w - cw) / 2;
  Image out;
  out.h = ch;
  out.w = cw;
  out.c = src.c;
  out.px.resize(static_cast<std::size_t>(ch) * cw * src.c);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      for (int k = 0; k < src.c; ++k) {
        out.at(y, x, k) = src.at(oy + y, ox + x, k);
      }
    }
  }
  return out;
}

Image grayscale(const Image& src) {
  if (src.c != 3) {
    throw std::invalid_argument("grayscale: expected 3 channels, got " +
                                std::to_string(src.c));
  }
  Image out;
  out.h = src.h;
  out.w = src.w;
  out.c = 1;
  out.px.resize(static_cast<std::size_t>(src.h) * src.w);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      out.at(y, x, 0) = 0.299f * src.at(y, x, 0) + 0.587f * src.at(y, x, 1) +
                        0.114f * src.at(y, x, 2);
    }
  }
  return out;
}

Tensor<float> normalize(const Tensor<float>& volume) {
  Tensor<float> out = Tensor<float>::zeros(volume.shape());
  for (std::size_t i = 0; i < volume.numel(); ++i) {
    out.data()[i] = (volume.data()[i] - 0.5f) / 0.5f;
  }
  return out;
}

std::vector<Image> decode_resized(const VideoClip& clip, double native_fps,
                                  int target_depth, double target_fps, int rh,
                                  int rw) {
  const std::vector<int> idx =
      sample_frames(clip.frames, native_fps, target_depth, target_fps);
  std::vector<Image> out;
  out.reserve(idx.size());
  for (int i : idx) {
    out.push_back(resize_bilinear(frame_to_image(clip, i), rh, rw));
  }
  return out;
}

Tensor<float> finish_volume(const std::vector<Image>& frames, int crop_h,
                            int crop_w) {
  if (frames.empty()) {
    throw std::invalid_argument("finish_volume: no frames");
  }
  Tensor<float> vol = Tensor<float>::zeros(
      {frames.size(), static_cast<std::size_t>(crop_h),
       static_cast<std::size_t>(crop_w)});
  const std::size_t plane = static_cast<std::size_t>(crop_h) * crop_w;
  for (std::size_t d = 0; d < frames.size(); ++d) {
    const Image gray = grayscale(center_crop(frames[d], crop_h, crop_w));
    std::copy(gray.px.begin(), gray.px.end(),
              vol.data().begin() + d * plane);
  }
  return normalize(vol);
}

Tensor<float> preprocess_clip(const VideoClip& clip, double native_fps) {
  return finish_volume(decode_resized(clip, native_fps));
}

}  // namespace mmtk::video
