#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmtk/tensor.hpp"

// Video frontend: raw-frame container decoding and the normalization
// pipeline frame-sample -> resize -> center-crop -> grayscale -> normalize,
// producing a (30, 148, 144) volume in [-1, 1] for a 6 s clip.

namespace mmtk::video {

// raw clip container "MMV1": magic, u16 frame count, u16 height, u16 width,
// u8 channels, then frames as row-major u8 RGB
struct VideoClip {
  int frames = 0;
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;  // [frame][row][col][channel]
};

VideoClip read_mmv1(const std::string& path);
void write_mmv1(const std::string& path, const VideoClip& clip);

// float image, interleaved channels, values in [0, 1]
struct Image {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<float> px;

  float& at(int y, int x, int ch) {
    return px[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  float at(int y, int x, int ch) const {
    return px[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
};

// nearest-timestamp selection at 1/target_fps spacing; indices past the end
// clamp to the last frame (pad-by-repeat)
std::vector<int> sample_frames(int native_count, double native_fps,
                               int target_depth = 30,
                               double target_fps = 5.0);

Image frame_to_image(const VideoClip& clip, int index);
// half-pixel-center bilinear with border clamp
Image resize_bilinear(const Image& src, int oh, int ow);
// window centered with floor offsets
Image center_crop(const Image& src, int ch, int cw);
// ITU-R 601 luma: 0.299 R + 0.587 G + 0.114 B
Image grayscale(const Image& src);
// (x - 0.5) / 0.5 elementwise
Tensor<float> normalize(const Tensor<float>& volume);

// decode + temporal sampling + resize to 168x224; the train-time
// augmentation hook operates on this frame list before finish_volume
std::vector<Image> decode_resized(const VideoClip& clip, double native_fps,
                                  int target_depth = 30,
                                  double target_fps = 5.0, int rh = 168,
                                  int rw = 224);
// center-crop 148x144, grayscale, normalize, stack to [depth, 148, 144]
Tensor<float> finish_volume(const std::vector<Image>& frames, int crop_h = 148,
                            int crop_w = 144);

Tensor<float> preprocess_clip(const VideoClip& clip, double native_fps);

}  // namespace mmtk::video
