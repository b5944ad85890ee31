#pragma once

#include <vector>

#include "mmtk/rng.hpp"
#include "mmtk/tensor.hpp"
#include "mmtk/video.hpp"

// Train-time stochastic transforms. All parameters live in a policy block so
// identity configurations (zero ranges/probabilities) are exact no-ops, and
// every clip consumes one fixed sequence of draws from its own rng stream,
// applied consistently across the frames of the clip.

namespace mmtk::augment {

struct AudioPolicy {
  bool enabled = true;
  double volume_jitter_range = 0.2;  // gain ~ U[1 - r, 1 + r]
  int time_mask_max = 50;
  int time_mask_num = 2;
  int freq_mask_max = 50;
  int freq_mask_num = 2;
  double crop_range_lo = 0.6;  // temporal window-length factor
  double crop_range_hi = 1.5;
  double crop_scale_lo = 1.0;  // recorded from the source table; inert in
  double crop_scale_hi = 1.5;  // the implemented window-length reading
};

struct VisualPolicy {
  bool enabled = true;
  double multiscale_min_area = 0.2;
  double hflip_p = 0.5;
  double jitter_brightness = 1.0;
  double jitter_contrast = 1.0;
  double jitter_saturation = 1.0;
  double jitter_hue = 0.5;  // shift ~ U[-h, h] turns
  double grayscale_p = 0.2;
  int cutout_max = 50;
  int cutout_num = 1;
};

struct Policy {
  AudioPolicy audio;
  VisualPolicy visual;
};

// multiply the amplitude-domain signal by g ~ U[1 - range, 1 + range]
Tensor<float> volume_jitter(const Tensor<float>& x, double range, Rng& rng);

// the same gain applied to a dB-domain spectrogram: +20*log10(g) on every
// cell above the floor, silence cells stay at the floor
Tensor<float> volume_jitter_db(const Tensor<float>& spec, double range,
                               Rng& rng, float floor_db = -100.0f);

enum class MaskAxis { kTime, kFreq };

// num independent bands of width ~ U{0..max_size} set to the floor value,
// clipped to bounds
Tensor<float> time_freq_mask(const Tensor<float>& spec, MaskAxis axis,
                             int max_size, int num, Rng& rng,
                             float fill = -100.0f);

// temporal window of length round(frames * r), r ~ U[range_lo, range_hi]
// (reflect padding covers factors > 1), linearly rescaled back to the
// original frame count
Tensor<float> random_crop_audio(const Tensor<float>& spec, double range_lo,
                                double range_hi, Rng& rng);

// full audio chain in table order: volume jitter (dB form), time mask,
// frequency mask, random crop
Tensor<float> augment_audio(const Tensor<float>& spec, const AudioPolicy& p,
                            Rng& rng);

// in-place, one draw per clip: multi-scale crop (area ~ U[min_area, 1],
// aspect ~ U[3/4, 4/3], resize back), horizontal flip, color jitter,
// grayscale, cutout filled with the clip mean
void visual_augment(std::vector<video::Image>& frames, const VisualPolicy& p,
                    Rng& rng);

}  // namespace mmtk::augment
