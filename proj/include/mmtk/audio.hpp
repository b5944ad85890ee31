#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "mmtk/tensor.hpp"

// Audio frontend: waveform conditioning and the mel-spectrogram pipeline.
// Target format is 16 kHz mono, 6 s (96000 samples); the mel output is
// (80 mels x 601 frames) in dB with an exact -100 floor.

namespace mmtk::audio {

struct Waveform {
  std::vector<float> samples;  // in [-1, 1]
  int sample_rate = 0;         // Hz
};

struct MelParams {
  int sample_rate = 16000;
  int n_fft = 1024;
  int hop = 160;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
};

// band-limited windowed-sinc interpolation, 64 zero crossings, Hann window;
// duration preserved within one sample
Waveform resample(const Waveform& w, int target_rate);

// pad with trailing zeros or truncate keeping the head
Waveform fix_length(const Waveform& w, std::size_t target_len);

// iterative radix-2 FFT, in place; size must be a power of two
void fft_inplace(std::vector<std::complex<double>>& buf);

// HTK-scale triangular filters, peak 1, rows [n_mels][n_fft/2 + 1]
std::vector<std::vector<double>> mel_filterbank(const MelParams& p);

// centered STFT (reflect padding, periodic Hann), power spectrum, mel
// filterbank, then 10*log10 with an exact -100 dB floor for power <= 1e-10;
// input must already be at p.sample_rate
Tensor<float> mel_spectrogram(const Waveform& w, const MelParams& p = {});

}  // namespace mmtk::audio
