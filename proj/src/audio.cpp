#include "mmtk/audio.hpp"

#include <cmath>
#include <stdexcept>

namespace mmtk::audio {

namespace {

constexpr int kSincZeroCrossings = 64;

double sinc(double u) {
  if (u == 0.0) return 1.0;
  const double pu = M_PI * u;
  return std::sin(pu) / pu;
}

// reflect index into [0, n) without repeating the edge sample
std::size_t reflect_index(long long q, long long n) {
  if (n == 1) return 0;
  const long long period = 2 * (n - 1);
  long long r = q % period;
  if (r < 0) r += period;
  if (r >= n) r = period - r;
  return static_cast<std::size_t>(r);
}

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) {
  return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
}

}  // namespace

Waveform resample(const Waveform& w, int target_rate) {
  if (w.sample_rate <= 0 || target_rate <= 0) {
    throw std::invalid_argument("resample: sample rates must be positive");
  }
  if (w.samples.empty()) {
    throw std::invalid_argument("resample: empty waveform");
  }
  if (w.sample_rate == target_rate) return w;

  const double ratio =
      static_cast<double>(target_rate) / static_cast<double>(w.sample_rate);
  const double cutoff = std::min(1.0, ratio);  // band-limit when downsampling
  const double width = kSincZeroCrossings / cutoff;  // in source samples
  const long long n = static_cast<long long>(w.samples.size());
  const std::size_t out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * ratio));

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double t = static_cast<double>(i) / ratio;  // source position
    const long long j0 =
        static_cast<long long>(std::ceil(t - width));
    const long long j1 = static_cast<long long>(std::floor(t + width));
    double acc = 0.0;
    for (long long j = std::max<long long>(j0, 0);
         j <= std::min<long long>(j1, n - 1); ++j) {
      const double d = static_cast<double>(j) - t;
      const double win = 0.5 * (1.0 + std::cos(M_PI * d / width));
      acc += static_cast<double>(w.samples[static_cast<std::size_t>(j)]) *
             sinc(cutoff * d) * win;
    }
    out.samples[i] = static_cast<float>(cutoff * acc);
  }
  return out;
}

Waveform fix_length(const Waveform& w, std::size_t target_len) {
  if (target_len == 0) {
    throw std::invalid_argument("fix_length: target_len must be > 0");
  }
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples = w.samples;
  out.samples.resize(target_len, 0.0f);  // pads with zeros or truncates
  return out;
}

void fft_inplace(std::vector<std::complex<double>>& buf) {
  const std::size_t n = buf.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("fft: size must be a power of two, got " +
                                std::to_string(n));
  }
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(buf[i], buf[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = buf[i + k];
        const std::complex<double> v = buf[i + k + len / 2] * w;
        buf[i + k] = u + v;
        buf[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::vector<std::vector<double>> mel_filterbank(const MelParams& p) {
  const int bins = p.n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(p.fmin), mel_hi = hz_to_mel(p.fmax);
  std::vector<double> hz(p.n_mels + 2);
  for (int i = 0; i < p.n_mels + 2; ++i) {
    hz[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (p.n_mels + 1));
  }
  std::vector<std::vector<double>> fb(p.n_mels, std::vector<double>(bins, 0.0));
  for (int m = 0; m < p.n_mels; ++m) {
    const double lo = hz[m], mid = hz[m + 1], hi = hz[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f =
          static_cast<double>(k) * p.sample_rate / p.n_fft;
      const double rising = (f - lo) / (mid - lo);
      const double falling = (hi - f) / (hi - mid);
      fb[m][k] = std::max(0.0, std::min(rising, falling));
    }
  }
  return fb;
}

Tensor<float> mel_spectrogram(const Waveform& w, const MelParams& p) {
  if (w.sample_rate != p.sample_rate) {
    throw std::invalid_argument(
        "mel_spectrogram: input is at " + std::to_string(w.sample_rate) +
        " Hz, resample to " + std::to_string(p.sample_rate) + " Hz first");
  }
  if (w.samples.empty()) {
    throw std::invalid_argument("mel_spectrogram: empty waveform");
  }
  const long long n = static_cast<long long>(w.samples.size());
  const int frames = static_cast<int>(n / p.hop) + 1;
  const int bins = p.n_fft / 2 + 1;
  const int pad = p.n_fft / 2;

  // periodic Hann
  std::vector<double> win(p.n_fft);
  for (int j = 0; j < p.n_fft; ++j) {
    win[j] = 0.5 - 0.5 * std::cos(2.0 * M_PI * j / p.n_fft);
  }

  const auto fb = mel_filterbank(p);
  // triangles touch only a contiguous bin range; precompute it per row
  std::vector<std::pair<int, int>> span(p.n_mels);
  for (int m = 0; m < p.n_mels; ++m) {
    int lo = 0, hi = bins;
    while (lo < bins && fb[m][lo] == 0.0) ++lo;
    while (hi > lo && fb[m][hi - 1] == 0.0) --hi;
    span[m] = {lo, hi};
  }

  Tensor<float> out = Tensor<float>::zeros(
      {static_cast<std::size_t>(p.n_mels), static_cast<std::size_t>(frames)});
  std::vector<std::complex<double>> buf(p.n_fft);
  std::vector<double> power(bins);
  for (int t = 0; t < frames; ++t) {
    const long long start = static_cast<long long>(t) * p.hop - pad;
    for (int j = 0; j < p.n_fft; ++j) {
      const double s = w.samples[reflect_index(start + j, n)];
      buf[j] = {s * win[j], 0.0};
    }
    fft_inplace(buf);
    for (int k = 0; k < bins; ++k) power[k] = std::norm(buf[k]);
    for (int m = 0; m < p.n_mels; ++m) {
      double s = 0.0;
      for (int k = span[m].first; k < span[m].second; ++k) {
        s += fb[m][k] * power[k];
      }
      // floor branch keeps silence at exactly -100 dB
      const double db = s <= 1e-10 ? -100.0 : 10.0 * std::log10(s);
      out.data()[static_cast<std::size_t>(m) * frames + t] =
          static_cast<float>(db);
    }
  }
  return out;
}

}  // namespace mmtk::audio
