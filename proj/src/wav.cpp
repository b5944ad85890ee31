#include "mmtk/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mmtk::io {

namespace {

template <typename U>
U get_le(std::istream& in) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = in.get();
    if (c < 0) throw std::runtime_error("wav stream truncated");
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

audio::Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open wav: " + path);
  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) {
    throw std::runtime_error("not a RIFF file: " + path);
  }
  get_le<std::uint32_t>(in);  // riff size, unused
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) {
    throw std::runtime_error("not a WAVE file: " + path);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  audio::Waveform w;
  while (in.read(tag, 4)) {
    const std::uint32_t size = get_le<std::uint32_t>(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = get_le<std::uint16_t>(in);
      channels = get_le<std::uint16_t>(in);
      rate = get_le<std::uint32_t>(in);
      get_le<std::uint32_t>(in);  // byte rate
      get_le<std::uint16_t>(in);  // block align
      bits = get_le<std::uint16_t>(in);
      if (size > 16) in.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error("wav data before fmt: " + path);
      if (channels != 1) {
        throw std::runtime_error("wav must be single-channel, got " +
                                 std::to_string(channels) + ": " + path);
      }
      if (format == 1 && bits == 16) {
        const std::size_t n = size / 2;
        w.samples.resize(n);
        std::vector<std::int16_t> raw(n);
        in.read(reinterpret_cast<char*>(raw.data()),
                static_cast<std::streamsize>(size));
        if (!in) throw std::runtime_error("wav data truncated: " + path);
        for (std::size_t i = 0; i < n; ++i) {
          w.samples[i] = static_cast<float>(raw[i]) / 32768.0f;
        }
      } else if (format == 3 && bits == 32) {
        const std::size_t n = size / 4;
        w.samples.resize(n);
        in.read(reinterpret_cast<char*>(w.samples.data()),
                static_cast<std::streamsize>(size));
        if (!in) throw std::runtime_error("wav data truncated: " + path);
      } else {
        throw std::runtime_error(
            "unsupported wav encoding (need PCM16 or float32): " + path);
      }
      w.sample_rate = static_cast<int>(rate);
      return w;
    } else {
      // skip unknown chunk (word-aligned)
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
  throw std::runtime_error("wav has no data chunk: " + path);
}

void write_wav_pcm16(const std::string& path, const audio::Waveform& w) {
  if (w.sample_rate <= 0) {
    throw std::invalid_argument("write_wav_pcm16: sample_rate must be > 0");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(w.samples.size() * 2);
  out.write("RIFF", 4);
  put_le<std::uint32_t>(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, 1);  // PCM
  put_le<std::uint16_t>(out, 1);  // mono
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_le<std::uint16_t>(out, 2);
  put_le<std::uint16_t>(out, 16);
  out.write("data", 4);
  put_le<std::uint32_t>(out, data_size);
  for (float v : w.samples) {
    const float c = std::clamp(v, -1.0f, 1.0f);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(
                                   static_cast<std::int16_t>(
                                       std::lround(c * 32767.0f))));
  }
  if (!out) throw std::runtime_error("wav write failed: " + path);
}

}  // namespace mmtk::io
