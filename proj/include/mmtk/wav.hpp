#pragma once

#include <string>

#include "mmtk/audio.hpp"

// Single-channel WAV files, PCM 16-bit or IEEE float 32 for reading,
// PCM 16-bit for writing.

namespace mmtk::io {

audio::Waveform read_wav(const std::string& path);
void write_wav_pcm16(const std::string& path, const audio::Waveform& w);

}  // namespace mmtk::io
