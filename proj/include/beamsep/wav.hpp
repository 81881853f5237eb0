#pragma once

#include <string>

#include "beamsep/signal.hpp"

namespace beamsep {

enum class WavFormat { pcm16, float32 };

// RIFF/WAVE reader for PCM 16-bit and IEEE float 32-bit, 1-8 channels.
// PCM16 decodes as sample / 32768.0; float32 passes through.
MultichannelWaveform read_wav(const std::string& path);

// float32 round-trips bit-exactly; pcm16 rounds to the nearest LSB.
void write_wav(const std::string& path, const MultichannelWaveform& wave,
               WavFormat format = WavFormat::float32);

}  // namespace beamsep
