#pragma once

#include "wasn/common.hpp"

#include <string>

namespace wasn {

enum class WavFormat { Pcm16, Float32 };

struct WavData {
  int sample_rate_hz = 8000;
  Mat samples;  // samples x channels, in [-1, 1] for PCM
};

WavData read_wav(const std::string& path);
void write_wav(const std::string& path, const WavData& wav, WavFormat format = WavFormat::Pcm16);

}  // namespace wasn
