#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace meso {

enum class WavFormat { Pcm16, Float32 };

/// Writes a mono RIFF/WAVE file. PCM16 samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               unsigned sample_rate, WavFormat format);

struct WavData {
  std::vector<double> samples;
  unsigned sample_rate = 0;
  WavFormat format = WavFormat::Pcm16;
};

/// Reads files produced by write_wav (mono PCM16 or float32).
WavData read_wav(const std::filesystem::path& path);

}  // namespace meso
