#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>

namespace asrsplit {

/// Mono samples normalized to [-1, 1].
struct AudioBuffer {
  Eigen::ArrayXd samples;
  double sample_rate = 0.0;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class SampleFormat { pcm16, float32 };

struct WavInfo {
  int channels = 0;
  std::uint32_t sample_rate = 0;
  SampleFormat format = SampleFormat::pcm16;
  std::uint64_t frames = 0;

  double duration_s() const { return static_cast<double>(frames) / sample_rate; }
};

/// Header only: format, channel count and frame count.
WavInfo read_wav_info(const std::filesystem::path& path);

/// Reads 16-bit PCM or 32-bit float RIFF/WAVE; multichannel audio is averaged
/// down to mono. Throws UnsupportedFormatError for other codecs and DataError
/// (with the byte offset) for truncated files.
AudioBuffer read_wav(const std::filesystem::path& path);

/// Writes mono audio. pcm16 maps x to round(x * 32768) clamped to int16, so
/// samples of the form k/32768 round-trip exactly.
void write_wav(const std::filesystem::path& path, const AudioBuffer& buf,
               SampleFormat format = SampleFormat::pcm16);

/// Interleaved multichannel writer; frames is rows, channels is columns.
void write_wav(const std::filesystem::path& path, const Eigen::ArrayXXd& frames,
               double sample_rate, SampleFormat format = SampleFormat::pcm16);

}  // namespace asrsplit
