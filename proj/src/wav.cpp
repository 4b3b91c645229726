#include "asrsplit/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "asrsplit/error.hpp"

namespace asrsplit {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct Reader {
  const std::vector<unsigned char>& bytes;
  std::string name;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) {
      throw DataError(name + ": truncated WAV at byte offset " + std::to_string(pos) + " (needed " +
                      std::to_string(n) + " more bytes, file has " + std::to_string(bytes.size()) + ")");
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = bytes[pos] | (bytes[pos + 1] << 8) | (bytes[pos + 2] << 16) |
                      (static_cast<std::uint32_t>(bytes[pos + 3]) << 24);
    pos += 4;
    return v;
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
    pos += 2;
    return v;
  }
  std::string tag() {
    need(4);
    std::string t(reinterpret_cast<const char*>(&bytes[pos]), 4);
    pos += 4;
    return t;
  }
};

struct Parsed {
  WavInfo info;
  std::size_t data_offset = 0;
};

std::vector<unsigned char> slurp(const std::filesystem::path& path, std::size_t limit = SIZE_MAX) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file '" + path.string() + "'");
  std::vector<unsigned char> bytes;
  if (limit == SIZE_MAX) {
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  } else {
    bytes.resize(limit);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(limit));
    bytes.resize(static_cast<std::size_t>(in.gcount()));
  }
  return bytes;
}

// With header_only the data chunk length is trusted rather than checked
// against the bytes present, and file_size supplies the truncation check.
Parsed parse(const std::vector<unsigned char>& bytes, const std::string& name, bool header_only,
             std::uintmax_t file_size) {
  Reader r{bytes, name};
  if (r.tag() != "RIFF") throw UnsupportedFormatError(name + ": not a RIFF file");
  r.u32();
  if (r.tag() != "WAVE") throw UnsupportedFormatError(name + ": RIFF file is not WAVE");

  Parsed p;
  bool have_fmt = false;
  std::uint16_t block_align = 0;
  while (true) {
    const std::string id = r.tag();
    const std::uint32_t size = r.u32();
    const std::size_t body = r.pos;
    if (id == "fmt ") {
      std::uint16_t fmt = r.u16();
      p.info.channels = r.u16();
      p.info.sample_rate = r.u32();
      r.u32();  // byte rate
      block_align = r.u16();
      const std::uint16_t bits = r.u16();
      if (fmt == kFormatExtensible) {
        if (size < 40) throw DataError(name + ": short WAVE_FORMAT_EXTENSIBLE header");
        r.u16();  // cbSize
        r.u16();  // valid bits
        r.u32();  // channel mask
        fmt = r.u16();  // first two bytes of the subformat GUID
      }
      if (fmt == kFormatPcm && bits == 16) {
        p.info.format = SampleFormat::pcm16;
      } else if (fmt == kFormatFloat && bits == 32) {
        p.info.format = SampleFormat::float32;
      } else {
        throw UnsupportedFormatError(name + ": unsupported codec (format tag " + std::to_string(fmt) +
                                     ", " + std::to_string(bits) + " bits); need 16-bit PCM or 32-bit float");
      }
      if (p.info.channels == 0 || p.info.sample_rate == 0) {
        throw DataError(name + ": zero channels or sample rate");
      }
      if (block_align != p.info.channels * bits / 8) throw DataError(name + ": inconsistent block alignment");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw DataError(name + ": data chunk before fmt chunk");
      const std::uintmax_t available = header_only ? file_size : bytes.size();
      if (body + size > available) {
        throw DataError(name + ": truncated WAV at byte offset " + std::to_string(available) +
                        " (data chunk declares " + std::to_string(size) + " bytes from offset " +
                        std::to_string(body) + ")");
      }
      p.info.frames = size / block_align;
      p.data_offset = body;
      return p;
    }
    r.pos = body + size + (size & 1);
  }
}

}  // namespace

WavInfo read_wav_info(const std::filesystem::path& path) {
  std::error_code ec;
  const auto file_size = std::filesystem::file_size(path, ec);
  if (ec) throw DataError("cannot open audio file '" + path.string() + "'");
  // fmt and data headers sit at the front of any file we produce; fall back to
  // a full read if some other chunk pushes them further out.
  const auto head = slurp(path, 4096);
  try {
    return parse(head, path.string(), true, file_size).info;
  } catch (const UnsupportedFormatError&) {
    throw;
  } catch (const DataError&) {
    if (head.size() == file_size) throw;
    return parse(slurp(path), path.string(), true, file_size).info;
  }
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const Parsed p = parse(bytes, path.string(), false, bytes.size());
  const int ch = p.info.channels;
  const auto frames = static_cast<Eigen::Index>(p.info.frames);

  AudioBuffer buf;
  buf.sample_rate = p.info.sample_rate;
  buf.samples = Eigen::ArrayXd::Zero(frames);
  const unsigned char* data = bytes.data() + p.data_offset;
  for (Eigen::Index f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < ch; ++c) {
      const std::size_t k = static_cast<std::size_t>(f) * ch + c;
      if (p.info.format == SampleFormat::pcm16) {
        const auto v = static_cast<std::int16_t>(data[2 * k] | (data[2 * k + 1] << 8));
        acc += v / 32768.0;
      } else {
        std::uint32_t bits = data[4 * k] | (data[4 * k + 1] << 8) | (data[4 * k + 2] << 16) |
                             (static_cast<std::uint32_t>(data[4 * k + 3]) << 24);
        acc += std::bit_cast<float>(bits);
      }
    }
    buf.samples[f] = std::clamp(acc / ch, -1.0, 1.0);
  }
  return buf;
}

void write_wav(const std::filesystem::path& path, const Eigen::ArrayXXd& frames, double sample_rate,
               SampleFormat format) {
  const auto channels = static_cast<std::uint16_t>(frames.cols());
  if (channels == 0 || frames.rows() == 0 || !(sample_rate > 0)) {
    throw DataError("write_wav: empty audio or invalid sample rate");
  }
  const std::uint16_t bytes_per_sample = format == SampleFormat::pcm16 ? 2 : 4;
  const auto rate = static_cast<std::uint32_t>(std::lround(sample_rate));
  const std::uint32_t data_size = static_cast<std::uint32_t>(frames.size()) * bytes_per_sample;

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  auto put_tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
  };
  auto put16 = [&](std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v));
    out.push_back(static_cast<unsigned char>(v >> 8));
  };
  put_tag("RIFF");
  put32(36 + data_size);
  put_tag("WAVE");
  put_tag("fmt ");
  put32(16);
  put16(format == SampleFormat::pcm16 ? kFormatPcm : kFormatFloat);
  put16(channels);
  put32(rate);
  put32(rate * channels * bytes_per_sample);
  put16(static_cast<std::uint16_t>(channels * bytes_per_sample));
  put16(static_cast<std::uint16_t>(8 * bytes_per_sample));
  put_tag("data");
  put32(data_size);
  for (Eigen::Index f = 0; f < frames.rows(); ++f) {
    for (Eigen::Index c = 0; c < frames.cols(); ++c) {
      const double x = frames(f, c);
      if (format == SampleFormat::pcm16) {
        const long v = std::clamp(std::lround(x * 32768.0), -32768L, 32767L);
        put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
      } else {
        put32(std::bit_cast<std::uint32_t>(static_cast<float>(x)));
      }
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write audio file '" + path.string() + "'");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& buf, SampleFormat format) {
  write_wav(path, Eigen::ArrayXXd(buf.samples), buf.sample_rate, format);
}

}  // namespace asrsplit
