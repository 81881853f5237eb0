#include "beamsep/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace beamsep {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct Reader {
  std::vector<char> bytes;
  std::size_t pos = 0;
  std::string path;

  void need(std::size_t n, const std::string& what) const {
    if (pos + n > bytes.size())
      throw IoError(path + ": truncated file while reading " + what);
  }
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::uint16_t u16(const std::string& what) {
    need(2, what);
    std::uint16_t v;
    std::memcpy(&v, bytes.data() + pos, 2);
    pos += 2;
    return v;
  }
  std::string tag() {
    need(4, "chunk id");
    std::string s(bytes.data() + pos, 4);
    pos += 4;
    return s;
  }
};

}  // namespace

MultichannelWaveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  Reader r;
  r.path = path;
  r.bytes.assign(std::istreambuf_iterator<char>(in),
                 std::istreambuf_iterator<char>());

  if (r.tag() != "RIFF") throw IoError(path + ": missing RIFF header");
  r.u32("RIFF size");
  if (r.tag() != "WAVE") throw IoError(path + ": missing WAVE tag");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_pos = 0, data_len = 0;
  while (r.pos + 8 <= r.bytes.size()) {
    const std::string id = r.tag();
    const std::uint32_t size = r.u32("chunk size of " + id);
    if (id == "fmt ") {
      if (size < 16) throw IoError(path + ": fmt chunk too short");
      format = r.u16("format code");
      channels = r.u16("channel count");
      rate = r.u32("sample rate");
      r.u32("byte rate");
      r.u16("block align");
      bits = r.u16("bits per sample");
      if (format == kFormatExtensible && size >= 40) {
        r.u16("extension size");
        r.u16("valid bits");
        r.u32("channel mask");
        format = r.u16("subformat");
        r.pos += 14;  // rest of the GUID
        r.pos += size - 40;
      } else {
        r.pos += size - 16;
      }
      have_fmt = true;
    } else if (id == "data") {
      data_pos = r.pos;
      data_len = size;
      r.need(size, "data chunk");
      r.pos += size;
    } else {
      r.need(size, "chunk " + id);
      r.pos += size;
    }
    if (size % 2 == 1 && r.pos < r.bytes.size()) ++r.pos;  // pad byte
  }
  if (!have_fmt) throw IoError(path + ": missing fmt chunk");
  if (data_len == 0) throw IoError(path + ": missing data chunk");
  if (channels < 1 || channels > 8)
    throw IoError(path + ": unsupported channel count " +
                  std::to_string(channels));

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32)
    throw IoError(path + ": unsupported codec (format " +
                  std::to_string(format) + ", " + std::to_string(bits) +
                  " bits); PCM16 and float32 are supported");

  const std::size_t bytes_per = pcm16 ? 2 : 4;
  const std::size_t frames = data_len / (bytes_per * channels);
  MultichannelWaveform wave =
      make_waveform(channels, frames, static_cast<int>(rate));
  const char* d = r.bytes.data() + data_pos;
  for (std::size_t n = 0; n < frames; ++n)
    for (int c = 0; c < channels; ++c) {
      const std::size_t off = (n * channels + c) * bytes_per;
      if (pcm16) {
        std::int16_t v;
        std::memcpy(&v, d + off, 2);
        wave.samples[c][n] = static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, d + off, 4);
        wave.samples[c][n] = static_cast<double>(v);
      }
    }
  return wave;
}

void write_wav(const std::string& path, const MultichannelWaveform& wave,
               WavFormat format) {
  wave.validate();
  const int channels = wave.channels();
  const std::size_t frames = wave.length();
  const bool pcm16 = format == WavFormat::pcm16;
  const std::uint16_t bytes_per = pcm16 ? 2 : 4;
  const std::uint32_t data_len =
      static_cast<std::uint32_t>(frames * channels * bytes_per);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open file for writing");
  auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); };
  auto put_u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<char*>(&v), 2); };

  out.write("RIFF", 4);
  put_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(static_cast<std::uint16_t>(channels));
  put_u32(static_cast<std::uint32_t>(wave.sample_rate));
  put_u32(static_cast<std::uint32_t>(wave.sample_rate) * channels * bytes_per);
  put_u16(static_cast<std::uint16_t>(channels * bytes_per));
  put_u16(pcm16 ? 16 : 32);
  out.write("data", 4);
  put_u32(data_len);

  for (std::size_t n = 0; n < frames; ++n)
    for (int c = 0; c < channels; ++c) {
      if (pcm16) {
        const double scaled = std::round(wave.samples[c][n] * 32768.0);
        const std::int16_t v = static_cast<std::int16_t>(
            std::clamp(scaled, -32768.0, 32767.0));
        out.write(reinterpret_cast<const char*>(&v), 2);
      } else {
        const float v = static_cast<float>(wave.samples[c][n]);
        out.write(reinterpret_cast<const char*>(&v), 4);
      }
    }
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace beamsep
