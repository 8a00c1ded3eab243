#include "vpidm/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace vpidm {

namespace {

constexpr double kScale = 32768.0;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

std::int16_t to_pcm(double v) {
  const double scaled = std::nearbyint(v * kScale);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path, std::optional<int> expected_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError(name + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size() && std::memcmp(chunk, "data", 4) != 0)
      throw FormatError(name + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError(name + ": fmt chunk too short");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min(size, bytes.size() - body);
    }
    pos = body + size + (size & 1U);
  }

  if (!have_fmt) throw FormatError(name + ": missing fmt chunk");
  if (data == nullptr) throw FormatError(name + ": missing data chunk");
  if (format != 1) throw FormatError(name + ": only PCM WAV is supported");
  if (channels != 1)
    throw FormatError(name + ": expected mono audio, found " + std::to_string(channels) +
                      " channels");
  if (bits != 16)
    throw FormatError(name + ": expected 16-bit samples, found " + std::to_string(bits));
  if (rate == 0) throw FormatError(name + ": zero sample rate");
  if (expected_rate && static_cast<int>(rate) != *expected_rate)
    throw FormatError(name + ": sample rate " + std::to_string(rate) + " Hz, expected " +
                      std::to_string(*expected_rate) + " Hz (resampling is not supported)");

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(data_size / 2);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] = static_cast<std::int16_t>(read_u16(data + 2 * i)) / kScale;
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  if (w.sample_rate <= 0) throw InvalidArgument("write_wav: sample rate must be positive");
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  std::vector<unsigned char> out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  put_tag(out, "RIFF");
  put_u32(out, 36 + 2 * n);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, 2 * n);
  for (double v : w.samples) put_u16(out, static_cast<std::uint16_t>(to_pcm(v)));

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write WAV file: " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("failed while writing WAV file: " + path.string());
}

Waveform quantize_16bit(const Waveform& w) {
  Waveform out = w;
  for (double& v : out.samples) v = to_pcm(v) / kScale;
  return out;
}

}  // namespace vpidm
