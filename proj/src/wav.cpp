#include "wasn/wav.hpp"

#include <cstring>
#include <fstream>

namespace wasn {
namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& s, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& s, size_t off) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s.at(off + i));
  return v;
}
std::uint16_t get_u16(const std::string& s, size_t off) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(s.at(off)) |
                                    (static_cast<unsigned char>(s.at(off + 1)) << 8));
}

float get_f32(const std::string& s, size_t off) {
  std::uint32_t bits = get_u32(s, off);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open wav file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
    throw std::runtime_error("not a RIFF/WAVE file: " + path);

  size_t pos = 12;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  size_t data_off = 0, data_len = 0;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t len = get_u32(bytes, pos + 4);
    if (id == "fmt ") {
      format = get_u16(bytes, pos + 8);
      channels = get_u16(bytes, pos + 10);
      rate = get_u32(bytes, pos + 12);
      bits = get_u16(bytes, pos + 22);
    } else if (id == "data") {
      data_off = pos + 8;
      data_len = len;
    }
    pos += 8 + len + (len % 2);
  }
  if (channels == 0 || data_off == 0) throw std::runtime_error("malformed wav file: " + path);
  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32)
    throw std::runtime_error("unsupported wav encoding (want 16-bit PCM or 32-bit float)");

  const size_t bytes_per = bits / 8;
  const size_t frames = data_len / (bytes_per * channels);
  WavData wav;
  wav.sample_rate_hz = static_cast<int>(rate);
  wav.samples.resize(frames, channels);
  for (size_t t = 0; t < frames; ++t) {
    for (int c = 0; c < channels; ++c) {
      const size_t off = data_off + (t * channels + c) * bytes_per;
      if (pcm16) {
        const auto raw = static_cast<std::int16_t>(get_u16(bytes, off));
        wav.samples(t, c) = raw / 32768.0;
      } else {
        wav.samples(t, c) = get_f32(bytes, off);
      }
    }
  }
  return wav;
}

void write_wav(const std::string& path, const WavData& wav, WavFormat format) {
  const int channels = static_cast<int>(wav.samples.cols());
  const long frames = wav.samples.rows();
  if (channels < 1) throw std::invalid_argument("wav must have at least one channel");
  const int bytes_per = format == WavFormat::Pcm16 ? 2 : 4;
  const std::uint32_t data_len = static_cast<std::uint32_t>(frames * channels * bytes_per);

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, format == WavFormat::Pcm16 ? 1 : 3);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(wav.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(wav.sample_rate_hz * channels * bytes_per));
  put_u16(out, static_cast<std::uint16_t>(channels * bytes_per));
  put_u16(out, static_cast<std::uint16_t>(8 * bytes_per));
  out += "data";
  put_u32(out, data_len);
  for (long t = 0; t < frames; ++t) {
    for (int c = 0; c < channels; ++c) {
      const double x = wav.samples(t, c);
      if (format == WavFormat::Pcm16) {
        const double clipped = std::max(-1.0, std::min(1.0, x));
        const auto q = static_cast<std::int16_t>(std::lrint(clipped * 32767.0));
        put_u16(out, static_cast<std::uint16_t>(q));
      } else {
        const float f = static_cast<float>(x);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
      }
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write wav file: " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace wasn
