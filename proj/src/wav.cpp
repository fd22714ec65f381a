#include "meso/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace meso {
namespace {

void put_u32(std::ofstream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
  os.write(b, 4);
}
void put_u16(std::ofstream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               unsigned sample_rate, WavFormat format) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());

  const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
  const std::uint16_t tag = format == WavFormat::Pcm16 ? 1 : 3;
  const std::uint32_t block = bits / 8;
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * block);

  os.write("RIFF", 4);
  put_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_u32(os, 16);
  put_u16(os, tag);
  put_u16(os, 1);
  put_u32(os, sample_rate);
  put_u32(os, sample_rate * block);
  put_u16(os, static_cast<std::uint16_t>(block));
  put_u16(os, bits);
  os.write("data", 4);
  put_u32(os, data_bytes);

  for (double s : samples) {
    if (format == WavFormat::Pcm16) {
      const double c = std::clamp(s, -1.0, 1.0);
      put_u16(os, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0))));
    } else {
      const float f = static_cast<float>(s);
      std::uint32_t bitsv;
      std::memcpy(&bitsv, &f, 4);
      put_u32(os, bitsv);
    }
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), {});
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("not a WAVE file: " + path.string());

  WavData out;
  std::size_t pos = 12;
  std::uint16_t tag = 0, bits = 0;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = get_u32(&bytes[pos + 4]);
    const unsigned char* body = &bytes[pos + 8];
    if (std::memcmp(&bytes[pos], "fmt ", 4) == 0) {
      tag = get_u16(body);
      if (get_u16(body + 2) != 1) throw std::runtime_error("only mono WAVE is supported");
      out.sample_rate = get_u32(body + 4);
      bits = get_u16(body + 14);
    } else if (std::memcmp(&bytes[pos], "data", 4) == 0) {
      if (tag == 1 && bits == 16) {
        out.format = WavFormat::Pcm16;
        for (std::uint32_t i = 0; i + 1 < size; i += 2)
          out.samples.push_back(static_cast<std::int16_t>(get_u16(body + i)) / 32767.0);
      } else if (tag == 3 && bits == 32) {
        out.format = WavFormat::Float32;
        for (std::uint32_t i = 0; i + 3 < size; i += 4) {
          const std::uint32_t v = get_u32(body + i);
          float f;
          std::memcpy(&f, &v, 4);
          out.samples.push_back(f);
        }
      } else {
        throw std::runtime_error("unsupported WAVE encoding");
      }
      return out;
    }
    pos += 8 + size + (size & 1);
  }
  throw std::runtime_error("WAVE file has no data chunk");
}

}  // namespace meso
