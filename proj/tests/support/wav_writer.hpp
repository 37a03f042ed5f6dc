#pragma once

// Test-only 16-bit PCM WAV writer (the library only reads WAV).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

namespace advica::testing {

inline void put_u32(std::ofstream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u16(std::ofstream& os, std::uint16_t v) {
  os.put(static_cast<char>(v & 0xff));
  os.put(static_cast<char>((v >> 8) & 0xff));
}

/// `frames` holds interleaved samples.
inline void write_wav16(const std::filesystem::path& path, const std::vector<std::int16_t>& frames,
                        std::uint16_t channels, std::uint32_t rate) {
  std::ofstream os(path, std::ios::binary);
  const auto data_bytes = static_cast<std::uint32_t>(frames.size() * 2);
  os.write("RIFF", 4);
  put_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_u32(os, 16);
  put_u16(os, 1);
  put_u16(os, channels);
  put_u32(os, rate);
  put_u32(os, rate * channels * 2);
  put_u16(os, static_cast<std::uint16_t>(channels * 2));
  put_u16(os, 16);
  os.write("data", 4);
  put_u32(os, data_bytes);
  for (auto s : frames) put_u16(os, static_cast<std::uint16_t>(s));
}

/// Quantises values in [-1, 1] to full-scale int16.
inline std::int16_t to_pcm16(double v) {
  return static_cast<std::int16_t>(std::lround(std::clamp(v, -1.0, 1.0) * 32767.0));
}

}  // namespace advica::testing
