#include "advica/signals.hpp"

#include "advica/errors.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>

namespace advica {
namespace {

std::uint32_t u32(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t u16(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

bool tag_is(const std::vector<unsigned char>& b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("cannot open WAV file: " + path.string(), 0);
  const std::vector<unsigned char> b((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());

  if (b.size() < 12 || !tag_is(b, 0, "RIFF")) throw IngestionError("missing RIFF header", 0);
  if (!tag_is(b, 8, "WAVE")) throw IngestionError("RIFF file is not WAVE", 8);

  WavData wav;
  bool have_fmt = false;
  std::uint16_t bits = 0;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::uint32_t size = u32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > b.size()) throw IngestionError("chunk extends past end of file", pos);

    if (tag_is(b, pos, "fmt ")) {
      if (size < 16) throw IngestionError("fmt chunk too small", pos);
      std::uint16_t format = u16(b, body);
      wav.channels = u16(b, body + 2);
      wav.sample_rate = u32(b, body + 4);
      bits = u16(b, body + 14);
      if (format == kFormatExtensible && size >= 40) format = u16(b, body + 24);
      if (format != kFormatPcm) {
        throw IngestionError("unsupported WAV encoding " + std::to_string(format) +
                                 " (only uncompressed PCM is read)",
                             body);
      }
      if (bits != 16) {
        throw IngestionError("unsupported bit depth " + std::to_string(bits) + " (need 16)",
                             body + 14);
      }
      if (wav.channels == 0) throw IngestionError("WAV file declares zero channels", body + 2);
      have_fmt = true;
    } else if (tag_is(b, pos, "data")) {
      if (!have_fmt) throw IngestionError("data chunk precedes fmt chunk", pos);
      const std::size_t frame = 2u * wav.channels;
      const std::size_t n = size / frame * wav.channels;
      wav.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        wav.samples[i] = static_cast<std::int16_t>(u16(b, body + 2 * i));
      }
      return wav;
    }
    pos = body + size + (size & 1u);
  }
  throw IngestionError(have_fmt ? "missing data chunk" : "missing fmt chunk", pos);
}

SignalMatrix load_audio(const std::filesystem::path& path, std::span<const int> channels) {
  const WavData wav = read_wav(path);
  if (channels.empty()) throw ConfigError("no channels requested");
  const Index frames = static_cast<Index>(wav.samples.size() / wav.channels);
  if (frames < 2) throw IngestionError("WAV file has fewer than 2 frames: " + path.string());

  SignalMatrix s;
  s.data.resize(static_cast<Index>(channels.size()), frames);
  s.sample_rate = static_cast<double>(wav.sample_rate);
  s.generator = "wav:" + path.filename().string();
  for (std::size_t r = 0; r < channels.size(); ++r) {
    const int ch = channels[r];
    if (ch < 0 || ch >= wav.channels) {
      throw ConfigError("channel " + std::to_string(ch) + " out of range for " +
                        std::to_string(wav.channels) + "-channel file");
    }
    for (Index k = 0; k < frames; ++k) {
      s.data(static_cast<Index>(r), k) =
          static_cast<double>(wav.samples[static_cast<std::size_t>(k) * wav.channels + ch]);
    }
  }
  try {
    peak_normalize(s);
  } catch (const NumericalError&) {
    throw IngestionError(path.string() + ": zero peak amplitude");
  }
  return s;
}

SignalMatrix load_audio(const std::filesystem::path& path, int channel) {
  const std::array<int, 1> ch{channel};
  return load_audio(path, ch);
}

}  // namespace advica
