#pragma once

// RIFF/WAVE reader and writer for little-endian PCM16 and IEEE float32 data,
// mono or multichannel, including WAVE_FORMAT_EXTENSIBLE headers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "arraydps/types.hpp"

namespace arraydps {

enum class SampleFormat { Pcm16, Float32 };

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}
inline void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

inline constexpr std::uint16_t kFormatPcm = 1;
inline constexpr std::uint16_t kFormatFloat = 3;
inline constexpr std::uint16_t kFormatExtensible = 0xfffe;

}  // namespace detail

inline MultichannelWaveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw IoError("malformed wav header (missing RIFF/WAVE): " + name);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = detail::read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Some writers leave a bogus size on a trailing data chunk; clamp it.
      if (std::memcmp(chunk, "data", 4) != 0) throw IoError("truncated wav chunk: " + name);
    }
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw IoError("malformed wav fmt chunk: " + name);
      const unsigned char* f = bytes.data() + body;
      format = detail::read_u16(f);
      channels = detail::read_u16(f + 2);
      rate = detail::read_u32(f + 4);
      bits = detail::read_u16(f + 14);
      if (format == detail::kFormatExtensible) {
        if (avail < 26) throw IoError("malformed extensible wav fmt chunk: " + name);
        format = detail::read_u16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = avail;
    }
    pos = body + avail + (avail & 1u);
  }
  if (!have_fmt) throw IoError("wav file has no fmt chunk: " + name);
  if (data == nullptr) throw IoError("wav file has no data chunk: " + name);
  if (channels == 0 || rate == 0) throw IoError("malformed wav fmt values: " + name);

  const bool pcm16 = format == detail::kFormatPcm && bits == 16;
  const bool float32 = format == detail::kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw IoError("unsupported wav codec (format " + std::to_string(format) + ", " +
                  std::to_string(bits) + " bits): " + name);

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  if (frames == 0) throw IoError("wav file contains no samples: " + name);

  MultichannelWaveform out;
  out.channels.assign(channels, Waveform(RealVector(static_cast<Index>(frames)),
                                         static_cast<int>(rate)));
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (t * channels + c) * width;
      double v;
      if (pcm16) {
        v = static_cast<std::int16_t>(detail::read_u16(p)) / 32768.0;
      } else {
        const std::uint32_t u = detail::read_u32(p);
        float fv;
        std::memcpy(&fv, &u, sizeof fv);
        v = fv;
      }
      out.channels[c].samples[static_cast<Index>(t)] = v;
    }
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, const MultichannelWaveform& w,
                      SampleFormat format = SampleFormat::Float32) {
  w.validate();
  const auto channels = static_cast<std::uint16_t>(w.channel_count());
  const auto frames = static_cast<std::size_t>(w.length());
  const std::uint16_t bits = format == SampleFormat::Pcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const auto data_size = static_cast<std::uint32_t>(frames * block);
  const auto rate = static_cast<std::uint32_t>(w.sample_rate());

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  detail::put_tag(out, "RIFF");
  detail::put_u32(out, 36 + data_size);
  detail::put_tag(out, "WAVE");
  detail::put_tag(out, "fmt ");
  detail::put_u32(out, 16);
  detail::put_u16(out, format == SampleFormat::Pcm16 ? detail::kFormatPcm : detail::kFormatFloat);
  detail::put_u16(out, channels);
  detail::put_u32(out, rate);
  detail::put_u32(out, rate * block);
  detail::put_u16(out, block);
  detail::put_u16(out, bits);
  detail::put_tag(out, "data");
  detail::put_u32(out, data_size);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = w.channels[c].samples[static_cast<Index>(t)];
      if (format == SampleFormat::Pcm16) {
        const double q = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        detail::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        const float fv = static_cast<float>(v);
        std::uint32_t u;
        std::memcpy(&u, &fv, sizeof u);
        detail::put_u32(out, u);
      }
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open wav file for writing: " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("failed writing wav file: " + path.string());
}

inline void write_wav(const std::filesystem::path& path, const Waveform& w,
                      SampleFormat format = SampleFormat::Float32) {
  write_wav(path, MultichannelWaveform({w}), format);
}

}  // namespace arraydps
