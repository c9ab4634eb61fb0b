// stc/audio/wav.hpp

// Copyright 2026  The STC Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef STC_AUDIO_WAV_HPP_
#define STC_AUDIO_WAV_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "stc/base/error.hpp"

namespace stc {

/// Interleaved PCM data as decoded from a RIFF/WAVE file, scaled to [-1, 1].
struct WavData {
  int sample_rate = 0;
  int num_channels = 0;
  std::vector<float> interleaved;

  std::size_t NumFrames() const {
    return num_channels == 0 ? 0 : interleaved.size() / num_channels;
  }
};

namespace internal {

inline std::uint32_t ReadLe32(const unsigned char *p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t ReadLe16(const unsigned char *p) {
  return std::uint16_t(p[0] | (p[1] << 8));
}
inline void PutLe32(std::string *out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(char((v >> (8 * i)) & 0xff));
}
inline void PutLe16(std::string *out, std::uint16_t v) {
  out->push_back(char(v & 0xff));
  out->push_back(char((v >> 8) & 0xff));
}

}  // namespace internal

/// Decodes 8/16/24/32-bit integer PCM and 32-bit float WAVE bytes.
inline WavData DecodeWav(const std::string &bytes, const std::string &label) {
  using internal::ReadLe16;
  using internal::ReadLe32;
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    Fail(ErrorKind::kDecode, label + ": not a RIFF/WAVE file");
  int format = 0, channels = 0, rate = 0, bits = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t size = ReadLe32(p + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > n && std::memcmp(p + pos, "data", 4) != 0)
      Fail(ErrorKind::kDecode, label + ": truncated chunk");
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (size < 16) Fail(ErrorKind::kDecode, label + ": short fmt chunk");
      format = ReadLe16(p + body);
      channels = ReadLe16(p + body + 2);
      rate = int(ReadLe32(p + body + 4));
      bits = ReadLe16(p + body + 14);
      if (format == 0xFFFE && size >= 26) format = ReadLe16(p + body + 24);
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      if (!have_fmt) Fail(ErrorKind::kDecode, label + ": data before fmt");
      if (channels <= 0 || rate <= 0)
        Fail(ErrorKind::kDecode, label + ": invalid channel count or rate");
      const std::size_t avail = std::min<std::size_t>(size, n - body);
      const int width = bits / 8;
      if (!((format == 1 && (bits == 8 || bits == 16 || bits == 24 || bits == 32)) ||
            (format == 3 && bits == 32)))
        Fail(ErrorKind::kDecode, label + ": unsupported sample format");
      const std::size_t count = avail / width;
      WavData out;
      out.sample_rate = rate;
      out.num_channels = channels;
      out.interleaved.resize(count - count % channels);
      const unsigned char *d = p + body;
      for (std::size_t i = 0; i < out.interleaved.size(); ++i, d += width) {
        float v = 0.0f;
        if (format == 3) {
          std::uint32_t u = ReadLe32(d);
          std::memcpy(&v, &u, 4);
        } else if (bits == 8) {
          v = (float(d[0]) - 128.0f) / 128.0f;
        } else if (bits == 16) {
          v = float(std::int16_t(ReadLe16(d))) / 32768.0f;
        } else if (bits == 24) {
          std::int32_t s = std::int32_t(d[0] | (d[1] << 8) | (d[2] << 16));
          if (s & 0x800000) s -= 0x1000000;
          v = float(s) / 8388608.0f;
        } else {
          v = float(double(std::int32_t(ReadLe32(d))) / 2147483648.0);
        }
        out.interleaved[i] = v;
      }
      return out;
    }
    pos = body + size + (size & 1);
  }
  Fail(ErrorKind::kDecode, label + ": no data chunk");
}

inline WavData ReadWav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorKind::kDecode, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return DecodeWav(bytes, path);
}

/// Encodes mono samples as 16-bit PCM; values are clipped to [-1, 1].
inline std::string EncodeWav16(const std::vector<float> &samples, int sample_rate,
                               int num_channels = 1) {
  using internal::PutLe16;
  using internal::PutLe32;
  std::string out;
  const std::uint32_t data_bytes = std::uint32_t(samples.size() * 2);
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutLe32(&out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutLe32(&out, 16);
  PutLe16(&out, 1);
  PutLe16(&out, std::uint16_t(num_channels));
  PutLe32(&out, std::uint32_t(sample_rate));
  PutLe32(&out, std::uint32_t(sample_rate * num_channels * 2));
  PutLe16(&out, std::uint16_t(num_channels * 2));
  PutLe16(&out, 16);
  out += "data";
  PutLe32(&out, data_bytes);
  for (float s : samples) {
    const float c = std::clamp(s, -1.0f, 1.0f);
    const auto q = std::int16_t(std::lround(c * 32767.0f));
    PutLe16(&out, std::uint16_t(q));
  }
  return out;
}

inline void WriteWav16(const std::string &path, const std::vector<float> &samples,
                       int sample_rate, int num_channels = 1) {
  std::ofstream os(path, std::ios::binary);
  if (!os) Fail(ErrorKind::kIo, "cannot write " + path);
  const std::string bytes = EncodeWav16(samples, sample_rate, num_channels);
  os.write(bytes.data(), std::streamsize(bytes.size()));
  if (!os) Fail(ErrorKind::kIo, "short write to " + path);
}

}  // namespace stc

#endif  // STC_AUDIO_WAV_HPP_
