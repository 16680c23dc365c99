// Copyright 2026  ttaudio authors
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

#include "tta/audio/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "tta/errors.hpp"

namespace tta {

double Waveform::energy() const {
  double e = 0.0;
  for (double s : samples) e += s * s;
  return e;
}

Waveform fit_length(const Waveform& w, std::size_t num_samples) {
  Waveform out;
  out.sample_rate = w.sample_rate;
  if (w.samples.size() == num_samples) {
    out.samples = w.samples;
  } else if (w.samples.size() < num_samples) {
    out.samples = w.samples;
    out.samples.resize(num_samples, 0.0);
  } else {
    const std::size_t off = (w.samples.size() - num_samples) / 2;
    out.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(off),
                       w.samples.begin() + static_cast<std::ptrdiff_t>(off + num_samples));
  }
  return out;
}

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavFormatError("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw WavFormatError("not a RIFF/WAVE file: " + path);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const char* id = reinterpret_cast<const char*>(buf.data() + pos);
    const std::uint32_t len = read_u32(buf.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > buf.size()) throw WavFormatError("truncated chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw WavFormatError("short fmt chunk in " + path);
      format = read_u16(buf.data() + body);
      channels = read_u16(buf.data() + body + 2);
      rate = read_u32(buf.data() + body + 4);
      bits = read_u16(buf.data() + body + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = buf.data() + body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }
  if (data == nullptr || rate == 0) throw WavFormatError("missing fmt/data chunk: " + path);
  if (channels != 1) throw WavFormatError("only mono supported: " + path);

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    const std::size_t n = data_len / 2;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::int16_t v =
          static_cast<std::int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
      w.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const std::size_t n = data_len / 4;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t u = read_u32(data + 4 * i);
      float f;
      std::memcpy(&f, &u, 4);
      w.samples[i] = static_cast<double>(f);
    }
  } else {
    throw WavFormatError("unsupported encoding (want PCM16 or float32): " + path);
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w, WavEncoding enc) {
  const std::uint16_t bits = enc == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t fmt = enc == WavEncoding::Pcm16 ? 1 : 3;
  const std::uint32_t nbytes = static_cast<std::uint32_t>(w.samples.size()) * (bits / 8);

  std::string out;
  out.reserve(44 + nbytes);
  out += "RIFF";
  put_u32(out, 36 + nbytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, fmt);
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * (bits / 8));
  put_u16(out, static_cast<std::uint16_t>(bits / 8));
  put_u16(out, bits);
  out += "data";
  put_u32(out, nbytes);

  if (enc == WavEncoding::Pcm16) {
    for (double s : w.samples) {
      const double clamped = std::clamp(s, -1.0, 32767.0 / 32768.0);
      const auto v = static_cast<std::int16_t>(std::lround(clamped * 32768.0));
      put_u16(out, static_cast<std::uint16_t>(v));
    }
  } else {
    for (double s : w.samples) {
      const float f = static_cast<float>(s);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(out, u);
    }
  }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw WavFormatError("cannot write " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace tta
