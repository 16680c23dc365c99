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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "tta/audio/waveform.hpp"
#include "tta/errors.hpp"

using namespace tta;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Waveform make_ramp(std::size_t n, int sr) {
  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = -0.9 + 1.8 * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return w;
}

}  // namespace

TEST_CASE("energy is the sum of squared samples") {
  Waveform w;
  w.sample_rate = 16000;
  w.samples = {3.0, -4.0};
  CHECK(w.energy() == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(w.duration_s() == doctest::Approx(2.0 / 16000.0));
}

TEST_CASE("fit_length pads short signals with trailing zeros") {
  Waveform w;
  w.sample_rate = 100;
  w.samples = {1.0, 2.0, 3.0};
  Waveform padded = fit_length(w, 5);
  REQUIRE(padded.samples.size() == 5);
  CHECK(padded.samples[0] == 1.0);
  CHECK(padded.samples[2] == 3.0);
  CHECK(padded.samples[3] == 0.0);
  CHECK(padded.samples[4] == 0.0);
}

TEST_CASE("fit_length center-crops long signals") {
  Waveform w;
  w.sample_rate = 100;
  w.samples = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  // 6 -> 4 drops one sample on each side.
  Waveform cropped = fit_length(w, 4);
  REQUIRE(cropped.samples.size() == 4);
  CHECK(cropped.samples[0] == 1.0);
  CHECK(cropped.samples[3] == 4.0);
  // Exact length is a no-op.
  Waveform same = fit_length(w, 6);
  CHECK(same.samples == w.samples);
}

TEST_CASE("float32 wav round-trips samples beyond [-1,1] unclipped") {
  Waveform w;
  w.sample_rate = 16000;
  w.samples = {0.25, -0.5, 1.75, -2.25, 0.0};
  const std::string path = tmp_path("ttaudio_f32.wav");
  write_wav(path, w, WavEncoding::Float32);
  Waveform r = read_wav(path);
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(r.sample_rate == 16000);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    // float32 storage quantizes doubles, nothing more.
    CHECK(r.samples[i] == doctest::Approx(w.samples[i]).epsilon(1e-7));
  }
  std::remove(path.c_str());
}

TEST_CASE("pcm16 wav quantizes to 1/32768 steps and clamps") {
  Waveform w = make_ramp(64, 8000);
  w.samples[0] = 1.5;    // above full scale
  w.samples[1] = -1.5;   // below full scale
  const std::string path = tmp_path("ttaudio_pcm16.wav");
  write_wav(path, w, WavEncoding::Pcm16);
  Waveform r = read_wav(path);
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(r.sample_rate == 8000);
  CHECK(r.samples[0] == doctest::Approx(32767.0 / 32768.0));
  CHECK(r.samples[1] == doctest::Approx(-1.0));
  for (std::size_t i = 2; i < w.samples.size(); ++i) {
    CHECK(std::abs(r.samples[i] - w.samples[i]) <= 0.5 / 32768.0 + 1e-12);
  }
  std::remove(path.c_str());
}

TEST_CASE("reading a non-wav file fails loudly") {
  const std::string path = tmp_path("ttaudio_not_a_wav.bin");
  {
    FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("definitely not RIFF data", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(read_wav(path), WavFormatError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_wav(tmp_path("ttaudio_enoent.wav")), WavFormatError);
}
