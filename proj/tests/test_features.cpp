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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "tta/errors.hpp"
#include "tta/features/features.hpp"

using namespace tta;

namespace {

Waveform tone(double hz, int sr, std::size_t n) {
  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = std::sin(2.0 * M_PI * hz * static_cast<double>(i) / sr);
  }
  return w;
}

SpectrogramImage random_spec(int mel, int frames, Rng& rng) {
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  SpectrogramImage s;
  s.values = DMat(mel, frames);
  for (double& v : s.values.v) v = dist(rng);
  return s;
}

}  // namespace

TEST_CASE("centered frame count: 1 s at 16 kHz with hop 160 gives 101 frames") {
  FeatureConfig cfg;  // n_fft=400, hop=160, centered
  CHECK(mel_frame_count(16000, cfg) == 101);
  // Non-divisible lengths round down plus the centered frame at t=0.
  CHECK(mel_frame_count(16001, cfg) == 101);
  CHECK(mel_frame_count(16159, cfg) == 101);
  CHECK(mel_frame_count(16160, cfg) == 102);
  FeatureConfig flat = cfg;
  flat.centered = false;
  CHECK(mel_frame_count(16000, flat) == 98);  // 1 + (16000-400)/160
}

TEST_CASE("mel spectrogram shape and silence floor") {
  FeatureConfig cfg;
  cfg.n_fft = 256;
  cfg.hop = 160;
  cfg.mel_bins = 32;
  Waveform silence;
  silence.sample_rate = 4000;
  silence.samples.assign(4000, 0.0);
  SpectrogramImage s = mel_spectrogram(silence, cfg);
  CHECK(s.mel_bins() == 32);
  CHECK(s.frames() == 26);  // 1 + 4000/160
  // Zero input -> every cell is exactly log(log_floor).
  const double floor_val = std::log(cfg.log_floor);
  for (double v : s.values.v) CHECK(v == doctest::Approx(floor_val).epsilon(1e-12));
}

TEST_CASE("mel spectrogram orders tone frequencies") {
  FeatureConfig cfg;
  cfg.n_fft = 256;
  cfg.hop = 160;
  cfg.mel_bins = 32;
  const int sr = 4000;
  auto peak_row = [&](double hz) {
    SpectrogramImage s = mel_spectrogram(tone(hz, sr, 4000), cfg);
    // Use a middle frame to avoid edge padding effects.
    const int f = s.frames() / 2;
    int best = 0;
    for (int m = 1; m < s.mel_bins(); ++m) {
      if (s.values.at(m, f) > s.values.at(best, f)) best = m;
    }
    return best;
  };
  const int low = peak_row(300.0);
  const int mid = peak_row(800.0);
  const int high = peak_row(1600.0);
  CHECK(low < mid);
  CHECK(mid < high);
}

TEST_CASE("mel spectrogram rejects too-short input") {
  FeatureConfig cfg;
  cfg.n_fft = 400;
  Waveform tiny;
  tiny.sample_rate = 16000;
  tiny.samples.assign(200, 0.1);
  CHECK_THROWS_AS(mel_spectrogram(tiny, cfg), TooShort);
}

TEST_CASE("feature config hash tracks every field") {
  FeatureConfig a;
  FeatureConfig b = a;
  CHECK(a.hash() == b.hash());
  b.mel_bins = 48;
  CHECK(a.hash() != b.hash());
  b = a;
  b.hop = 200;
  CHECK(a.hash() != b.hash());
  b = a;
  b.log_floor = 1e-5;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("time_shift left/right hand oracle on a 10-sample ramp") {
  Waveform w;
  w.sample_rate = 10;
  w.samples = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  // fraction 0.2 of 10 samples = 2.
  Waveform left = time_shift(w, {Shift::Left, 0.2});
  CHECK(left.samples == std::vector<double>{2, 3, 4, 5, 6, 7, 8, 9, 0, 1});
  Waveform right = time_shift(w, {Shift::Right, 0.2});
  CHECK(right.samples == std::vector<double>{8, 9, 0, 1, 2, 3, 4, 5, 6, 7});
  Waveform none = time_shift(w, {Shift::None, 0.2});
  CHECK(none.samples == w.samples);
  // Left then right at the same fraction is the identity.
  Waveform back = time_shift(left, {Shift::Right, 0.2});
  CHECK(back.samples == w.samples);
}

TEST_CASE("time_shift preserves the sample multiset (energy in particular)") {
  Rng rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Waveform w;
  w.sample_rate = 4000;
  w.samples.resize(4001);  // odd length
  for (double& v : w.samples) v = dist(rng);
  for (Shift k : {Shift::Left, Shift::Right}) {
    Waveform s = time_shift(w, {k, 0.2});
    auto a = w.samples;
    auto b = s.samples;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
}

TEST_CASE("weak augment only rotates frames") {
  Rng rng(42);
  SpectrogramImage s = random_spec(32, 26, rng);
  for (int trial = 0; trial < 20; ++trial) {
    AugmentConfig cfg;
    SpectrogramImage out = weak_augment(s, cfg, rng);
    REQUIRE(out.mel_bins() == 32);
    REQUIRE(out.frames() == 26);
    // Every column of the output must be a column of the input.
    for (int f = 0; f < out.frames(); ++f) {
      bool matched = false;
      for (int g = 0; g < s.frames() && !matched; ++g) {
        bool same = true;
        for (int m = 0; m < s.mel_bins(); ++m) {
          if (out.values.at(m, f) != s.values.at(m, g)) {
            same = false;
            break;
          }
        }
        matched = same;
      }
      CHECK(matched);
    }
  }
}

TEST_CASE("strong augment masks bounded area with the mean value") {
  Rng rng(7);
  SpectrogramImage s = random_spec(32, 26, rng);
  double mean = 0.0;
  for (double v : s.values.v) mean += v;
  mean /= static_cast<double>(s.values.size());

  AugmentConfig cfg;
  cfg.weak_shift_frac = 0.0;  // isolate the masking
  const auto total = static_cast<double>(s.values.size());
  for (int trial = 0; trial < 50; ++trial) {
    SpectrogramImage out = strong_augment(s, cfg, rng);
    int changed = 0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (out.values.v[i] != s.values.v[i]) {
        ++changed;
        // Masked cells take the (shift-invariant) spectrogram mean.
        CHECK(out.values.v[i] == doctest::Approx(mean).epsilon(1e-12));
      }
    }
    CHECK(changed > 0);
    CHECK(static_cast<double>(changed) / total <= 0.30);
  }
}

TEST_CASE("stack_batch lays out (B,1,mel,frames)") {
  SpectrogramImage a;
  a.values = DMat(2, 3);
  SpectrogramImage b;
  b.values = DMat(2, 3);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      a.values.at(i, j) = 10.0 * i + j;
      b.values.at(i, j) = -(10.0 * i + j);
    }
  }
  Tensor t = stack_batch({a, b});
  REQUIRE(t.shape() == std::vector<int>{2, 1, 2, 3});
  CHECK(t.at(0, 0, 0, 0) == 0.0f);
  CHECK(t.at(0, 0, 1, 2) == 12.0f);
  CHECK(t.at(1, 0, 1, 2) == -12.0f);
}

TEST_CASE("pretext set has one spectrogram per shift class with labels 0/1/2") {
  FeatureConfig cfg;
  cfg.n_fft = 256;
  cfg.hop = 160;
  cfg.mel_bins = 16;
  std::vector<Waveform> waves = {tone(300.0, 4000, 4000), tone(700.0, 4000, 4000)};
  PretextSet ps = make_pretext_set(waves, cfg, 0.2);
  REQUIRE(ps.inputs.size() == 6);
  REQUIRE(ps.labels == std::vector<int>{0, 1, 2, 0, 1, 2});
  // The unshifted copy matches a direct feature pass.
  SpectrogramImage direct = mel_spectrogram(waves[0], cfg);
  CHECK(ps.inputs[0].values.v == direct.values.v);
  // Shifted copies differ from the unshifted one.
  CHECK(ps.inputs[1].values.v != ps.inputs[0].values.v);
  CHECK(ps.inputs[2].values.v != ps.inputs[0].values.v);
}

TEST_CASE("spectrogram cache round-trips bit-exactly") {
  Rng rng(9);
  SpectrogramImage s = random_spec(32, 26, rng);
  const auto dir = std::filesystem::temp_directory_path() / "ttaudio_cache_test";
  std::filesystem::create_directories(dir);
  const std::string spec_path = (dir / "sample0.spec").string();
  save_spectrogram(spec_path, s);
  SpectrogramImage r = load_spectrogram(spec_path);
  CHECK(r.values.rows == 32);
  CHECK(r.values.cols == 26);
  CHECK(r.values.v == s.values.v);

  FeatureConfig cfg;
  std::vector<CacheIndexEntry> entries = {
      {spec_path, 32, 26, "float64", cfg.hash()},
  };
  const std::string index_path = (dir / "index.csv").string();
  write_cache_index(index_path, entries);
  auto back = read_cache_index(index_path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].path == spec_path);
  CHECK(back[0].rows == 32);
  CHECK(back[0].cols == 26);
  CHECK(back[0].config_hash == cfg.hash());
  std::filesystem::remove_all(dir);
}
