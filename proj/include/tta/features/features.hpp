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

#ifndef TTA_FEATURES_FEATURES_HPP
#define TTA_FEATURES_FEATURES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tta/audio/waveform.hpp"
#include "tta/dmat.hpp"
#include "tta/nn/tensor.hpp"
#include "tta/rng.hpp"

namespace tta {

// Log-power mel spectrogram, mel_bins x frames.
struct SpectrogramImage {
  DMat values;

  int mel_bins() const { return values.rows; }
  int frames() const { return values.cols; }
};

struct FeatureConfig {
  int n_fft = 400;   // 25 ms at 16 kHz
  int hop = 160;
  int mel_bins = 64;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 -> sample_rate / 2
  double log_floor = 1e-6;
  bool centered = true;

  std::uint64_t hash() const;
  std::string canonical() const;
};

// STFT magnitude -> power -> mel filterbank -> log(. + log_floor).
// Centered padding yields 1 + floor(len/hop) frames; uncentered yields
// 1 + floor((len - n_fft)/hop).
SpectrogramImage mel_spectrogram(const Waveform& x, const FeatureConfig& cfg);

int mel_frame_count(std::size_t len, const FeatureConfig& cfg);

// Time-shift pretext classes: no shift, left shift, right shift.
enum class Shift { None = 0, Left = 1, Right = 2 };

struct ShiftClass {
  Shift kind = Shift::None;
  double fraction = 0.2;  // identical for Left and Right within an experiment
};

// Circular rotation of the sample array by round(fraction * len).
Waveform time_shift(const Waveform& x, ShiftClass cls);

struct AugmentConfig {
  double weak_shift_frac = 0.05;  // max circular frame shift, fraction of frames
  double band_frac = 0.06;        // max masked band width, fraction of the axis
  int min_bands = 1;
  int max_bands = 2;
};

// Weak: small random circular shift along the frame axis.
SpectrogramImage weak_augment(const SpectrogramImage& s, const AugmentConfig& cfg, Rng& rng);
// Strong: weak shift plus 1-2 time bands and 1-2 frequency bands replaced by
// the spectrogram mean.
SpectrogramImage strong_augment(const SpectrogramImage& s, const AugmentConfig& cfg, Rng& rng);

// Stack spectrograms into a (B, 1, mel, frames) model input batch.
Tensor stack_batch(const std::vector<const SpectrogramImage*>& items);
Tensor stack_batch(const std::vector<SpectrogramImage>& items);

// Pretext expansion for the time-shift task: each waveform contributes one
// spectrogram per shift class, labeled 0/1/2.
struct PretextSet {
  std::vector<SpectrogramImage> inputs;  // 3 per source waveform, grouped
  std::vector<int> labels;
};
PretextSet make_pretext_set(const std::vector<Waveform>& waves, const FeatureConfig& cfg,
                            double fraction);

// On-disk spectrogram cache: one raw array file per sample plus an index
// manifest (path, shape, dtype, config hash).
void save_spectrogram(const std::string& path, const SpectrogramImage& s);
SpectrogramImage load_spectrogram(const std::string& path);

struct CacheIndexEntry {
  std::string path;
  int rows = 0;
  int cols = 0;
  std::string dtype = "float64";
  std::uint64_t config_hash = 0;
};
void write_cache_index(const std::string& index_path, const std::vector<CacheIndexEntry>& entries);
std::vector<CacheIndexEntry> read_cache_index(const std::string& index_path);

}  // namespace tta

#endif  // TTA_FEATURES_FEATURES_HPP
