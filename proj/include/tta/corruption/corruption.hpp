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

#ifndef TTA_CORRUPTION_CORRUPTION_HPP
#define TTA_CORRUPTION_CORRUPTION_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tta/audio/waveform.hpp"
#include "tta/rng.hpp"

namespace tta {

enum class NoiseSource { DD, EB, RT, Gaussian };

std::string to_string(NoiseSource s);
NoiseSource noise_source_from_string(const std::string& s);

// Exactly one of snr_db / lambda is active: snr_db for background noise,
// lambda for Gaussian shift.
struct CorruptionSpec {
  NoiseSource noise_source = NoiseSource::EB;
  std::optional<double> snr_db;
  std::optional<double> lambda;
  std::uint64_t seed = 0;

  void validate() const;
};

// Scale factor s such that clean + s*noise realizes `snr_db` exactly:
// s = sqrt((||x||^2 / ||n||^2) * 10^(-SNR/10)).
double snr_noise_scale(const Waveform& clean, const Waveform& noise, double snr_db);

// clean + scale*noise, no clipping. Linear in the clean signal for fixed scale.
Waveform mix_with_scale(const Waveform& clean, const Waveform& noise, double scale);

// Background-noise corruption at an exact SNR.
Waveform mix_noise(const Waveform& clean, const Waveform& noise, double snr_db);

// Realized SNR in dB of a (clean, scaled-noise) decomposition.
double realized_snr_db(const Waveform& clean, const Waveform& scaled_noise);

// Contiguous random slice of round(duration_s * sample_rate) samples; the
// offset is the only randomness and comes from `rng`.
Waveform random_clip(const Waveform& long_noise, double duration_s, Rng& rng);

// x + lambda * g with g ~ N(0, 1) per sample, lambda in [0, 1].
Waveform gaussian_shift(const Waveform& x, double lambda, Rng& rng);

// Windowed-sinc resampler, used when a noise bank's rate differs from the
// clean signal's rate.
Waveform resample_sinc(const Waveform& w, int target_rate);

struct CorruptionRecord {
  std::size_t sample_index = 0;
  std::int64_t noise_offset = -1;  // -1 for Gaussian corruption
  double realized_snr_db = 0.0;    // NaN for Gaussian corruption
};

struct CorruptedSet {
  std::vector<Waveform> waveforms;
  std::vector<CorruptionRecord> records;
};

// Corrupt every test sample independently: background noise draws a fresh
// random clip per sample from one rng stream seeded by spec.seed and consumed
// in sample order; Gaussian draws fresh noise per sample from the same stream.
CorruptedSet corrupt_set(const std::vector<Waveform>& test_set, const CorruptionSpec& spec,
                         const std::map<NoiseSource, Waveform>& noise_bank);

}  // namespace tta

#endif  // TTA_CORRUPTION_CORRUPTION_HPP
