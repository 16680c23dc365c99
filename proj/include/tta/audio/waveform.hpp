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

#ifndef TTA_AUDIO_WAVEFORM_HPP
#define TTA_AUDIO_WAVEFORM_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace tta {

// Mono sample buffer. Amplitudes are dimensionless; corrupted signals may
// exceed [-1, 1] and are kept unclipped.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
  // Sum of squared amplitudes (||x||_2^2).
  double energy() const;
};

// Pad with trailing zeros or center-crop so the waveform holds exactly
// `num_samples` samples. Used to normalize corpora to the 1 s clip length.
Waveform fit_length(const Waveform& w, std::size_t num_samples);

enum class WavEncoding { Pcm16, Float32 };

// Mono WAV. Multi-channel files are rejected (out of scope).
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w,
               WavEncoding enc = WavEncoding::Float32);

}  // namespace tta

#endif  // TTA_AUDIO_WAVEFORM_HPP
