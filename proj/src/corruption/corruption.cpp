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

#include "tta/corruption/corruption.hpp"

#include <cmath>
#include <limits>

#include "tta/errors.hpp"

namespace tta {

std::string to_string(NoiseSource s) {
  switch (s) {
    case NoiseSource::DD: return "dd";
    case NoiseSource::EB: return "eb";
    case NoiseSource::RT: return "rt";
    case NoiseSource::Gaussian: return "gauss";
  }
  return "?";
}

NoiseSource noise_source_from_string(const std::string& s) {
  if (s == "dd") return NoiseSource::DD;
  if (s == "eb") return NoiseSource::EB;
  if (s == "rt") return NoiseSource::RT;
  if (s == "gauss" || s == "gaussian") return NoiseSource::Gaussian;
  throw UnknownNoiseSource(s);
}

void CorruptionSpec::validate() const {
  if (noise_source == NoiseSource::Gaussian) {
    if (!lambda || snr_db) {
      throw LambdaOutOfRange("Gaussian corruption takes lambda, not snr_db");
    }
    if (*lambda < 0.0 || *lambda > 1.0) {
      throw LambdaOutOfRange("lambda must be in [0,1], got " + std::to_string(*lambda));
    }
  } else {
    if (!snr_db || lambda) {
      throw UnknownNoiseSource("background noise corruption takes snr_db, not lambda");
    }
  }
}

double snr_noise_scale(const Waveform& clean, const Waveform& noise, double snr_db) {
  if (clean.samples.size() != noise.samples.size() ||
      clean.sample_rate != noise.sample_rate) {
    throw LengthMismatch("clean " + std::to_string(clean.samples.size()) + "@" +
                         std::to_string(clean.sample_rate) + " vs noise " +
                         std::to_string(noise.samples.size()) + "@" +
                         std::to_string(noise.sample_rate));
  }
  const double ex = clean.energy();
  const double en = noise.energy();
  if (en <= 0.0) throw ZeroEnergyNoise("noise clip has zero energy");
  if (ex <= 0.0) throw ZeroEnergySignal("clean signal has zero energy");
  return std::sqrt(ex / en * std::pow(10.0, -snr_db / 10.0));
}

Waveform mix_with_scale(const Waveform& clean, const Waveform& noise, double scale) {
  Waveform out;
  out.sample_rate = clean.sample_rate;
  out.samples.resize(clean.samples.size());
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    out.samples[i] = clean.samples[i] + scale * noise.samples[i];
  }
  return out;
}

Waveform mix_noise(const Waveform& clean, const Waveform& noise, double snr_db) {
  return mix_with_scale(clean, noise, snr_noise_scale(clean, noise, snr_db));
}

double realized_snr_db(const Waveform& clean, const Waveform& scaled_noise) {
  return 10.0 * std::log10(clean.energy() / scaled_noise.energy());
}

Waveform random_clip(const Waveform& long_noise, double duration_s, Rng& rng) {
  const auto len = static_cast<std::int64_t>(std::llround(duration_s * long_noise.sample_rate));
  const auto total = static_cast<std::int64_t>(long_noise.samples.size());
  if (len > total) {
    throw ClipTooLong("clip of " + std::to_string(len) + " samples from " +
                      std::to_string(total));
  }
  std::uniform_int_distribution<std::int64_t> dist(0, total - len);
  const std::int64_t off = dist(rng);
  Waveform out;
  out.sample_rate = long_noise.sample_rate;
  out.samples.assign(long_noise.samples.begin() + off, long_noise.samples.begin() + off + len);
  return out;
}

Waveform gaussian_shift(const Waveform& x, double lambda, Rng& rng) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw LambdaOutOfRange(std::to_string(lambda));
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Waveform out;
  out.sample_rate = x.sample_rate;
  out.samples.resize(x.samples.size());
  for (std::size_t i = 0; i < x.samples.size(); ++i) {
    out.samples[i] = x.samples[i] + lambda * normal(rng);
  }
  return out;
}

Waveform resample_sinc(const Waveform& w, int target_rate) {
  if (w.sample_rate == target_rate) return w;
  const double ratio = static_cast<double>(target_rate) / w.sample_rate;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(w.samples.size()) * ratio));
  // Hann-windowed sinc, cutoff at the lower Nyquist of the two rates.
  const int half_taps = 32;
  const double cutoff = std::min(1.0, ratio) * 0.95;  // fraction of source Nyquist

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  const auto n_in = static_cast<std::int64_t>(w.samples.size());
  for (std::size_t i = 0; i < out_len; ++i) {
    const double center = static_cast<double>(i) / ratio;
    const auto lo = static_cast<std::int64_t>(std::floor(center)) - half_taps + 1;
    const auto hi = static_cast<std::int64_t>(std::floor(center)) + half_taps;
    double acc = 0.0;
    for (std::int64_t k = std::max<std::int64_t>(0, lo); k <= std::min(n_in - 1, hi); ++k) {
      const double t = (static_cast<double>(k) - center) * cutoff;
      double sinc = 1.0;
      if (t != 0.0) sinc = std::sin(M_PI * t) / (M_PI * t);
      const double win_arg = (static_cast<double>(k) - center) / half_taps;
      const double win = 0.5 + 0.5 * std::cos(M_PI * win_arg);
      acc += w.samples[static_cast<std::size_t>(k)] * sinc * cutoff * win;
    }
    out.samples[i] = acc;
  }
  return out;
}

CorruptedSet corrupt_set(const std::vector<Waveform>& test_set, const CorruptionSpec& spec,
                         const std::map<NoiseSource, Waveform>& noise_bank) {
  spec.validate();
  CorruptedSet out;
  out.waveforms.reserve(test_set.size());
  out.records.reserve(test_set.size());
  Rng rng(spec.seed);

  if (spec.noise_source == NoiseSource::Gaussian) {
    for (std::size_t i = 0; i < test_set.size(); ++i) {
      out.waveforms.push_back(gaussian_shift(test_set[i], *spec.lambda, rng));
      out.records.push_back({i, -1, std::numeric_limits<double>::quiet_NaN()});
    }
    return out;
  }

  const auto it = noise_bank.find(spec.noise_source);
  if (it == noise_bank.end()) {
    throw UnknownNoiseSource("noise bank has no entry for " + to_string(spec.noise_source));
  }
  // Resample once per run; the offset below indexes the resampled noise.
  Waveform bank = it->second;
  if (!test_set.empty() && bank.sample_rate != test_set.front().sample_rate) {
    bank = resample_sinc(bank, test_set.front().sample_rate);
  }

  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const Waveform& clean = test_set[i];
    const auto len = static_cast<std::int64_t>(clean.samples.size());
    const auto total = static_cast<std::int64_t>(bank.samples.size());
    if (len > total) {
      throw ClipTooLong("noise bank shorter than test sample");
    }
    std::uniform_int_distribution<std::int64_t> dist(0, total - len);
    const std::int64_t off = dist(rng);
    Waveform clip;
    clip.sample_rate = bank.sample_rate;
    clip.samples.assign(bank.samples.begin() + off, bank.samples.begin() + off + len);

    const double scale = snr_noise_scale(clean, clip, *spec.snr_db);
    Waveform mixed = mix_with_scale(clean, clip, scale);
    Waveform scaled_noise = clip;
    for (double& s : scaled_noise.samples) s *= scale;
    out.records.push_back({i, off, realized_snr_db(clean, scaled_noise)});
    out.waveforms.push_back(std::move(mixed));
  }
  return out;
}

}  // namespace tta
