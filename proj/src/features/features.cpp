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

#include "tta/features/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "tta/errors.hpp"

namespace tta {

std::string FeatureConfig::canonical() const {
  std::ostringstream os;
  os << "n_fft=" << n_fft << ";hop=" << hop << ";mel=" << mel_bins << ";fmin=" << fmin
     << ";fmax=" << fmax << ";floor=" << log_floor << ";centered=" << centered;
  return os.str();
}

std::uint64_t FeatureConfig::hash() const { return fnv1a64(canonical()); }

int mel_frame_count(std::size_t len, const FeatureConfig& cfg) {
  if (cfg.centered) {
    return 1 + static_cast<int>(len / static_cast<std::size_t>(cfg.hop));
  }
  return 1 + static_cast<int>((len - static_cast<std::size_t>(cfg.n_fft)) /
                              static_cast<std::size_t>(cfg.hop));
}

namespace {

// FFTW planner calls are not thread-safe; execution through per-thread plans is.
std::mutex g_fftw_planner_mutex;

struct FftPlan {
  int n = 0;
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  explicit FftPlan(int n_fft) : n(n_fft) {
    std::lock_guard<std::mutex> lock(g_fftw_planner_mutex);
    in = fftw_alloc_real(static_cast<std::size_t>(n));
    out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  ~FftPlan() {
    std::lock_guard<std::mutex> lock(g_fftw_planner_mutex);
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
};

FftPlan& plan_for(int n_fft) {
  thread_local std::map<int, std::unique_ptr<FftPlan>> cache;
  auto it = cache.find(n_fft);
  if (it == cache.end()) {
    it = cache.emplace(n_fft, std::make_unique<FftPlan>(n_fft)).first;
  }
  return *it->second;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank over the power spectrum bins, peak 1.
DMat mel_filterbank(int mel_bins, int n_fft, int sample_rate, double fmin, double fmax) {
  const int n_bins = n_fft / 2 + 1;
  DMat fb(mel_bins, n_bins);
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> edges(static_cast<std::size_t>(mel_bins) + 2);
  for (int i = 0; i < mel_bins + 2; ++i) {
    edges[static_cast<std::size_t>(i)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (mel_bins + 1));
  }
  for (int m = 0; m < mel_bins; ++m) {
    const double left = edges[static_cast<std::size_t>(m)];
    const double center = edges[static_cast<std::size_t>(m) + 1];
    const double right = edges[static_cast<std::size_t>(m) + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double hz = static_cast<double>(k) * sample_rate / n_fft;
      double w = 0.0;
      if (hz > left && hz < right) {
        w = hz <= center ? (hz - left) / (center - left) : (right - hz) / (right - center);
      }
      fb.at(m, k) = w;
    }
  }
  return fb;
}

}  // namespace

SpectrogramImage mel_spectrogram(const Waveform& x, const FeatureConfig& cfg) {
  if (x.samples.size() < static_cast<std::size_t>(cfg.n_fft)) {
    throw TooShort("waveform of " + std::to_string(x.samples.size()) +
                   " samples vs n_fft=" + std::to_string(cfg.n_fft));
  }
  const double fmax = cfg.fmax > 0.0 ? cfg.fmax : x.sample_rate / 2.0;
  const int n_bins = cfg.n_fft / 2 + 1;
  const int frames = mel_frame_count(x.samples.size(), cfg);
  const int pad = cfg.centered ? cfg.n_fft / 2 : 0;

  // Periodic Hann window.
  std::vector<double> window(static_cast<std::size_t>(cfg.n_fft));
  for (int i = 0; i < cfg.n_fft; ++i) {
    window[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * M_PI * i / cfg.n_fft);
  }

  const DMat fb = mel_filterbank(cfg.mel_bins, cfg.n_fft, x.sample_rate, cfg.fmin, fmax);
  FftPlan& fft = plan_for(cfg.n_fft);

  DMat power(n_bins, frames);
  const auto n_samples = static_cast<std::int64_t>(x.samples.size());
  for (int f = 0; f < frames; ++f) {
    const std::int64_t start = static_cast<std::int64_t>(f) * cfg.hop - pad;
    for (int i = 0; i < cfg.n_fft; ++i) {
      const std::int64_t idx = start + i;
      const double s =
          (idx >= 0 && idx < n_samples) ? x.samples[static_cast<std::size_t>(idx)] : 0.0;
      fft.in[i] = s * window[static_cast<std::size_t>(i)];
    }
    fftw_execute(fft.plan);
    for (int k = 0; k < n_bins; ++k) {
      const double re = fft.out[k][0];
      const double im = fft.out[k][1];
      power.at(k, f) = re * re + im * im;
    }
  }

  SpectrogramImage out;
  out.values = DMat(cfg.mel_bins, frames);
  for (int m = 0; m < cfg.mel_bins; ++m) {
    for (int f = 0; f < frames; ++f) {
      double acc = 0.0;
      for (int k = 0; k < n_bins; ++k) acc += fb.at(m, k) * power.at(k, f);
      out.values.at(m, f) = std::log(acc + cfg.log_floor);
    }
  }
  return out;
}

Waveform time_shift(const Waveform& x, ShiftClass cls) {
  if (cls.kind == Shift::None) return x;
  const auto n = static_cast<std::int64_t>(x.samples.size());
  if (n == 0) return x;
  std::int64_t k = static_cast<std::int64_t>(std::llround(cls.fraction * static_cast<double>(n))) % n;
  Waveform out;
  out.sample_rate = x.sample_rate;
  out.samples.resize(x.samples.size());
  for (std::int64_t i = 0; i < n; ++i) {
    // Left: out[i] = x[(i+k) mod n]; Right is the inverse rotation.
    const std::int64_t src =
        cls.kind == Shift::Left ? (i + k) % n : (i - k % n + n) % n;
    out.samples[static_cast<std::size_t>(i)] = x.samples[static_cast<std::size_t>(src)];
  }
  return out;
}

namespace {

SpectrogramImage roll_frames(const SpectrogramImage& s, int shift) {
  const int frames = s.frames();
  SpectrogramImage out;
  out.values = DMat(s.mel_bins(), frames);
  for (int m = 0; m < s.mel_bins(); ++m) {
    for (int f = 0; f < frames; ++f) {
      const int src = ((f + shift) % frames + frames) % frames;
      out.values.at(m, f) = s.values.at(m, src);
    }
  }
  return out;
}

}  // namespace

SpectrogramImage weak_augment(const SpectrogramImage& s, const AugmentConfig& cfg, Rng& rng) {
  const int max_shift = static_cast<int>(std::floor(cfg.weak_shift_frac * s.frames()));
  int shift = 0;
  if (max_shift > 0) {
    std::uniform_int_distribution<int> dist(-max_shift, max_shift);
    shift = dist(rng);
  }
  if (shift == 0) return s;
  return roll_frames(s, shift);
}

SpectrogramImage strong_augment(const SpectrogramImage& s, const AugmentConfig& cfg, Rng& rng) {
  SpectrogramImage out = weak_augment(s, cfg, rng);
  const int mel = out.mel_bins();
  const int frames = out.frames();
  double mean = 0.0;
  for (double v : out.values.v) mean += v;
  mean /= static_cast<double>(out.values.size());

  std::uniform_int_distribution<int> n_bands(cfg.min_bands, cfg.max_bands);
  const auto mask_axis = [&](int extent, auto&& apply) {
    const int max_width = std::max(1, static_cast<int>(std::ceil(cfg.band_frac * extent)));
    const int bands = n_bands(rng);
    for (int b = 0; b < bands; ++b) {
      std::uniform_int_distribution<int> wdist(1, max_width);
      const int width = wdist(rng);
      std::uniform_int_distribution<int> sdist(0, extent - width);
      const int start = sdist(rng);
      apply(start, width);
    }
  };

  mask_axis(frames, [&](int start, int width) {
    for (int m = 0; m < mel; ++m) {
      for (int f = start; f < start + width; ++f) out.values.at(m, f) = mean;
    }
  });
  mask_axis(mel, [&](int start, int width) {
    for (int m = start; m < start + width; ++m) {
      for (int f = 0; f < frames; ++f) out.values.at(m, f) = mean;
    }
  });
  return out;
}

Tensor stack_batch(const std::vector<const SpectrogramImage*>& items) {
  const int b = static_cast<int>(items.size());
  const int mel = items.empty() ? 0 : items.front()->mel_bins();
  const int frames = items.empty() ? 0 : items.front()->frames();
  Tensor out({b, 1, mel, frames});
  float* dst = out.data();
  for (const SpectrogramImage* s : items) {
    for (double v : s->values.v) *dst++ = static_cast<float>(v);
  }
  return out;
}

Tensor stack_batch(const std::vector<SpectrogramImage>& items) {
  std::vector<const SpectrogramImage*> ptrs;
  ptrs.reserve(items.size());
  for (const auto& s : items) ptrs.push_back(&s);
  return stack_batch(ptrs);
}

PretextSet make_pretext_set(const std::vector<Waveform>& waves, const FeatureConfig& cfg,
                            double fraction) {
  PretextSet out;
  out.inputs.reserve(waves.size() * 3);
  out.labels.reserve(waves.size() * 3);
  for (const Waveform& w : waves) {
    for (Shift kind : {Shift::None, Shift::Left, Shift::Right}) {
      out.inputs.push_back(mel_spectrogram(time_shift(w, {kind, fraction}), cfg));
      out.labels.push_back(static_cast<int>(kind));
    }
  }
  return out;
}

void save_spectrogram(const std::string& path, const SpectrogramImage& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw WavFormatError("cannot write " + path);
  os.write("TTASPEC1", 8);
  const std::int32_t r = s.values.rows, c = s.values.cols;
  os.write(reinterpret_cast<const char*>(&r), 4);
  os.write(reinterpret_cast<const char*>(&c), 4);
  os.write(reinterpret_cast<const char*>(s.values.v.data()),
           static_cast<std::streamsize>(s.values.v.size() * sizeof(double)));
}

SpectrogramImage load_spectrogram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavFormatError("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "TTASPEC1", 8) != 0) throw WavFormatError("bad magic in " + path);
  std::int32_t r = 0, c = 0;
  in.read(reinterpret_cast<char*>(&r), 4);
  in.read(reinterpret_cast<char*>(&c), 4);
  SpectrogramImage s;
  s.values = DMat(r, c);
  in.read(reinterpret_cast<char*>(s.values.v.data()),
          static_cast<std::streamsize>(s.values.v.size() * sizeof(double)));
  if (!in) throw WavFormatError("truncated spectrogram file " + path);
  return s;
}

void write_cache_index(const std::string& index_path,
                       const std::vector<CacheIndexEntry>& entries) {
  std::ofstream os(index_path);
  for (const auto& e : entries) {
    os << e.path << "," << e.rows << "," << e.cols << "," << e.dtype << "," << e.config_hash
       << "\n";
  }
}

std::vector<CacheIndexEntry> read_cache_index(const std::string& index_path) {
  std::ifstream in(index_path);
  std::vector<CacheIndexEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CacheIndexEntry e;
    std::istringstream ls(line);
    std::string field;
    std::getline(ls, e.path, ',');
    std::getline(ls, field, ',');
    e.rows = std::stoi(field);
    std::getline(ls, field, ',');
    e.cols = std::stoi(field);
    std::getline(ls, e.dtype, ',');
    std::getline(ls, field, ',');
    e.config_hash = std::stoull(field);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace tta
