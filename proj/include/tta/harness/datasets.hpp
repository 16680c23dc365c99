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

#ifndef TTA_HARNESS_DATASETS_HPP
#define TTA_HARNESS_DATASETS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tta/corruption/corruption.hpp"
#include "tta/features/features.hpp"
#include "tta/models/models.hpp"
#include "tta/rng.hpp"

namespace tta {

// The five supported corpora:
//   AM  — spoken-digit corpus laid out as <root>/<speaker>/<digit>_<speaker>_<rep>.wav
//         with a JSON speaker-metadata file; trained on German-accent speakers.
//   SC  — keyword corpus laid out as <root>/<word>/<clip>.wav with the official
//         validation_list.txt / testing_list.txt split files.
//   SCR — SC vocabulary, but the official training pool is re-split 63/7/30
//         (train/val/test) so the test side is large enough for adaptation.
//   SCN — SC restricted to the ten digit words, relabeled 0-9.
//   TOY — synthetic tone corpus generated on demand (see ToyConfig below).
enum class DatasetId { AM, SC, SCR, SCN, TOY };

std::string to_string(DatasetId id);
DatasetId dataset_id_from_string(const std::string& s);

// Everything needed to locate, split, and featurize one corpus. `features`
// rides along so every consumer of the dataset agrees on the front-end.
struct DatasetSpec {
  DatasetId id = DatasetId::TOY;
  std::string root;  // corpus directory (TOY: generated here on first use)
  int num_classes = 10;
  int sample_rate = 16000;
  double clip_s = 1.0;  // clips are padded / center-cropped to this length
  FeatureConfig features;

  // TOY generation parameters; ignored for the real corpora.
  int toy_per_class = 50;
  std::uint64_t toy_seed = 0;

  std::size_t clip_samples() const;
};

// Canonical per-corpus class counts, sample rates, and front-end settings.
DatasetSpec dataset_preset(DatasetId id);

// One split as (relative path, label id) pairs. Paths are relative to
// DatasetSpec::root so manifests stay portable.
struct SplitManifest {
  std::vector<std::string> paths;
  std::vector<int> labels;

  std::size_t size() const { return paths.size(); }
};

struct SplitSet {
  SplitManifest train;
  SplitManifest val;
  SplitManifest test;
  std::vector<std::string> vocab;  // class id -> class name
  std::string note;                // documented deviations (e.g. metadata fallback)
};

// Builds the train/val/test manifests for `spec`. Throws MissingDataset when
// the corpus directory or its required files are absent, and
// LabelVocabularyMismatch when the on-disk vocabulary disagrees with
// spec.num_classes (or lacks the digit words for SCN). `rng` drives only the
// randomized splits (SCR re-split, AM validation carve-out); SC/SCN are fully
// determined by the official list files. Splits are pairwise disjoint.
SplitSet build_splits(const DatasetSpec& spec, Rng& rng);

// Reads every clip of a manifest: WAV decode, resample to spec.sample_rate
// when the file rate differs, then pad / center-crop to spec.clip_samples().
LabeledWaveSet load_manifest(const DatasetSpec& spec, const SplitManifest& m);

// ---------------------------------------------------------------------------
// TOY corpus
// ---------------------------------------------------------------------------

// Synthetic c-way tone corpus: class k is a two-harmonic tone at a fixed
// per-class fundamental under a Gaussian time envelope, plus a small white
// noise floor. Classes are spectrally disjoint, so a source model pretrained
// on the train split separates them almost perfectly.
struct ToyConfig {
  int num_classes = 10;
  int per_class = 50;  // clips per class in train and in test
  int sample_rate = 8000;
  double duration_s = 1.0;
  std::uint64_t seed = 0;
};

struct ToyCorpus {
  LabeledWaveSet train;
  LabeledWaveSet val;
  LabeledWaveSet test;
  std::vector<std::string> vocab;
};

// In-memory generation (fully deterministic in cfg.seed).
ToyCorpus make_toy_corpus(const ToyConfig& cfg);

// On-disk generation: writes WAVs, split manifests, and the vocabulary under
// `dir`, and returns the DatasetSpec that build_splits/load_manifest read.
DatasetSpec make_toy_dataset(const ToyConfig& cfg, const std::string& dir);

// Front-end used by the TOY corpus (smaller FFT/mel resolution than the
// speech corpora, matched to its 8 kHz rate).
FeatureConfig toy_feature_config();

// Synthetic stand-ins for the three recorded background noises, keyed by
// source: DD — periodic broadband clatter bursts; EB — harmonic whir whose
// pitch glides slowly across the mid band, with slow amplitude modulation;
// RT — broadband hiss with a slow level wobble. Gaussian needs no bank
// entry. Each track is `duration_s` long and deterministic in (seed, source).
std::map<NoiseSource, Waveform> make_toy_noise_bank(int sample_rate, double duration_s,
                                                    std::uint64_t seed);

// Noise bank from a keyword-corpus checkout: reads the three background
// recordings from <sc_root>/_background_noise_/. Throws MissingDataset when
// a recording is absent.
std::map<NoiseSource, Waveform> load_noise_bank(const std::string& sc_root);

}  // namespace tta

#endif  // TTA_HARNESS_DATASETS_HPP
