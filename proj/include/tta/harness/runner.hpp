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

#ifndef TTA_HARNESS_RUNNER_HPP
#define TTA_HARNESS_RUNNER_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tta/adapt/conmix.hpp"
#include "tta/adapt/online.hpp"
#include "tta/harness/datasets.hpp"

namespace tta {

// The adaptation methods the benchmark compares. The first three adapt
// online (batch by batch); the last runs the full source-free epoch loop.
enum class MethodId { Tent, Norm, Ttt, Conmix };

std::string to_string(MethodId m);
MethodId method_id_from_string(const std::string& s);

// One cell of the benchmark grid. A cell plus a checkpoint fully determines
// a run: corruption, adaptation, and evaluation all derive their randomness
// from `seed` through fixed keys, so re-running a cell reproduces its record
// exactly (modulo wall-clock time).
struct ExperimentCell {
  MethodId method = MethodId::Tent;
  DatasetId dataset = DatasetId::TOY;
  NoiseSource noise = NoiseSource::EB;
  double severity = 10.0;  // SNR in dB for background noise; lambda for Gaussian
  std::uint64_t seed = 0;  // master seed, fanned out per pipeline stage
  int epochs = 1;
  std::string variant;  // composite-method ablation switch; empty = full method

  FeatureConfig features;    // front-end shared by evaluation and adaptation
  OnlineAdaptConfig online;  // Tent / Norm / TTT settings (mode is overridden)
  StdaConfig stda;           // composite-method settings (seed/epochs overridden)

  // "tent", "norm", "ttt", "conmix", or "conmix:<variant>".
  std::string method_label() const;
  std::string canonical() const;
  std::uint64_t hash() const;
};

// Everything a run needs besides the cell: the clean labeled test split, the
// background-noise bank, and the pretrained source checkpoint.
struct CellContext {
  LabeledWaveSet test;
  std::map<NoiseSource, Waveform> noise_bank;
  std::string checkpoint_path;
};

// One benchmark result. Errors are top-1 percentages in [0, 100], stored at
// full precision (reports round to 2 decimals); unadapted and adapted errors
// are computed on the same corrupted waveforms.
struct RunRecord {
  std::string method;
  std::string dataset;
  std::string noise;
  double severity = 0.0;
  std::uint64_t master_seed = 0;
  std::map<std::string, std::uint64_t> sub_seeds;  // stage name -> derived seed
  int epochs = 1;
  int num_test = 0;

  double unadapted_error = 0.0;
  double adapted_error = 0.0;
  std::vector<double> epoch_errors;     // error after each adaptation epoch
  std::vector<double> epoch_losses;     // mean adaptation loss per epoch
  std::vector<double> step_losses;      // full per-step adaptation loss trace
  std::vector<double> epoch_pl_losses;  // composite method only: post-epoch
                                        // pseudo-label loss over the whole set

  double wall_clock_s = 0.0;
  std::uint64_t config_hash = 0;
  std::string provenance;
};

// Lossless JSON round-trip (one line per record in JSONL files).
std::string to_json(const RunRecord& rec);
RunRecord run_record_from_json(const std::string& json_text);
void append_record(const std::string& path, const RunRecord& rec);
void write_records(const std::string& path, const std::vector<RunRecord>& recs);
std::vector<RunRecord> read_records(const std::string& path);

// Optional outputs for callers that need to inspect a run: the adapted model
// and the corrupted evaluation set.
struct RunArtifacts {
  std::unique_ptr<AdaptableModel> model;
  CorruptedSet corrupted;
};

// Executes one cell: corrupt the test split (seeded by the corruption
// sub-seed), load the checkpoint, measure the unadapted error, adapt with the
// cell's method (seeded by the adapter sub-seed), measure per-epoch error.
// Throws CheckpointMissing / LengthMismatch on malformed inputs.
RunRecord run_cell(const ExperimentCell& cell, const CellContext& ctx,
                   RunArtifacts* artifacts = nullptr);

// Top-1 error in percent. Throws LengthMismatch on size mismatch or empty
// input.
double error_percent(const std::vector<int>& predicted, const std::vector<int>& truth);

// Composite-method settings that the benchmark uses per corpus.
StdaConfig stda_profile(DatasetId id);

// Cartesian benchmark grid. Background noises take their severities from
// `snrs`; the Gaussian source takes them from `lambdas`. `conmix_variants`
// expands the composite method into its ablations (empty = full method only).
struct GridSpec {
  std::vector<MethodId> methods;
  std::vector<DatasetId> datasets;
  std::vector<NoiseSource> noises;
  std::vector<double> snrs;
  std::vector<double> lambdas;
  std::vector<std::uint64_t> seeds = {0};
  int epochs = 1;
  std::vector<std::string> conmix_variants;
};

// Expands the grid into unique cells: methods x datasets x (noise, severity)
// pairs x seeds, with the composite method additionally expanded by variant.
std::vector<ExperimentCell> expand_grid(const GridSpec& grid);

}  // namespace tta

#endif  // TTA_HARNESS_RUNNER_HPP
