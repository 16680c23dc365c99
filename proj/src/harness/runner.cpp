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

#include "tta/harness/runner.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "tta/errors.hpp"

namespace tta {
namespace {

constexpr const char* kProvenance = "ttaudio/0.1.0";

// Per-epoch means of a per-step trace laid out as `epochs` equal slices.
std::vector<double> per_epoch_means(const std::vector<double>& steps, int epochs) {
  std::vector<double> out;
  if (steps.empty() || epochs <= 0) return out;
  const std::size_t per = steps.size() / static_cast<std::size_t>(epochs);
  if (per == 0) return out;
  out.reserve(static_cast<std::size_t>(epochs));
  for (int e = 0; e < epochs; ++e) {
    double sum = 0.0;
    for (std::size_t i = 0; i < per; ++i) sum += steps[static_cast<std::size_t>(e) * per + i];
    out.push_back(sum / static_cast<double>(per));
  }
  return out;
}

template <typename T>
std::vector<T> dedupe_keep_order(const std::vector<T>& in) {
  std::vector<T> out;
  for (const auto& x : in)
    if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
  return out;
}

}  // namespace

std::string to_string(MethodId m) {
  switch (m) {
    case MethodId::Tent: return "tent";
    case MethodId::Norm: return "norm";
    case MethodId::Ttt: return "ttt";
    case MethodId::Conmix: return "conmix";
  }
  return "?";
}

MethodId method_id_from_string(const std::string& s) {
  if (s == "tent") return MethodId::Tent;
  if (s == "norm") return MethodId::Norm;
  if (s == "ttt") return MethodId::Ttt;
  if (s == "conmix") return MethodId::Conmix;
  throw UnknownVariant("unknown adaptation method: " + s);
}

std::string ExperimentCell::method_label() const {
  std::string label = to_string(method);
  if (method == MethodId::Conmix && !variant.empty()) label += ":" + variant;
  return label;
}

std::string ExperimentCell::canonical() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "method=" << method_label() << ";dataset=" << to_string(dataset)
     << ";noise=" << to_string(noise) << ";severity=" << severity << ";seed=" << seed
     << ";epochs=" << epochs << ";features={" << features.canonical() << "}";
  os << ";online={lr=" << online.lr << ",momentum=" << online.momentum
     << ",batch_size=" << online.batch_size << ",episodic=" << online.episodic_reset
     << ",shift=" << online.shift_fraction << "}";
  os << ";stda={l1=" << stda.lambda1 << ",l2=" << stda.lambda2 << ",l3=" << stda.lambda3
     << ",pl=" << to_string(stda.pl_variant) << ",nm=" << stda.use_nm
     << ",cons=" << stda.use_cons << ",rounds=" << stda.refinement_rounds
     << ",batch_size=" << stda.batch_size << ",lr=" << stda.lr << ",momentum=" << stda.momentum
     << ",weights=[";
  for (std::size_t i = 0; i < stda.class_weights.size(); ++i) {
    if (i) os << ",";
    os << stda.class_weights[i];
  }
  os << "],aug={" << stda.augment.weak_shift_frac << "," << stda.augment.band_frac << ","
     << stda.augment.min_bands << "," << stda.augment.max_bands << "}}";
  return os.str();
}

std::uint64_t ExperimentCell::hash() const { return fnv1a64(canonical()); }

double error_percent(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.empty() || predicted.size() != truth.size())
    throw LengthMismatch("prediction / truth size mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == truth[i]) ++correct;
  return 100.0 * (1.0 - static_cast<double>(correct) / static_cast<double>(predicted.size()));
}

StdaConfig stda_profile(DatasetId id) {
  StdaConfig cfg;
  switch (id) {
    case DatasetId::AM:
      // The spoken-digit target works best without the pseudo-label term.
      cfg.pl_variant = PlVariant::None;
      break;
    case DatasetId::SC:
    case DatasetId::SCR:
    case DatasetId::SCN:
    case DatasetId::TOY:
      cfg.pl_variant = PlVariant::Upd;
      break;
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// JSON round-trip
// ---------------------------------------------------------------------------

std::string to_json(const RunRecord& rec) {
  nlohmann::ordered_json j;
  j["method"] = rec.method;
  j["dataset"] = rec.dataset;
  j["noise"] = rec.noise;
  j["severity"] = rec.severity;
  j["master_seed"] = rec.master_seed;
  j["sub_seeds"] = rec.sub_seeds;
  j["epochs"] = rec.epochs;
  j["num_test"] = rec.num_test;
  j["unadapted_error"] = rec.unadapted_error;
  j["adapted_error"] = rec.adapted_error;
  j["epoch_errors"] = rec.epoch_errors;
  j["epoch_losses"] = rec.epoch_losses;
  j["step_losses"] = rec.step_losses;
  j["epoch_pl_losses"] = rec.epoch_pl_losses;
  j["wall_clock_s"] = rec.wall_clock_s;
  j["config_hash"] = rec.config_hash;
  j["provenance"] = rec.provenance;
  return j.dump();
}

RunRecord run_record_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  RunRecord rec;
  rec.method = j.at("method").get<std::string>();
  rec.dataset = j.at("dataset").get<std::string>();
  rec.noise = j.at("noise").get<std::string>();
  rec.severity = j.at("severity").get<double>();
  rec.master_seed = j.at("master_seed").get<std::uint64_t>();
  rec.sub_seeds = j.at("sub_seeds").get<std::map<std::string, std::uint64_t>>();
  rec.epochs = j.at("epochs").get<int>();
  rec.num_test = j.at("num_test").get<int>();
  rec.unadapted_error = j.at("unadapted_error").get<double>();
  rec.adapted_error = j.at("adapted_error").get<double>();
  rec.epoch_errors = j.at("epoch_errors").get<std::vector<double>>();
  rec.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();
  rec.step_losses = j.at("step_losses").get<std::vector<double>>();
  rec.epoch_pl_losses = j.at("epoch_pl_losses").get<std::vector<double>>();
  rec.wall_clock_s = j.at("wall_clock_s").get<double>();
  rec.config_hash = j.at("config_hash").get<std::uint64_t>();
  rec.provenance = j.at("provenance").get<std::string>();
  return rec;
}

void append_record(const std::string& path, const RunRecord& rec) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw MissingDataset("cannot open record file for append: " + path);
  out << to_json(rec) << '\n';
}

void write_records(const std::string& path, const std::vector<RunRecord>& recs) {
  std::ofstream out(path);
  if (!out) throw MissingDataset("cannot open record file for write: " + path);
  for (const auto& rec : recs) out << to_json(rec) << '\n';
}

std::vector<RunRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingDataset("record file not found: " + path);
  std::vector<RunRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(run_record_from_json(line));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cell execution
// ---------------------------------------------------------------------------

RunRecord run_cell(const ExperimentCell& cell, const CellContext& ctx, RunArtifacts* artifacts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (ctx.test.waves.empty() || ctx.test.waves.size() != ctx.test.labels.size())
    throw LengthMismatch("cell context needs a non-empty labeled test set");
  if (cell.epochs < 1) throw LengthMismatch("cell needs at least 1 adaptation epoch");

  RunRecord rec;
  rec.method = cell.method_label();
  rec.dataset = to_string(cell.dataset);
  rec.noise = to_string(cell.noise);
  rec.severity = cell.severity;
  rec.master_seed = cell.seed;
  rec.epochs = cell.epochs;
  rec.num_test = static_cast<int>(ctx.test.waves.size());
  rec.config_hash = cell.hash();
  rec.provenance = kProvenance;

  const std::uint64_t corruption_seed = derive_seed(cell.seed, "corruption");
  const std::uint64_t adapter_seed = derive_seed(cell.seed, "adapter");
  rec.sub_seeds = {{"corruption", corruption_seed}, {"adapter", adapter_seed}};

  CorruptionSpec cspec;
  cspec.noise_source = cell.noise;
  if (cell.noise == NoiseSource::Gaussian)
    cspec.lambda = cell.severity;
  else
    cspec.snr_db = cell.severity;
  cspec.seed = corruption_seed;
  CorruptedSet corrupted = corrupt_set(ctx.test.waves, cspec, ctx.noise_bank);

  std::unique_ptr<AdaptableModel> model = load_checkpoint(ctx.checkpoint_path);

  // Both evaluations see the same corrupted waveforms through the same
  // front-end.
  std::vector<SpectrogramImage> mels;
  mels.reserve(corrupted.waveforms.size());
  for (const auto& w : corrupted.waveforms) mels.push_back(mel_spectrogram(w, cell.features));

  rec.unadapted_error = error_percent(predict_labels(*model, mels), ctx.test.labels);

  if (cell.method == MethodId::Conmix) {
    StdaConfig scfg = cell.variant.empty() ? cell.stda : apply_ablation(cell.stda, cell.variant);
    scfg.epochs = cell.epochs;
    scfg.seed = adapter_seed;
    LabeledSpectrogramSet target;
    target.inputs = mels;
    target.labels = ctx.test.labels;
    const StdaTrace trace = stda_adapt(*model, target, scfg);
    rec.epoch_errors = trace.epoch_error;
    rec.step_losses = trace.step_total;
    rec.epoch_losses = per_epoch_means(trace.step_total, cell.epochs);
    rec.epoch_pl_losses = trace.epoch_pl_loss;
    rec.adapted_error = trace.epoch_error.back();
  } else {
    OnlineAdaptConfig ocfg = cell.online;
    ocfg.features = cell.features;
    switch (cell.method) {
      case MethodId::Tent: ocfg.mode = AdaptMode::Tent; break;
      case MethodId::Norm: ocfg.mode = AdaptMode::Norm; break;
      case MethodId::Ttt: ocfg.mode = AdaptMode::TTT; break;
      case MethodId::Conmix: break;  // handled above
    }
    OnlineAdaptState st(*model, ocfg);
    AdaptDataset ds;
    ds.waves = corrupted.waveforms;
    ds.labels = ctx.test.labels;
    rec.epoch_errors = multi_epoch_adapt(st, ds, cell.epochs);
    rec.step_losses = st.loss_trace;  // empty for the statistics-only method
    rec.epoch_losses = per_epoch_means(st.loss_trace, cell.epochs);
    rec.adapted_error = rec.epoch_errors.back();
  }

  rec.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (artifacts) {
    artifacts->model = std::move(model);
    artifacts->corrupted = std::move(corrupted);
  }
  return rec;
}

std::vector<ExperimentCell> expand_grid(const GridSpec& grid) {
  const auto methods = dedupe_keep_order(grid.methods);
  const auto datasets = dedupe_keep_order(grid.datasets);
  const auto noises = dedupe_keep_order(grid.noises);
  const auto snrs = dedupe_keep_order(grid.snrs);
  const auto lambdas = dedupe_keep_order(grid.lambdas);
  const auto seeds = dedupe_keep_order(grid.seeds);
  const auto variants = dedupe_keep_order(grid.conmix_variants);

  std::vector<ExperimentCell> cells;
  for (const MethodId method : methods) {
    std::vector<std::string> method_variants = {""};
    if (method == MethodId::Conmix && !variants.empty()) method_variants = variants;
    for (const std::string& variant : method_variants) {
      for (const DatasetId dataset : datasets) {
        for (const NoiseSource noise : noises) {
          const auto& severities = noise == NoiseSource::Gaussian ? lambdas : snrs;
          for (const double severity : severities) {
            for (const std::uint64_t seed : seeds) {
              ExperimentCell cell;
              cell.method = method;
              cell.variant = variant;
              cell.dataset = dataset;
              cell.noise = noise;
              cell.severity = severity;
              cell.seed = seed;
              cell.epochs = grid.epochs;
              cell.stda = stda_profile(dataset);
              cells.push_back(std::move(cell));
            }
          }
        }
      }
    }
  }
  return cells;
}

}  // namespace tta
