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

// Command-line front end: pretrain source models, corrupt test splits, run
// adaptation cells (single or whole grids), sweep composite-method ablations,
// and render reports from the collected run records.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tta/errors.hpp"
#include "tta/harness/datasets.hpp"
#include "tta/harness/report.hpp"
#include "tta/harness/runner.hpp"

namespace fs = std::filesystem;
using namespace tta;

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared option bundles
// ---------------------------------------------------------------------------

struct DatasetOpts {
  std::string dataset = "toy";
  std::string root;
  int toy_classes = 0;     // 0 keeps the preset
  int toy_per_class = 0;   // 0 keeps the preset
  std::uint64_t toy_seed = 0;

  void attach(CLI::App* cmd, bool root_required = true) {
    cmd->add_option("--dataset", dataset, "Dataset id: am, sc, scr, scn, toy")
        ->capture_default_str();
    auto* r = cmd->add_option("--root", root, "Corpus directory (created for toy)");
    if (root_required) r->required();
    cmd->add_option("--classes", toy_classes, "Toy only: number of tone classes");
    cmd->add_option("--per-class", toy_per_class, "Toy only: clips per class");
    cmd->add_option("--toy-seed", toy_seed, "Toy only: corpus generation seed")
        ->capture_default_str();
  }

  DatasetSpec spec() const {
    DatasetSpec s = dataset_preset(dataset_id_from_string(dataset));
    s.root = root;
    if (s.id == DatasetId::TOY) {
      if (toy_classes > 0) s.num_classes = toy_classes;
      if (toy_per_class > 0) s.toy_per_class = toy_per_class;
      s.toy_seed = toy_seed;
    }
    return s;
  }
};

struct NoiseOpts {
  std::string noise = "eb";
  double snr_db = 10.0;
  double lambda = 0.5;
  std::string bank_dir;
  CLI::Option* snr_opt = nullptr;
  CLI::Option* lambda_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--noise", noise, "Noise source: dd, eb, rt, gauss")->capture_default_str();
    snr_opt = cmd->add_option("--snr", snr_db, "SNR in dB (background noise)");
    lambda_opt = cmd->add_option("--lambda", lambda, "Shift weight in [0,1] (gauss)");
    cmd->add_option("--noise-bank", bank_dir,
                    "Directory with the background recordings (default: corpus root; "
                    "toy synthesizes its own)");
  }

  NoiseSource source() const { return noise_source_from_string(noise); }

  double severity() const {
    if (source() == NoiseSource::Gaussian) {
      if (!*lambda_opt) throw LambdaOutOfRange("gauss corruption needs --lambda");
      return lambda;
    }
    if (!*snr_opt) throw LambdaOutOfRange("background noise needs --snr");
    return snr_db;
  }
};

std::map<NoiseSource, Waveform> bank_for(const DatasetSpec& spec, const std::string& bank_dir,
                                         NoiseSource source) {
  if (source == NoiseSource::Gaussian) return {};  // needs no recordings
  if (!bank_dir.empty()) return load_noise_bank(bank_dir);
  if (spec.id == DatasetId::TOY)
    return make_toy_noise_bank(spec.sample_rate, 30.0, spec.toy_seed);
  return load_noise_bank(spec.root);
}

LabeledWaveSet load_split(const DatasetSpec& spec, std::uint64_t seed,
                          const std::string& which = "test", std::string* note = nullptr) {
  Rng rng(derive_seed(seed, "split"));
  const SplitSet splits = build_splits(spec, rng);
  if (note) *note = splits.note;
  const SplitManifest* m = &splits.test;
  if (which == "train") m = &splits.train;
  if (which == "val") m = &splits.val;
  return load_manifest(spec, *m);
}

void print_record(const RunRecord& rec) {
  const double delta = rec.adapted_error - rec.unadapted_error;
  const char* mark = delta < 0 ? "↓" : (delta > 0 ? "↑" : "=");
  std::cout << rec.method << "  " << rec.dataset << "/" << rec.noise << "@" << rec.severity
            << "  seed=" << rec.master_seed << "  unadapted " << fmt2(rec.unadapted_error)
            << "%  adapted " << fmt2(rec.adapted_error) << "%  (" << fmt2(delta) << " " << mark
            << ", " << fmt2(rec.wall_clock_s) << " s)\n";
}

// ---------------------------------------------------------------------------
// toygen
// ---------------------------------------------------------------------------

void setup_toygen(CLI::App& app) {
  auto* cmd = app.add_subcommand("toygen", "Generate the synthetic tone corpus");
  auto opts = std::make_shared<ToyConfig>();
  auto out = std::make_shared<std::string>();
  auto noise_out = std::make_shared<std::string>();
  cmd->add_option("--out", *out, "Output directory")->required();
  cmd->add_option("--classes", opts->num_classes, "Number of tone classes")
      ->capture_default_str();
  cmd->add_option("--per-class", opts->per_class, "Clips per class (train and test)")
      ->capture_default_str();
  cmd->add_option("--sample-rate", opts->sample_rate, "Sample rate in Hz")
      ->capture_default_str();
  cmd->add_option("--duration", opts->duration_s, "Clip length in seconds")
      ->capture_default_str();
  cmd->add_option("--seed", opts->seed, "Generation seed")->capture_default_str();
  cmd->add_option("--noise-out", *noise_out,
                  "Also write the synthetic noise bank (dd/eb/rt WAVs) here");

  cmd->callback([opts, out, noise_out]() {
    const DatasetSpec spec = make_toy_dataset(*opts, *out);
    Rng rng(0);
    const SplitSet splits = build_splits(spec, rng);
    std::cout << "wrote toy corpus to " << *out << ": " << opts->num_classes << " classes, "
              << splits.train.size() << " train / " << splits.val.size() << " val / "
              << splits.test.size() << " test clips\n";
    if (!noise_out->empty()) {
      fs::create_directories(*noise_out);
      const auto bank = make_toy_noise_bank(opts->sample_rate, 30.0, opts->seed);
      for (const auto& [src, wave] : bank) {
        const fs::path p = fs::path(*noise_out) / (to_string(src) + ".wav");
        write_wav(p.string(), wave, WavEncoding::Float32);
        std::cout << "wrote " << p.string() << " (" << wave.duration_s() << " s)\n";
      }
    }
  });
}

// ---------------------------------------------------------------------------
// pretrain
// ---------------------------------------------------------------------------

ModelFamily family_from_string(const std::string& s) {
  if (s == "bnresnet") return ModelFamily::BNResNet;
  if (s == "dualhead") return ModelFamily::DualHeadResNet;
  if (s == "gntransformer") return ModelFamily::GNTransformer;
  throw UnknownVariant("unknown model family: " + s);
}

void setup_pretrain(CLI::App& app) {
  auto* cmd = app.add_subcommand("pretrain", "Train a source model on a clean training split");
  auto ds = std::make_shared<DatasetOpts>();
  ds->attach(cmd);
  struct Opts {
    std::string out;
    std::string family = "bnresnet";
    int width = 8, depth = 4, embed_dim = 32, heads = 4;
    int epochs = 10, batch_size = 32;
    double lr = 0.05, momentum = 0.9, shift_fraction = 0.2;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--out", o->out, "Checkpoint output path")->required();
  cmd->add_option("--family", o->family, "Model family: bnresnet, dualhead, gntransformer")
      ->capture_default_str();
  cmd->add_option("--width", o->width, "Base channel count")->capture_default_str();
  cmd->add_option("--depth", o->depth, "Residual / attention blocks")->capture_default_str();
  cmd->add_option("--embed-dim", o->embed_dim, "Transformer token width")->capture_default_str();
  cmd->add_option("--heads", o->heads, "Attention heads")->capture_default_str();
  cmd->add_option("--epochs", o->epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch-size", o->batch_size, "Training batch size")->capture_default_str();
  cmd->add_option("--lr", o->lr, "SGD learning rate")->capture_default_str();
  cmd->add_option("--momentum", o->momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--shift-fraction", o->shift_fraction,
                  "Dual-head only: pretext time-shift magnitude")
      ->capture_default_str();
  cmd->add_option("--seed", o->seed, "Master seed (split / init / training sub-seeds)")
      ->capture_default_str();

  cmd->callback([ds, o]() {
    const DatasetSpec spec = ds->spec();
    Rng split_rng(derive_seed(o->seed, "split"));
    const SplitSet splits = build_splits(spec, split_rng);
    if (!splits.note.empty()) std::cout << "note: " << splits.note << "\n";
    std::cout << "splits: " << splits.train.size() << " train / " << splits.val.size()
              << " val / " << splits.test.size() << " test\n";
    const LabeledWaveSet train = load_manifest(spec, splits.train);

    ModelConfig mc;
    mc.family = family_from_string(o->family);
    mc.num_classes = spec.num_classes;
    mc.mel_bins = spec.features.mel_bins;
    mc.frames = mel_frame_count(spec.clip_samples(), spec.features);
    mc.width = o->width;
    mc.depth = o->depth;
    mc.embed_dim = o->embed_dim;
    mc.heads = o->heads;
    mc.init_seed = derive_seed(o->seed, "model_init");
    auto model = make_model(mc);

    TrainConfig tc;
    tc.epochs = o->epochs;
    tc.batch_size = o->batch_size;
    tc.lr = o->lr;
    tc.momentum = o->momentum;
    tc.seed = derive_seed(o->seed, "pretrain");

    TrainTrace trace;
    if (mc.family == ModelFamily::DualHeadResNet) {
      trace = pretrain_ttt(*model, train, spec.features, o->shift_fraction, tc);
    } else {
      LabeledSpectrogramSet mel_train;
      mel_train.labels = train.labels;
      mel_train.inputs.reserve(train.waves.size());
      for (const auto& w : train.waves)
        mel_train.inputs.push_back(mel_spectrogram(w, spec.features));
      trace = pretrain_classifier(*model, mel_train, tc);
    }
    for (std::size_t e = 0; e < trace.epoch_loss.size(); ++e) {
      std::cout << "epoch " << e + 1 << "/" << trace.epoch_loss.size() << "  loss "
                << fmt2(trace.epoch_loss[e]) << "  train acc "
                << fmt2(100.0 * trace.epoch_accuracy[e]) << "%\n";
    }

    if (splits.val.size() > 0) {
      const LabeledWaveSet val = load_manifest(spec, splits.val);
      std::vector<SpectrogramImage> mels;
      mels.reserve(val.waves.size());
      for (const auto& w : val.waves) mels.push_back(mel_spectrogram(w, spec.features));
      const double err = error_percent(predict_labels(*model, mels), val.labels);
      std::cout << "clean validation error: " << fmt2(err) << "%\n";
    }

    save_checkpoint(o->out, *model);
    std::cout << "saved checkpoint to " << o->out << "\n";
  });
}

// ---------------------------------------------------------------------------
// corrupt
// ---------------------------------------------------------------------------

void setup_corrupt(CLI::App& app) {
  auto* cmd = app.add_subcommand("corrupt", "Corrupt a split and write the noisy WAVs");
  auto ds = std::make_shared<DatasetOpts>();
  auto nz = std::make_shared<NoiseOpts>();
  ds->attach(cmd);
  nz->attach(cmd);
  struct Opts {
    std::string out;
    std::string split = "test";
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--out", o->out, "Output directory")->required();
  cmd->add_option("--split", o->split, "Split to corrupt: train, val, test")
      ->capture_default_str();
  cmd->add_option("--seed", o->seed, "Master seed")->capture_default_str();

  cmd->callback([ds, nz, o]() {
    const DatasetSpec spec = ds->spec();
    const NoiseSource src = nz->source();
    const double severity = nz->severity();
    const LabeledWaveSet set = load_split(spec, o->seed, o->split);

    CorruptionSpec cspec;
    cspec.noise_source = src;
    if (src == NoiseSource::Gaussian)
      cspec.lambda = severity;
    else
      cspec.snr_db = severity;
    cspec.seed = derive_seed(o->seed, "corruption");
    const CorruptedSet corrupted = corrupt_set(set.waves, cspec, bank_for(spec, nz->bank_dir, src));

    fs::create_directories(o->out);
    std::ofstream manifest(fs::path(o->out) / "manifest.tsv");
    std::ofstream csv(fs::path(o->out) / "records.csv");
    csv << "sample_index,noise_offset,realized_snr_db\n";
    for (std::size_t i = 0; i < corrupted.waveforms.size(); ++i) {
      char name[48];
      std::snprintf(name, sizeof(name), "corrupted_%05zu.wav", i);
      write_wav((fs::path(o->out) / name).string(), corrupted.waveforms[i],
                WavEncoding::Float32);
      manifest << name << '\t' << set.labels[i] << '\n';
      const auto& r = corrupted.records[i];
      csv << r.sample_index << "," << r.noise_offset << "," << r.realized_snr_db << "\n";
    }
    std::cout << "wrote " << corrupted.waveforms.size() << " corrupted clips to " << o->out
              << " (" << to_string(src) << "@" << severity << ")\n";
  });
}

// ---------------------------------------------------------------------------
// adapt (single cell or grid file)
// ---------------------------------------------------------------------------

struct CorpusEntry {
  std::string root;
  std::string checkpoint;
  std::string ttt_checkpoint;  // defaults to `checkpoint`
  std::string noise_bank;
  int classes = 0;
  int per_class = 0;
  std::uint64_t toy_seed = 0;
};

DatasetSpec spec_from_entry(DatasetId id, const CorpusEntry& e) {
  DatasetSpec s = dataset_preset(id);
  s.root = e.root;
  if (id == DatasetId::TOY) {
    if (e.classes > 0) s.num_classes = e.classes;
    if (e.per_class > 0) s.toy_per_class = e.per_class;
    s.toy_seed = e.toy_seed;
  }
  return s;
}

void run_grid_file(const std::string& path, const std::string& records_path) {
  std::ifstream in(path);
  if (!in) throw MissingDataset("grid file not found: " + path);
  nlohmann::json j;
  in >> j;

  GridSpec grid;
  for (const auto& m : j.at("methods")) grid.methods.push_back(method_id_from_string(m));
  for (const auto& d : j.at("datasets")) grid.datasets.push_back(dataset_id_from_string(d));
  for (const auto& n : j.at("noises")) grid.noises.push_back(noise_source_from_string(n));
  grid.snrs = j.value("snrs", std::vector<double>{});
  grid.lambdas = j.value("lambdas", std::vector<double>{});
  grid.seeds = j.value("seeds", std::vector<std::uint64_t>{0});
  grid.epochs = j.value("epochs", 1);
  grid.conmix_variants = j.value("conmix_variants", std::vector<std::string>{});

  std::map<DatasetId, CorpusEntry> corpora;
  for (const auto& [name, entry] : j.at("corpora").items()) {
    CorpusEntry e;
    e.root = entry.at("root").get<std::string>();
    e.checkpoint = entry.at("checkpoint").get<std::string>();
    e.ttt_checkpoint = entry.value("ttt_checkpoint", e.checkpoint);
    e.noise_bank = entry.value("noise_bank", std::string());
    e.classes = entry.value("classes", 0);
    e.per_class = entry.value("per_class", 0);
    e.toy_seed = entry.value("toy_seed", std::uint64_t{0});
    corpora[dataset_id_from_string(name)] = e;
  }

  const auto cells = expand_grid(grid);
  std::cout << "grid: " << cells.size() << " cells\n";

  struct Loaded {
    DatasetSpec spec;
    LabeledWaveSet test;
    std::map<NoiseSource, Waveform> bank;
  };
  std::map<DatasetId, Loaded> cache;

  std::size_t done = 0;
  for (ExperimentCell cell : cells) {
    const auto cit = corpora.find(cell.dataset);
    if (cit == corpora.end())
      throw MissingDataset("grid file lists no corpus entry for " + to_string(cell.dataset));
    auto lit = cache.find(cell.dataset);
    if (lit == cache.end()) {
      Loaded l;
      l.spec = spec_from_entry(cell.dataset, cit->second);
      l.test = load_split(l.spec, 0, "test");
      const bool needs_bank =
          std::any_of(grid.noises.begin(), grid.noises.end(),
                      [](NoiseSource n) { return n != NoiseSource::Gaussian; });
      if (needs_bank) l.bank = bank_for(l.spec, cit->second.noise_bank, NoiseSource::EB);
      lit = cache.emplace(cell.dataset, std::move(l)).first;
    }
    cell.features = lit->second.spec.features;
    cell.stda = stda_profile(cell.dataset);

    CellContext ctx;
    ctx.test = lit->second.test;
    ctx.noise_bank = lit->second.bank;
    ctx.checkpoint_path =
        cell.method == MethodId::Ttt ? cit->second.ttt_checkpoint : cit->second.checkpoint;

    const RunRecord rec = run_cell(cell, ctx);
    append_record(records_path, rec);
    ++done;
    std::cout << "[" << done << "/" << cells.size() << "] ";
    print_record(rec);
  }
  std::cout << "appended " << done << " records to " << records_path << "\n";
}

void setup_adapt(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "adapt", "Run one adaptation cell (or a whole grid file) and record the results");
  auto ds = std::make_shared<DatasetOpts>();
  auto nz = std::make_shared<NoiseOpts>();
  ds->attach(cmd, /*root_required=*/false);
  nz->attach(cmd);
  struct Opts {
    std::string grid_file;
    std::string checkpoint;
    std::string method = "tent";
    std::string variant;
    std::string records = "records.jsonl";
    int epochs = 1;
    std::uint64_t seed = 0;
    int batch_size = 64;
    double lr = 1e-3, momentum = 0.9, shift_fraction = 0.2;
    int stda_batch_size = 32, stda_rounds = 2;
    double stda_lr = 0.01;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--grid", o->grid_file,
                  "Grid config file (JSON: methods, datasets, noises, snrs, lambdas, seeds, "
                  "epochs, conmix_variants, corpora) — replaces the single-cell flags");
  cmd->add_option("--checkpoint", o->checkpoint, "Pretrained source checkpoint");
  cmd->add_option("--method", o->method, "tent, norm, ttt, conmix")->capture_default_str();
  cmd->add_option("--variant", o->variant,
                  "Composite-method ablation: org, upd, no_pl, no_cst, no_nm");
  cmd->add_option("--records", o->records, "JSONL file to append the run record to")
      ->capture_default_str();
  cmd->add_option("--epochs", o->epochs, "Adaptation epochs")->capture_default_str();
  cmd->add_option("--seed", o->seed, "Master seed")->capture_default_str();
  cmd->add_option("--batch-size", o->batch_size, "Online adaptation batch size")
      ->capture_default_str();
  cmd->add_option("--lr", o->lr, "Online adaptation learning rate")->capture_default_str();
  cmd->add_option("--momentum", o->momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--shift-fraction", o->shift_fraction, "Pretext time-shift magnitude")
      ->capture_default_str();
  cmd->add_option("--stda-batch-size", o->stda_batch_size, "Composite-method batch size")
      ->capture_default_str();
  cmd->add_option("--stda-lr", o->stda_lr, "Composite-method learning rate")
      ->capture_default_str();
  cmd->add_option("--stda-rounds", o->stda_rounds, "Pseudo-label refinement rounds")
      ->capture_default_str();

  cmd->callback([ds, nz, o]() {
    if (!o->grid_file.empty()) {
      run_grid_file(o->grid_file, o->records);
      return;
    }
    if (ds->root.empty()) throw MissingDataset("--root is required without --grid");
    if (o->checkpoint.empty()) throw CheckpointMissing("--checkpoint is required without --grid");

    const DatasetSpec spec = ds->spec();
    ExperimentCell cell;
    cell.method = method_id_from_string(o->method);
    cell.dataset = spec.id;
    cell.noise = nz->source();
    cell.severity = nz->severity();
    cell.seed = o->seed;
    cell.epochs = o->epochs;
    cell.variant = o->variant;
    cell.features = spec.features;
    cell.online.batch_size = o->batch_size;
    cell.online.lr = o->lr;
    cell.online.momentum = o->momentum;
    cell.online.shift_fraction = o->shift_fraction;
    cell.stda = stda_profile(spec.id);
    cell.stda.batch_size = o->stda_batch_size;
    cell.stda.lr = o->stda_lr;
    cell.stda.refinement_rounds = o->stda_rounds;

    CellContext ctx;
    ctx.test = load_split(spec, o->seed, "test");
    ctx.noise_bank = bank_for(spec, nz->bank_dir, cell.noise);
    ctx.checkpoint_path = o->checkpoint;

    const RunRecord rec = run_cell(cell, ctx);
    append_record(o->records, rec);
    print_record(rec);
    std::cout << "record appended to " << o->records << "\n";
  });
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

void setup_ablate(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "ablate", "Run the composite-method ablation variants on one condition");
  auto ds = std::make_shared<DatasetOpts>();
  auto nz = std::make_shared<NoiseOpts>();
  ds->attach(cmd);
  nz->attach(cmd);
  struct Opts {
    std::string checkpoint;
    std::string variants = "org,upd,no_pl,no_cst,no_nm";
    std::string records = "ablate_records.jsonl";
    std::string curves = "ablate_curves.csv";
    int epochs = 5;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--checkpoint", o->checkpoint, "Pretrained source checkpoint")->required();
  cmd->add_option("--variants", o->variants, "Comma-separated ablation variants")
      ->capture_default_str();
  cmd->add_option("--records", o->records, "JSONL file for the run records")
      ->capture_default_str();
  cmd->add_option("--curves", o->curves, "Per-epoch error / loss CSV")->capture_default_str();
  cmd->add_option("--epochs", o->epochs, "Adaptation epochs")->capture_default_str();
  cmd->add_option("--seed", o->seed, "Master seed")->capture_default_str();

  cmd->callback([ds, nz, o]() {
    const DatasetSpec spec = ds->spec();
    const NoiseSource src = nz->source();
    const double severity = nz->severity();

    CellContext ctx;
    ctx.test = load_split(spec, o->seed, "test");
    ctx.noise_bank = bank_for(spec, nz->bank_dir, src);
    ctx.checkpoint_path = o->checkpoint;

    std::vector<std::string> variants;
    std::istringstream vs(o->variants);
    std::string v;
    while (std::getline(vs, v, ','))
      if (!v.empty()) variants.push_back(v);

    std::ofstream curves(o->curves);
    if (!curves) throw MissingDataset("cannot write curve file: " + o->curves);
    curves << "variant,epoch,error_percent,mean_total_loss,pl_loss\n";

    for (const auto& variant : variants) {
      ExperimentCell cell;
      cell.method = MethodId::Conmix;
      cell.variant = variant;
      cell.dataset = spec.id;
      cell.noise = src;
      cell.severity = severity;
      cell.seed = o->seed;
      cell.epochs = o->epochs;
      cell.features = spec.features;
      cell.stda = stda_profile(spec.id);

      const RunRecord rec = run_cell(cell, ctx);
      append_record(o->records, rec);
      print_record(rec);
      for (std::size_t e = 0; e < rec.epoch_errors.size(); ++e) {
        curves << variant << "," << e + 1 << "," << rec.epoch_errors[e] << ","
               << (e < rec.epoch_losses.size() ? std::to_string(rec.epoch_losses[e])
                                               : std::string())
               << ","
               << (e < rec.epoch_pl_losses.size() ? std::to_string(rec.epoch_pl_losses[e])
                                                  : std::string())
               << "\n";
      }
    }
    std::cout << "records in " << o->records << ", per-epoch curves in " << o->curves << "\n";
  });
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

void setup_report(CLI::App& app) {
  auto* cmd = app.add_subcommand("report", "Render tables and figures from run records");
  struct Opts {
    std::vector<std::string> records;
    std::string layout = "table2";
    std::string out_dir = "report";
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--records", o->records, "Run-record JSONL files")->required()
      ->expected(-1);
  cmd->add_option("--layout", o->layout, "table2, table4, fig_bars, appendix_curves")
      ->capture_default_str();
  cmd->add_option("--out-dir", o->out_dir, "Output directory")->capture_default_str();

  cmd->callback([o]() {
    std::vector<RunRecord> all;
    for (const auto& path : o->records) {
      const auto recs = read_records(path);
      all.insert(all.end(), recs.begin(), recs.end());
    }
    std::cout << "loaded " << all.size() << " records\n";
    const ReportFiles files =
        report(all, report_layout_from_string(o->layout), o->out_dir);
    for (const auto& p : files.paths) std::cout << "wrote " << p << "\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Test-time adaptation benchmark for audio classification under background-noise shift"};
  app.require_subcommand(1);
  setup_toygen(app);
  setup_pretrain(app);
  setup_corrupt(app);
  setup_adapt(app);
  setup_ablate(app);
  setup_report(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const IncompleteGrid& e) {
    std::cerr << e.what() << "\n(partial report files were still written)\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
