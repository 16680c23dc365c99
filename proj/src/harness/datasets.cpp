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

#include "tta/harness/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "tta/errors.hpp"

namespace fs = std::filesystem;

namespace tta {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Digit vocabulary shared by AM and the digit-filtered keyword corpus, in
// label order (label k is the word for digit k).
const std::vector<std::string> kDigitWords = {"zero", "one", "two",   "three", "four",
                                              "five", "six", "seven", "eight", "nine"};

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> sorted_subdirs(const fs::path& root) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<std::string> sorted_wavs(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

// One relative path per line; tolerates trailing '\r' and blank lines.
std::unordered_set<std::string> read_list_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingDataset("split list not found: " + path.string());
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

void check_disjoint(const SplitSet& s) {
  std::unordered_set<std::string> seen;
  for (const SplitManifest* m : {&s.train, &s.val, &s.test}) {
    for (const auto& p : m->paths) {
      if (!seen.insert(p).second)
        throw LabelVocabularyMismatch("clip assigned to more than one split: " + p);
    }
  }
}

// ---------------------------------------------------------------------------
// Keyword corpus (SC family)
// ---------------------------------------------------------------------------

// Folder-per-word layout with the two official membership lists. Labels are
// indices into the sorted folder-name vocabulary.
SplitSet ingest_keyword_corpus(const std::string& root) {
  const fs::path base(root);
  if (root.empty() || !fs::is_directory(base))
    throw MissingDataset("keyword corpus directory not found: " + root);

  SplitSet out;
  for (const auto& name : sorted_subdirs(base)) {
    if (name == "_background_noise_") continue;
    out.vocab.push_back(name);
  }
  if (out.vocab.empty()) throw MissingDataset("no word folders under: " + root);

  const auto val_list = read_list_file(base / "validation_list.txt");
  const auto test_list = read_list_file(base / "testing_list.txt");

  for (std::size_t label = 0; label < out.vocab.size(); ++label) {
    const std::string& word = out.vocab[label];
    for (const auto& fname : sorted_wavs(base / word)) {
      const std::string rel = word + "/" + fname;
      SplitManifest* dst = &out.train;
      if (val_list.count(rel))
        dst = &out.val;
      else if (test_list.count(rel))
        dst = &out.test;
      dst->paths.push_back(rel);
      dst->labels.push_back(static_cast<int>(label));
    }
  }
  return out;
}

void check_vocab_size(const SplitSet& s, int expected) {
  if (static_cast<int>(s.vocab.size()) != expected) {
    throw LabelVocabularyMismatch("corpus has " + std::to_string(s.vocab.size()) +
                                  " classes, expected " + std::to_string(expected));
  }
}

// Re-split of the official training pool into 63% train / 30% test /
// remainder val, so that the adaptation-time test side is large. The official
// validation/testing clips are not used by this variant.
SplitSet resplit_keyword_corpus(SplitSet sc, Rng& rng) {
  const SplitManifest pool = std::move(sc.train);
  const std::size_t n = pool.size();
  if (n == 0) throw MissingDataset("official training pool is empty");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n_train = static_cast<std::size_t>(std::floor(0.63 * static_cast<double>(n)));
  const std::size_t n_test = static_cast<std::size_t>(std::floor(0.30 * static_cast<double>(n)));

  SplitSet out;
  out.vocab = std::move(sc.vocab);
  out.note = "official training pool re-split 63/7/30; official val/test lists unused";
  for (std::size_t i = 0; i < n; ++i) {
    SplitManifest* dst = &out.train;
    if (i >= n_train) dst = (i < n - n_test) ? &out.val : &out.test;
    dst->paths.push_back(pool.paths[order[i]]);
    dst->labels.push_back(pool.labels[order[i]]);
  }
  return out;
}

// Digit-word restriction: keeps the official split membership, relabels the
// ten digit words 0-9 in digit order.
SplitSet filter_keyword_digits(SplitSet sc) {
  std::map<int, int> relabel;  // old label -> digit value
  for (std::size_t d = 0; d < kDigitWords.size(); ++d) {
    const auto it = std::find(sc.vocab.begin(), sc.vocab.end(), kDigitWords[d]);
    if (it == sc.vocab.end())
      throw LabelVocabularyMismatch("digit word missing from corpus: " + kDigitWords[d]);
    relabel[static_cast<int>(it - sc.vocab.begin())] = static_cast<int>(d);
  }

  SplitSet out;
  out.vocab = kDigitWords;
  out.note = "digit-word subset; official split membership preserved";
  const SplitManifest* srcs[] = {&sc.train, &sc.val, &sc.test};
  SplitManifest* dsts[] = {&out.train, &out.val, &out.test};
  for (int s = 0; s < 3; ++s) {
    for (std::size_t i = 0; i < srcs[s]->size(); ++i) {
      const auto it = relabel.find(srcs[s]->labels[i]);
      if (it == relabel.end()) continue;
      dsts[s]->paths.push_back(srcs[s]->paths[i]);
      dsts[s]->labels.push_back(it->second);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spoken-digit corpus (AM)
// ---------------------------------------------------------------------------

int parse_digit_label(const std::string& filename) {
  const auto underscore = filename.find('_');
  if (underscore == 1 && std::isdigit(static_cast<unsigned char>(filename[0])))
    return filename[0] - '0';
  throw LabelVocabularyMismatch("clip name does not start with a digit label: " + filename);
}

SplitSet ingest_digit_corpus(const std::string& root, Rng& rng) {
  const fs::path base(root);
  if (root.empty() || !fs::is_directory(base))
    throw MissingDataset("spoken-digit corpus directory not found: " + root);

  std::vector<std::string> speakers;
  for (const auto& name : sorted_subdirs(base)) {
    if (!name.empty() && std::all_of(name.begin(), name.end(), [](unsigned char c) {
          return std::isdigit(c) != 0;
        }))
      speakers.push_back(name);
  }
  if (speakers.empty()) throw MissingDataset("no speaker folders under: " + root);

  SplitSet out;
  out.vocab = {"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"};

  // Source speakers come from the accent metadata; without it, fall back to a
  // deterministic speaker-id split.
  std::set<std::string> source_speakers;
  const fs::path meta_path = base / "audioMNIST_meta.txt";
  std::ifstream meta_in(meta_path);
  if (meta_in) {
    nlohmann::json meta;
    try {
      meta_in >> meta;
    } catch (const nlohmann::json::parse_error& e) {
      throw MissingDataset("unreadable speaker metadata " + meta_path.string() + ": " + e.what());
    }
    for (const auto& sp : speakers) {
      if (meta.contains(sp) && lowercase(meta[sp].value("accent", "")) == "german")
        source_speakers.insert(sp);
    }
    if (source_speakers.empty())
      throw MissingDataset("speaker metadata lists no source-accent speakers");
  } else {
    const std::size_t n_src =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.75 * speakers.size())));
    source_speakers.insert(speakers.begin(), speakers.begin() + static_cast<std::ptrdiff_t>(n_src));
    out.note =
        "speaker metadata file absent; fell back to a deterministic speaker-id split "
        "(first 75% of sorted speaker ids form the source pool)";
  }

  SplitManifest source_pool;
  for (const auto& sp : speakers) {
    const bool is_source = source_speakers.count(sp) > 0;
    for (const auto& fname : sorted_wavs(base / sp)) {
      const std::string rel = sp + "/" + fname;
      const int label = parse_digit_label(fname);
      SplitManifest* dst = is_source ? &source_pool : &out.test;
      dst->paths.push_back(rel);
      dst->labels.push_back(label);
    }
  }
  if (source_pool.size() == 0) throw MissingDataset("source speaker pool is empty");

  // Carve 10% of the source clips into the validation split.
  std::vector<std::size_t> order(source_pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_val = source_pool.size() / 10;
  std::vector<bool> is_val(source_pool.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
  for (std::size_t i = 0; i < source_pool.size(); ++i) {
    SplitManifest* dst = is_val[i] ? &out.val : &out.train;
    dst->paths.push_back(source_pool.paths[i]);
    dst->labels.push_back(source_pool.labels[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// TOY corpus on disk
// ---------------------------------------------------------------------------

const char* split_name(int idx) { return idx == 0 ? "train" : (idx == 1 ? "val" : "test"); }

void write_manifest(const fs::path& path, const SplitManifest& m) {
  std::ofstream out(path);
  for (std::size_t i = 0; i < m.size(); ++i) out << m.paths[i] << '\t' << m.labels[i] << '\n';
}

SplitManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingDataset("manifest not found: " + path.string());
  SplitManifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw MissingDataset("malformed manifest line in " + path.string() + ": " + line);
    m.paths.push_back(line.substr(0, tab));
    m.labels.push_back(std::stoi(line.substr(tab + 1)));
  }
  return m;
}

nlohmann::json toy_meta_json(const ToyConfig& cfg) {
  return {{"num_classes", cfg.num_classes},
          {"per_class", cfg.per_class},
          {"sample_rate", cfg.sample_rate},
          {"duration_s", cfg.duration_s},
          {"seed", cfg.seed}};
}

SplitSet read_toy_splits(const DatasetSpec& spec) {
  const fs::path base(spec.root);
  SplitSet out;
  out.train = read_manifest(base / "manifest_train.tsv");
  out.val = read_manifest(base / "manifest_val.tsv");
  out.test = read_manifest(base / "manifest_test.tsv");
  std::ifstream vin(base / "vocab.txt");
  if (!vin) throw MissingDataset("vocabulary file not found under: " + spec.root);
  std::string line;
  while (std::getline(vin, line))
    if (!line.empty()) out.vocab.push_back(line);
  check_vocab_size(out, spec.num_classes);
  return out;
}

SplitSet build_toy_splits(const DatasetSpec& spec, bool allow_generate) {
  if (spec.root.empty()) throw MissingDataset("toy corpus root not set");
  const fs::path base(spec.root);
  const ToyConfig cfg{spec.num_classes, spec.toy_per_class, spec.sample_rate, spec.clip_s,
                      spec.toy_seed};
  const fs::path meta_path = base / "toy_meta.json";
  if (!fs::exists(meta_path)) {
    if (!allow_generate) throw MissingDataset("toy corpus not found under: " + spec.root);
    make_toy_dataset(cfg, spec.root);
  } else {
    std::ifstream min(meta_path);
    nlohmann::json meta;
    min >> meta;
    if (meta != toy_meta_json(cfg)) {
      throw MissingDataset("toy corpus on disk was generated with different parameters; "
                           "remove " + spec.root + " to regenerate");
    }
  }
  return read_toy_splits(spec);
}

// ---------------------------------------------------------------------------
// TOY synthesis
// ---------------------------------------------------------------------------

std::vector<double> toy_fundamentals(int num_classes, int sample_rate) {
  const double f0 = 350.0;
  const double top = 0.42 * (sample_rate / 2.0);
  const double ratio = num_classes > 1 ? std::pow(top / f0, 1.0 / (num_classes - 1)) : 1.0;
  std::vector<double> f(num_classes);
  for (int k = 0; k < num_classes; ++k) f[k] = f0 * std::pow(ratio, k);
  return f;
}

Waveform make_toy_clip(int cls, const std::vector<double>& fundamentals, const ToyConfig& cfg,
                       Rng& rng) {
  const std::size_t n =
      static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.sample_rate));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double center = (0.5 + (unit(rng) - 0.5) * 0.04) * static_cast<double>(n);
  const double sigma = 0.1 * static_cast<double>(n);
  const double amp = 0.3 * (0.9 + 0.2 * unit(rng));
  // Per-clip detune keeps clips within a class from being carbon copies, so
  // corrupted samples straddle decision boundaries individually instead of
  // flipping a whole class at once. Capped well below the class spacing.
  const double ratio =
      fundamentals.size() > 1 ? fundamentals[1] / fundamentals[0] : 1.2;
  const double detune_frac = std::min(0.05, 0.3 * (ratio - 1.0));
  const double detune = 1.0 + detune_frac * (2.0 * unit(rng) - 1.0);
  const double phase1 = 2.0 * kPi * unit(rng);
  const double phase2 = 2.0 * kPi * unit(rng);

  const double f = detune * fundamentals[static_cast<std::size_t>(cls)];
  const double w1 = 2.0 * kPi * f / cfg.sample_rate;
  const double w2 = 2.0 * kPi * 2.0 * f / cfg.sample_rate;

  Waveform w;
  w.sample_rate = cfg.sample_rate;
  w.samples.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double dt = (static_cast<double>(t) - center) / sigma;
    const double env = std::exp(-0.5 * dt * dt);
    const double tone = std::sin(w1 * static_cast<double>(t) + phase1) +
                        0.45 * std::sin(w2 * static_cast<double>(t) + phase2);
    w.samples[t] = amp * env * tone + 0.02 * gauss(rng);
  }
  return w;
}

void scale_to_rms(Waveform& w, double target_rms) {
  const double rms = std::sqrt(w.energy() / static_cast<double>(w.size()));
  if (rms <= 0.0) return;
  const double s = target_rms / rms;
  for (double& x : w.samples) x *= s;
}

}  // namespace

std::string to_string(DatasetId id) {
  switch (id) {
    case DatasetId::AM: return "AM";
    case DatasetId::SC: return "SC";
    case DatasetId::SCR: return "SCR";
    case DatasetId::SCN: return "SCN";
    case DatasetId::TOY: return "TOY";
  }
  return "?";
}

DatasetId dataset_id_from_string(const std::string& s) {
  const std::string l = lowercase(s);
  if (l == "am") return DatasetId::AM;
  if (l == "sc") return DatasetId::SC;
  if (l == "scr") return DatasetId::SCR;
  if (l == "scn") return DatasetId::SCN;
  if (l == "toy") return DatasetId::TOY;
  throw MissingDataset("unknown dataset id: " + s);
}

std::size_t DatasetSpec::clip_samples() const {
  return static_cast<std::size_t>(std::llround(clip_s * sample_rate));
}

DatasetSpec dataset_preset(DatasetId id) {
  DatasetSpec spec;
  spec.id = id;
  switch (id) {
    case DatasetId::AM:
      spec.num_classes = 10;
      spec.sample_rate = 16000;  // corpus ships at 48 kHz; clips are resampled
      break;
    case DatasetId::SC:
    case DatasetId::SCR:
      spec.num_classes = 30;
      spec.sample_rate = 16000;
      break;
    case DatasetId::SCN:
      spec.num_classes = 10;
      spec.sample_rate = 16000;
      break;
    case DatasetId::TOY:
      spec.num_classes = 10;
      spec.sample_rate = 8000;
      spec.features = toy_feature_config();
      break;
  }
  return spec;
}

SplitSet build_splits(const DatasetSpec& spec, Rng& rng) {
  SplitSet out;
  switch (spec.id) {
    case DatasetId::SC:
      out = ingest_keyword_corpus(spec.root);
      check_vocab_size(out, spec.num_classes);
      break;
    case DatasetId::SCR: {
      SplitSet sc = ingest_keyword_corpus(spec.root);
      check_vocab_size(sc, spec.num_classes);
      out = resplit_keyword_corpus(std::move(sc), rng);
      break;
    }
    case DatasetId::SCN: {
      if (spec.num_classes != 10)
        throw LabelVocabularyMismatch("digit subset always has 10 classes");
      out = filter_keyword_digits(ingest_keyword_corpus(spec.root));
      break;
    }
    case DatasetId::AM:
      if (spec.num_classes != 10)
        throw LabelVocabularyMismatch("spoken-digit corpus always has 10 classes");
      out = ingest_digit_corpus(spec.root, rng);
      break;
    case DatasetId::TOY:
      out = build_toy_splits(spec, /*allow_generate=*/true);
      break;
  }
  check_disjoint(out);
  return out;
}

LabeledWaveSet load_manifest(const DatasetSpec& spec, const SplitManifest& m) {
  LabeledWaveSet out;
  out.waves.reserve(m.size());
  out.labels = m.labels;
  const fs::path base(spec.root);
  for (const auto& rel : m.paths) {
    Waveform w = read_wav((base / rel).string());
    if (w.sample_rate != spec.sample_rate) w = resample_sinc(w, spec.sample_rate);
    out.waves.push_back(fit_length(w, spec.clip_samples()));
  }
  return out;
}

FeatureConfig toy_feature_config() {
  FeatureConfig f;
  f.n_fft = 256;
  f.hop = 160;
  f.mel_bins = 32;
  return f;
}

ToyCorpus make_toy_corpus(const ToyConfig& cfg) {
  if (cfg.num_classes < 2) throw LabelOutOfRange("toy corpus needs at least 2 classes");
  if (cfg.per_class < 1) throw LengthMismatch("toy corpus needs at least 1 clip per class");
  if (cfg.sample_rate <= 0 || cfg.duration_s <= 0.0)
    throw LengthMismatch("toy corpus needs a positive clip length");

  const auto fundamentals = toy_fundamentals(cfg.num_classes, cfg.sample_rate);
  ToyCorpus corpus;
  for (int k = 0; k < cfg.num_classes; ++k)
    corpus.vocab.push_back("tone" + std::to_string(k));

  LabeledWaveSet* splits[] = {&corpus.train, &corpus.val, &corpus.test};
  const int val_per_class = std::max(2, cfg.per_class / 5);
  const int counts[] = {cfg.per_class, val_per_class, cfg.per_class};
  for (int s = 0; s < 3; ++s) {
    Rng rng(derive_seed(cfg.seed, "toy_split", static_cast<std::uint64_t>(s)));
    for (int k = 0; k < cfg.num_classes; ++k) {
      for (int i = 0; i < counts[s]; ++i) {
        splits[s]->waves.push_back(make_toy_clip(k, fundamentals, cfg, rng));
        splits[s]->labels.push_back(k);
      }
    }
  }
  return corpus;
}

DatasetSpec make_toy_dataset(const ToyConfig& cfg, const std::string& dir) {
  const ToyCorpus corpus = make_toy_corpus(cfg);
  const fs::path base(dir);

  const LabeledWaveSet* splits[] = {&corpus.train, &corpus.val, &corpus.test};
  SplitSet manifests;
  SplitManifest* outs[] = {&manifests.train, &manifests.val, &manifests.test};
  for (int s = 0; s < 3; ++s) {
    fs::create_directories(base / split_name(s));
    std::vector<int> per_class_counter(static_cast<std::size_t>(cfg.num_classes), 0);
    for (std::size_t i = 0; i < splits[s]->waves.size(); ++i) {
      const int label = splits[s]->labels[i];
      char name[64];
      std::snprintf(name, sizeof(name), "tone%d_%04d.wav", label,
                    per_class_counter[static_cast<std::size_t>(label)]++);
      const std::string rel = std::string(split_name(s)) + "/" + name;
      write_wav((base / rel).string(), splits[s]->waves[i], WavEncoding::Float32);
      outs[s]->paths.push_back(rel);
      outs[s]->labels.push_back(label);
    }
    write_manifest(base / ("manifest_" + std::string(split_name(s)) + ".tsv"), *outs[s]);
  }

  std::ofstream vout(base / "vocab.txt");
  for (const auto& name : corpus.vocab) vout << name << '\n';
  std::ofstream mout(base / "toy_meta.json");
  mout << toy_meta_json(cfg).dump(2) << '\n';

  DatasetSpec spec = dataset_preset(DatasetId::TOY);
  spec.root = dir;
  spec.num_classes = cfg.num_classes;
  spec.sample_rate = cfg.sample_rate;
  spec.clip_s = cfg.duration_s;
  spec.toy_per_class = cfg.per_class;
  spec.toy_seed = cfg.seed;
  return spec;
}

std::map<NoiseSource, Waveform> make_toy_noise_bank(int sample_rate, double duration_s,
                                                    std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  if (n == 0) throw LengthMismatch("noise bank needs a positive duration");
  std::map<NoiseSource, Waveform> bank;

  const auto fresh = [&](NoiseSource src) {
    return Rng(derive_seed(seed, "toy_noise", static_cast<std::uint64_t>(src)));
  };

  {  // DD: broadband clatter — noise bursts with sharp decay over a low floor.
    Rng rng = fresh(NoiseSource::DD);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.assign(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) w.samples[t] = 0.05 * gauss(rng);
    std::size_t t = 0;
    while (t < n) {
      t += static_cast<std::size_t>((0.15 + 0.30 * unit(rng)) * sample_rate);
      if (t >= n) break;
      const std::size_t burst =
          static_cast<std::size_t>((0.02 + 0.06 * unit(rng)) * sample_rate);
      const double amp = 0.5 + 0.5 * unit(rng);
      for (std::size_t j = 0; j < burst && t + j < n; ++j) {
        const double decay = std::exp(-4.0 * static_cast<double>(j) / static_cast<double>(burst));
        w.samples[t + j] += amp * decay * gauss(rng);
      }
      t += burst;
    }
    scale_to_rms(w, 0.1);
    bank[NoiseSource::DD] = std::move(w);
  }

  {  // EB: harmonic whir whose pitch glides slowly across the mid band, with
     // slow amplitude modulation. A tonal interferer only creates a domain
     // shift if it lands on bins the classifier relies on, and the glide makes
     // each random clip offset pick a different collision frequency, so a
     // corruption pass degrades clips individually rather than uniformly.
    Rng rng = fresh(NoiseSource::EB);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double f_lo = 380.0;
    const double f_hi = 1750.0;
    const double glide = std::log(f_hi / f_lo);
    double phases[3];
    double amps[3];
    for (int h = 0; h < 3; ++h) {
      phases[h] = 2.0 * kPi * unit(rng);
      amps[h] = 1.0 / (h + 1);
    }
    const double am_phase = 2.0 * kPi * unit(rng);
    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.resize(n);
    const double total_s = static_cast<double>(n) / sample_rate;
    for (std::size_t t = 0; t < n; ++t) {
      const double ts = static_cast<double>(t) / sample_rate;
      // Instantaneous fundamental f(ts) = f_lo * exp(glide * ts / total_s);
      // the oscillator phase is 2*pi times its running integral.
      const double cycles = f_lo * total_s / glide * (std::exp(glide * ts / total_s) - 1.0);
      double whir = 0.0;
      for (int h = 0; h < 3; ++h)
        whir += amps[h] * std::sin(2.0 * kPi * (h + 1) * cycles + phases[h]);
      const double am = 1.0 + 0.3 * std::sin(2.0 * kPi * 1.3 * ts + am_phase);
      w.samples[t] = am * whir + 0.05 * gauss(rng);
    }
    scale_to_rms(w, 0.1);
    bank[NoiseSource::EB] = std::move(w);
  }

  {  // RT: high-frequency-weighted hiss with a slow level wobble.
    Rng rng = fresh(NoiseSource::RT);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double wobble_phase = 2.0 * kPi * unit(rng);
    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.resize(n);
    double prev = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double white = gauss(rng);
      const double hiss = white - 0.7 * prev;  // first-difference emphasis
      prev = white;
      const double wobble =
          1.0 + 0.25 * std::sin(2.0 * kPi * 0.5 * static_cast<double>(t) / sample_rate +
                                wobble_phase);
      w.samples[t] = wobble * hiss;
    }
    scale_to_rms(w, 0.1);
    bank[NoiseSource::RT] = std::move(w);
  }

  return bank;
}

std::map<NoiseSource, Waveform> load_noise_bank(const std::string& sc_root) {
  const fs::path dir = fs::path(sc_root) / "_background_noise_";
  if (!fs::is_directory(dir))
    throw MissingDataset("background-noise folder not found under: " + sc_root);
  const std::pair<NoiseSource, const char*> entries[] = {
      {NoiseSource::DD, "doing_the_dishes.wav"},
      {NoiseSource::EB, "exercise_bike.wav"},
      {NoiseSource::RT, "running_tap.wav"},
  };
  std::map<NoiseSource, Waveform> bank;
  for (const auto& [src, fname] : entries) {
    const fs::path p = dir / fname;
    if (!fs::exists(p)) throw MissingDataset("background recording not found: " + p.string());
    bank[src] = read_wav(p.string());
  }
  return bank;
}

}  // namespace tta
