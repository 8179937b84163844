// data.hpp -- dataset ingestion (UCR tsv, UEA ts, PTB-XL wfdb layout),
// preprocessing and deterministic stratified splitting.
#pragma once

#include "vibcreg/common.hpp"
#include "vibcreg/series.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vibcreg::data {

enum class Archive { kUcr, kUea, kPtbXl };

struct DatasetDescriptor {
  std::string name;
  Archive archive = Archive::kUcr;
  int n_samples = 0;
  int n_classes = 0;  // single-label tasks
  int n_labels = 0;   // multi-label tasks
  int channels = 0;
  int length = 0;
  std::string source;
};

struct Dataset {
  SeriesBatch train;
  SeriesBatch test;
  DatasetDescriptor desc;
};

// <root>/<name>/<name>_TRAIN.tsv and _TEST.tsv, label-first tab-separated.
// Labels are remapped to 0..K-1 (sorted by original value).
Dataset load_ucr(const std::string& name, const std::filesystem::path& root);

// <root>/<name>/<name>_TRAIN.ts and _TEST.ts (sktime-style text format).
Dataset load_uea(const std::string& name, const std::filesystem::path& root);

struct PtbXlDataset {
  std::vector<SeriesBatch> folds;  // folds[0] .. folds[9]
  DatasetDescriptor desc;
  std::vector<std::string> label_names;
};

// Standard PTB-XL directory: ptbxl_database.csv, scp_statements.csv and
// records100/... wfdb records (format 16).
PtbXlDataset load_ptbxl(const std::filesystem::path& root, int sampling_rate = 100);

enum class Preprocess { kZnormArcsinh, kZnorm, kNone };

Preprocess preprocess_from_string(const std::string& s);
const char* to_string(Preprocess p);

// Per-sample, per-channel z-normalization (constant series map to zeros),
// optionally followed by elementwise arcsinh.
SeriesBatch preprocess(const SeriesBatch& x, Preprocess scheme);

SeriesBatch concat(const SeriesBatch& a, const SeriesBatch& b);

enum class SplitScheme { kStratified8020, kArchiveGiven, kPtbxlFolds };

struct SplitPlan {
  SplitScheme scheme = SplitScheme::kStratified8020;
  std::uint64_t seed = 0;
  double subset_fraction = 1.0;
};

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> test;
};

// Deterministic stratified 80/20 split of a label vector. Per-class train
// counts are round(0.8 * n_c), which keeps class frequencies within one
// sample of exact proportionality.
SplitIndices stratified_split_80_20(const std::vector<int>& labels, std::uint64_t seed);

// Stratified subset of the given indices; returns nullopt (with a warning)
// when some class would receive zero samples.
std::optional<std::vector<int>> stratified_subset(const std::vector<int>& labels,
                                                  const std::vector<int>& pool, double fraction,
                                                  std::uint64_t seed);

// VIBCREG_DATASET_ROOT, empty when unset.
std::string dataset_root_from_env();

}  // namespace vibcreg::data
