#include "vibcreg/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace vibcreg::data {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_on(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(line);
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_value(const std::string& token, const std::string& context) {
  try {
    std::size_t pos = 0;
    double v = std::stod(token, &pos);
    if (!std::isfinite(v)) throw IoError(context + ": non-finite value '" + token + "'");
    return v;
  } catch (const std::invalid_argument&) {
    throw IoError(context + ": cannot parse value '" + token + "'");
  }
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

// Remaps raw numeric labels to 0..K-1 ordered by value; shared by train/test.
std::map<double, int> build_label_map(const std::vector<double>& raw_a,
                                      const std::vector<double>& raw_b) {
  std::set<double> uniq(raw_a.begin(), raw_a.end());
  uniq.insert(raw_b.begin(), raw_b.end());
  std::map<double, int> m;
  int next = 0;
  for (double v : uniq) m[v] = next++;
  return m;
}

struct RawUcr {
  std::vector<double> labels;
  std::vector<std::vector<float>> rows;
};

RawUcr read_ucr_tsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_ucr: missing file " + path.string());
  RawUcr out;
  std::string line;
  std::size_t expected = 0;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_on(line, '\t');
    if (fields.size() < 2)
      throw IoError("load_ucr: " + path.string() + ":" + std::to_string(lineno) +
                    ": expected label and at least one value");
    std::string ctx = path.string() + ":" + std::to_string(lineno);
    out.labels.push_back(parse_value(fields[0], ctx));
    std::vector<float> row(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      std::string t = trim(fields[i]);
      if (t == "NaN" || t == "nan" || t == "?")
        throw IoError(ctx + ": missing values are not supported");
      row[i - 1] = float(parse_value(t, ctx));
    }
    if (expected == 0) expected = row.size();
    if (row.size() != expected)
      throw IoError(ctx + ": ragged row (got " + std::to_string(row.size()) + " values, expected " +
                    std::to_string(expected) + ")");
    out.rows.push_back(std::move(row));
  }
  if (out.rows.empty()) throw IoError("load_ucr: empty file " + path.string());
  return out;
}

SeriesBatch to_batch(const RawUcr& raw, const std::map<double, int>& label_map) {
  SeriesBatch b;
  b.batch = int(raw.rows.size());
  b.channels = 1;
  b.length = int(raw.rows.front().size());
  b.values.resize(std::size_t(b.batch) * b.length);
  b.labels.resize(b.batch);
  for (int i = 0; i < b.batch; ++i) {
    std::copy(raw.rows[i].begin(), raw.rows[i].end(), b.values.begin() + std::size_t(i) * b.length);
    b.labels[i] = label_map.at(raw.labels[i]);
  }
  return b;
}

}  // namespace

Dataset load_ucr(const std::string& name, const fs::path& root) {
  fs::path dir = root / name;
  fs::path train_path = dir / (name + "_TRAIN.tsv");
  fs::path test_path = dir / (name + "_TEST.tsv");
  if (!fs::exists(train_path) || !fs::exists(test_path)) {
    throw IoError("load_ucr: dataset '" + name + "' not found under " + root.string());
  }
  RawUcr raw_train = read_ucr_tsv(train_path);
  RawUcr raw_test = read_ucr_tsv(test_path);
  if (raw_train.rows.front().size() != raw_test.rows.front().size())
    throw IoError("load_ucr: train/test length mismatch for " + name);
  auto label_map = build_label_map(raw_train.labels, raw_test.labels);

  Dataset out;
  out.train = to_batch(raw_train, label_map);
  out.test = to_batch(raw_test, label_map);
  out.desc.name = name;
  out.desc.archive = Archive::kUcr;
  out.desc.n_samples = out.train.batch + out.test.batch;
  out.desc.n_classes = int(label_map.size());
  out.desc.channels = 1;
  out.desc.length = out.train.length;
  out.desc.source = dir.string();
  return out;
}

// ---------------------------------------------------------------------------
// UEA .ts format
// ---------------------------------------------------------------------------

namespace {

struct RawTs {
  std::vector<std::vector<std::vector<float>>> samples;  // [sample][dim][t]
  std::vector<std::string> labels;
};

RawTs read_ts(const fs::path& path, const std::string& name) {
  std::ifstream in(path);
  if (!in) throw IoError("load_uea: missing file " + path.string());
  RawTs out;
  std::string line;
  bool in_data = false;
  bool equal_length = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!in_data && (t[0] == '@')) {
      std::string lower = t;
      std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
      if (lower.rfind("@equallength", 0) == 0 && lower.find("false") != std::string::npos)
        equal_length = false;
      if (lower.rfind("@data", 0) == 0) {
        if (!equal_length)
          throw IoError("load_uea: dataset '" + name +
                        "' has varying-length series, which are not supported");
        in_data = true;
      }
      continue;
    }
    if (!in_data) continue;
    auto parts = split_on(t, ':');
    if (parts.size() < 2)
      throw IoError("load_uea: " + path.string() + ":" + std::to_string(lineno) +
                    ": expected dims and label");
    std::vector<std::vector<float>> dims;
    for (std::size_t d = 0; d + 1 < parts.size(); ++d) {
      auto vals = split_on(parts[d], ',');
      std::vector<float> series(vals.size());
      for (std::size_t i = 0; i < vals.size(); ++i) {
        std::string v = trim(vals[i]);
        if (v == "NaN" || v == "nan" || v == "?")
          throw IoError("load_uea: dataset '" + name + "' contains missing values");
        series[i] = float(parse_value(v, path.string() + ":" + std::to_string(lineno)));
      }
      dims.push_back(std::move(series));
    }
    out.samples.push_back(std::move(dims));
    out.labels.push_back(trim(parts.back()));
  }
  if (out.samples.empty()) throw IoError("load_uea: no data lines in " + path.string());
  // Uniform shape check (varying length may also appear without the header flag).
  std::size_t dims = out.samples.front().size();
  std::size_t len = out.samples.front().front().size();
  for (const auto& s : out.samples) {
    if (s.size() != dims) throw IoError("load_uea: inconsistent channel count in " + path.string());
    for (const auto& d : s) {
      if (d.size() != len)
        throw IoError("load_uea: dataset '" + name +
                      "' has varying-length series, which are not supported");
    }
  }
  return out;
}

}  // namespace

Dataset load_uea(const std::string& name, const fs::path& root) {
  fs::path dir = root / name;
  fs::path train_path = dir / (name + "_TRAIN.ts");
  fs::path test_path = dir / (name + "_TEST.ts");
  if (!fs::exists(train_path) || !fs::exists(test_path)) {
    throw IoError("load_uea: dataset '" + name + "' not found under " + root.string());
  }
  RawTs raw_train = read_ts(train_path, name);
  RawTs raw_test = read_ts(test_path, name);

  std::set<std::string> uniq(raw_train.labels.begin(), raw_train.labels.end());
  uniq.insert(raw_test.labels.begin(), raw_test.labels.end());
  std::map<std::string, int> label_map;
  int next = 0;
  for (const auto& l : uniq) label_map[l] = next++;

  auto to_series = [&](const RawTs& raw) {
    SeriesBatch b;
    b.batch = int(raw.samples.size());
    b.channels = int(raw.samples.front().size());
    b.length = int(raw.samples.front().front().size());
    b.values.resize(std::size_t(b.batch) * b.channels * b.length);
    b.labels.resize(b.batch);
    for (int i = 0; i < b.batch; ++i) {
      for (int c = 0; c < b.channels; ++c)
        std::copy(raw.samples[i][c].begin(), raw.samples[i][c].end(), b.sample_channel(i, c));
      b.labels[i] = label_map.at(raw.labels[i]);
    }
    return b;
  };

  Dataset out;
  out.train = to_series(raw_train);
  out.test = to_series(raw_test);
  require(out.train.channels == out.test.channels && out.train.length == out.test.length,
          "load_uea: train/test shape mismatch for " + name);
  out.desc.name = name;
  out.desc.archive = Archive::kUea;
  out.desc.n_samples = out.train.batch + out.test.batch;
  out.desc.n_classes = int(label_map.size());
  out.desc.channels = out.train.channels;
  out.desc.length = out.train.length;
  out.desc.source = dir.string();
  return out;
}

// ---------------------------------------------------------------------------
// PTB-XL wfdb layout
// ---------------------------------------------------------------------------

namespace {

// Minimal CSV line splitter honoring double-quoted fields.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

// Extracts the statement codes out of a python-dict-like string such as
// "{'NORM': 100.0, 'SR': 0.0}".
std::vector<std::string> parse_scp_codes(const std::string& field) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quote = false;
  for (char ch : field) {
    if (ch == '\'') {
      if (in_quote) {
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
      }
      in_quote = !in_quote;
    } else if (in_quote) {
      cur += ch;
    }
  }
  return out;
}

struct WfdbHeader {
  std::string dat_file;
  int n_signals = 0;
  int n_samples = 0;
  std::vector<double> gain;
  std::vector<int> baseline;
};

WfdbHeader read_wfdb_header(const fs::path& hea_path) {
  std::ifstream in(hea_path);
  if (!in) throw IoError("load_ptbxl: missing header " + hea_path.string());
  WfdbHeader h;
  std::string line;
  std::getline(in, line);
  {
    auto f = split_on(trim(line), ' ');
    require(f.size() >= 4, "load_ptbxl: malformed header line in " + hea_path.string());
    h.n_signals = int(parse_value(f[1], hea_path.string()));
    h.n_samples = int(parse_value(f[3], hea_path.string()));
  }
  for (int s = 0; s < h.n_signals; ++s) {
    if (!std::getline(in, line))
      throw IoError("load_ptbxl: truncated header " + hea_path.string());
    auto f = split_on(trim(line), ' ');
    require(f.size() >= 3, "load_ptbxl: malformed signal line in " + hea_path.string());
    if (h.dat_file.empty()) h.dat_file = f[0];
    require(f[1].rfind("16", 0) == 0, "load_ptbxl: only wfdb format 16 is supported, got '" +
                                          f[1] + "' in " + hea_path.string());
    // gain spec looks like "1000.0(0)/mV"; baseline defaults to 0.
    std::string g = f[2];
    double gain = 200.0;
    int baseline = 0;
    auto paren = g.find('(');
    auto slash = g.find('/');
    if (paren != std::string::npos) {
      gain = parse_value(g.substr(0, paren), hea_path.string());
      auto close = g.find(')');
      baseline = int(parse_value(g.substr(paren + 1, close - paren - 1), hea_path.string()));
    } else if (slash != std::string::npos) {
      gain = parse_value(g.substr(0, slash), hea_path.string());
    } else {
      gain = parse_value(g, hea_path.string());
    }
    if (gain == 0.0) gain = 200.0;
    h.gain.push_back(gain);
    h.baseline.push_back(baseline);
  }
  return h;
}

void read_wfdb_record(const fs::path& base_dir, const std::string& filename_no_ext,
                      SeriesBatch& out, int row) {
  fs::path hea = base_dir / (filename_no_ext + ".hea");
  WfdbHeader h = read_wfdb_header(hea);
  fs::path dat = hea.parent_path() / h.dat_file;
  std::ifstream in(dat, std::ios::binary);
  if (!in) throw IoError("load_ptbxl: missing signal file " + dat.string());
  std::vector<std::int16_t> raw(std::size_t(h.n_signals) * h.n_samples);
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size() * sizeof(std::int16_t)));
  if (in.gcount() != std::streamsize(raw.size() * sizeof(std::int16_t)))
    throw IoError("load_ptbxl: truncated signal file " + dat.string());
  require(h.n_signals == out.channels && h.n_samples == out.length,
          "load_ptbxl: record shape mismatch in " + dat.string());
  for (int t = 0; t < h.n_samples; ++t) {
    for (int c = 0; c < h.n_signals; ++c) {
      float v = float((raw[std::size_t(t) * h.n_signals + c] - h.baseline[c]) / h.gain[c]);
      out.at(row, c, t) = v;
    }
  }
}

}  // namespace

PtbXlDataset load_ptbxl(const fs::path& root, int sampling_rate) {
  require(sampling_rate == 100, "load_ptbxl: only the 100Hz records are supported");
  fs::path db_path = root / "ptbxl_database.csv";
  fs::path scp_path = root / "scp_statements.csv";
  if (!fs::exists(db_path) || !fs::exists(scp_path))
    throw IoError("load_ptbxl: " + root.string() + " is not a PTB-XL directory");

  // Label space: every statement listed in scp_statements.csv, file order.
  std::vector<std::string> label_names;
  {
    std::ifstream in(scp_path);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      label_names.push_back(trim(split_csv(line)[0]));
    }
  }
  std::map<std::string, int> label_index;
  for (std::size_t i = 0; i < label_names.size(); ++i) label_index[label_names[i]] = int(i);

  struct Row {
    std::string filename;
    std::vector<int> labels;
    int fold = 1;
  };
  std::vector<Row> rows;
  {
    std::ifstream in(db_path);
    std::string line;
    std::getline(in, line);
    auto header = split_csv(line);
    int idx_scp = -1, idx_fold = -1, idx_file = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == "scp_codes") idx_scp = int(i);
      if (trim(header[i]) == "strat_fold") idx_fold = int(i);
      if (trim(header[i]) == "filename_lr") idx_file = int(i);
    }
    require(idx_scp >= 0 && idx_fold >= 0 && idx_file >= 0,
            "load_ptbxl: annotation table misses required columns");
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      auto f = split_csv(line);
      Row r;
      r.filename = trim(f[idx_file]);
      r.fold = int(parse_value(trim(f[idx_fold]), db_path.string()));
      for (const auto& code : parse_scp_codes(f[idx_scp])) {
        auto it = label_index.find(code);
        if (it != label_index.end()) r.labels.push_back(it->second);
      }
      rows.push_back(std::move(r));
    }
  }
  require(!rows.empty(), "load_ptbxl: empty annotation table");

  // Probe the first record for shape.
  std::vector<std::string> missing;
  for (const auto& r : rows)
    if (!fs::exists(root / (r.filename + ".hea"))) missing.push_back(r.filename);
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 8); ++i)
      list += (i ? ", " : "") + missing[i];
    throw IoError("load_ptbxl: " + std::to_string(missing.size()) + " missing records: " + list);
  }
  WfdbHeader probe = read_wfdb_header(root / (rows.front().filename + ".hea"));

  PtbXlDataset out;
  out.label_names = label_names;
  out.desc.name = "PTBXL";
  out.desc.archive = Archive::kPtbXl;
  out.desc.n_samples = int(rows.size());
  out.desc.n_labels = int(label_names.size());
  out.desc.channels = probe.n_signals;
  out.desc.length = probe.n_samples;
  out.desc.source = root.string();

  std::vector<std::vector<int>> fold_rows(10);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].fold >= 1 && rows[i].fold <= 10, "load_ptbxl: strat_fold out of range");
    fold_rows[rows[i].fold - 1].push_back(int(i));
  }
  out.folds.resize(10);
  for (int f = 0; f < 10; ++f) {
    SeriesBatch& batch = out.folds[f];
    batch = SeriesBatch::zeros(int(fold_rows[f].size()), probe.n_signals, probe.n_samples);
    batch.multilabels.setZero(Eigen::Index(fold_rows[f].size()),
                              Eigen::Index(label_names.size()));
    for (std::size_t k = 0; k < fold_rows[f].size(); ++k) {
      const Row& r = rows[fold_rows[f][k]];
      read_wfdb_record(root, r.filename, batch, int(k));
      for (int lbl : r.labels) batch.multilabels(Eigen::Index(k), lbl) = 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Preprocessing and splits
// ---------------------------------------------------------------------------

Preprocess preprocess_from_string(const std::string& s) {
  if (s == "znorm_arcsinh") return Preprocess::kZnormArcsinh;
  if (s == "znorm") return Preprocess::kZnorm;
  if (s == "none") return Preprocess::kNone;
  throw ContractError("unknown preprocess scheme '" + s + "'");
}

const char* to_string(Preprocess p) {
  switch (p) {
    case Preprocess::kZnormArcsinh: return "znorm_arcsinh";
    case Preprocess::kZnorm: return "znorm";
    case Preprocess::kNone: return "none";
  }
  return "?";
}

SeriesBatch preprocess(const SeriesBatch& x, Preprocess scheme) {
  if (scheme == Preprocess::kNone) return x;
  SeriesBatch out = x;
  for (int b = 0; b < x.batch; ++b) {
    for (int c = 0; c < x.channels; ++c) {
      float* v = out.sample_channel(b, c);
      double mean = 0.0;
      for (int l = 0; l < x.length; ++l) mean += v[l];
      mean /= x.length;
      double var = 0.0;
      for (int l = 0; l < x.length; ++l) var += (v[l] - mean) * (v[l] - mean);
      double sd = std::sqrt(var / x.length);
      if (sd < 1e-12) {
        for (int l = 0; l < x.length; ++l) v[l] = 0.0f;
        continue;
      }
      for (int l = 0; l < x.length; ++l) {
        double z = (v[l] - mean) / sd;
        v[l] = float(scheme == Preprocess::kZnormArcsinh ? std::asinh(z) : z);
      }
    }
  }
  return out;
}

SeriesBatch concat(const SeriesBatch& a, const SeriesBatch& b) {
  require(a.channels == b.channels && a.length == b.length, "concat: shape mismatch");
  require(a.multilabel() == b.multilabel(), "concat: label kind mismatch");
  SeriesBatch out;
  out.batch = a.batch + b.batch;
  out.channels = a.channels;
  out.length = a.length;
  out.values = a.values;
  out.values.insert(out.values.end(), b.values.begin(), b.values.end());
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  if (a.multilabel()) {
    out.multilabels.resize(out.batch, a.multilabels.cols());
    out.multilabels.topRows(a.batch) = a.multilabels;
    out.multilabels.bottomRows(b.batch) = b.multilabels;
  }
  return out;
}

SplitIndices stratified_split_80_20(const std::vector<int>& labels, std::uint64_t seed) {
  require(!labels.empty(), "stratified_split: empty label vector");
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(int(i));
  SplitIndices out;
  for (auto& [cls, idx] : by_class) {
    std::mt19937_64 gen(derive_seed(seed, {0x5u, std::uint64_t(cls)}));
    std::shuffle(idx.begin(), idx.end(), gen);
    auto n_train = std::size_t(std::lround(0.8 * double(idx.size())));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (i < n_train ? out.train : out.test).push_back(idx[i]);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::optional<std::vector<int>> stratified_subset(const std::vector<int>& labels,
                                                  const std::vector<int>& pool, double fraction,
                                                  std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, "stratified_subset: bad fraction");
  if (fraction >= 1.0) return pool;
  std::map<int, std::vector<int>> by_class;
  for (int i : pool) by_class[labels[i]].push_back(i);
  std::vector<int> out;
  for (auto& [cls, idx] : by_class) {
    auto take = std::size_t(std::lround(fraction * double(idx.size())));
    if (take == 0) {
      warnings::emit("stratified_subset: class " + std::to_string(cls) +
                     " has no samples at fraction " + std::to_string(fraction) +
                     "; dataset skipped");
      return std::nullopt;
    }
    std::mt19937_64 gen(derive_seed(seed, {0x6u, std::uint64_t(cls)}));
    std::shuffle(idx.begin(), idx.end(), gen);
    out.insert(out.end(), idx.begin(), idx.begin() + take);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string dataset_root_from_env() {
  const char* v = std::getenv("VIBCREG_DATASET_ROOT");
  return v ? std::string(v) : std::string();
}

}  // namespace vibcreg::data
