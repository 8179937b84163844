#include "vibcreg/fixtures.hpp"

#include "vibcreg/common.hpp"
#include "vibcreg/series.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <algorithm>
#include <array>
#include <random>

namespace vibcreg::fixtures {

namespace fs = std::filesystem;

namespace {

struct LabeledSet {
  SeriesBatch data;          // values only, labels carried separately
  std::vector<int> labels;   // raw on-disk labels
};

void add_gauss_bump(float* x, int len, double center, double width, double amp) {
  for (int t = 0; t < len; ++t) {
    double d = (t - center) / width;
    x[t] += float(amp * std::exp(-0.5 * d * d));
  }
}

// ---------------------------------------------------------------------------
// TwoPatterns: two step events (up-down / down-up transitions) embedded in
// noise; the class is the ordered pair of event types.
// ---------------------------------------------------------------------------

LabeledSet gen_two_patterns(int count, const std::vector<int>& per_class, Rng& rng) {
  const int length = 128, event_half = 8;
  const double noise = 0.35, amp = 1.0;
  LabeledSet out;
  out.data = SeriesBatch::zeros(count, 1, length);
  out.labels.reserve(count);
  int row = 0;
  for (int cls = 0; cls < 4; ++cls) {
    for (int i = 0; i < per_class[cls]; ++i, ++row) {
      float* x = out.data.sample_channel(row, 0);
      for (int t = 0; t < length; ++t) x[t] = rng.normal(0.0f, float(noise));
      const bool first_down = cls & 2, second_down = cls & 1;
      int p1 = int(rng.uniform_int(4, 44));
      int p2 = int(rng.uniform_int(68, 108));
      auto put_event = [&](int p, bool down) {
        for (int t = 0; t < event_half; ++t) {
          x[p + t] += float(down ? amp : -amp);
          x[p + event_half + t] += float(down ? -amp : amp);
        }
      };
      put_event(p1, first_down);
      put_event(p2, second_down);
      out.labels.push_back(cls + 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ECG5000: one heartbeat cycle per sample, five morphology classes with the
// archive's heavy class imbalance.
// ---------------------------------------------------------------------------

LabeledSet gen_ecg5000(const std::vector<int>& per_class, Rng& rng) {
  const int length = 140;
  const double noise = 0.12;
  int count = 0;
  for (int c : per_class) count += c;
  LabeledSet out;
  out.data = SeriesBatch::zeros(count, 1, length);
  int row = 0;
  for (int cls = 0; cls < int(per_class.size()); ++cls) {
    for (int i = 0; i < per_class[cls]; ++i, ++row) {
      float* x = out.data.sample_channel(row, 0);
      double shift = rng.uniform(-4.0f, 4.0f);
      double scale = rng.uniform(0.85f, 1.15f);
      for (int t = 0; t < length; ++t) x[t] = rng.normal(0.0f, float(noise));
      switch (cls) {
        case 0:  // normal beat
          add_gauss_bump(x, length, 20 + shift, 4, 0.25 * scale);
          add_gauss_bump(x, length, 52 + shift, 1.6, -0.45 * scale);
          add_gauss_bump(x, length, 55 + shift, 2.0, 2.2 * scale);
          add_gauss_bump(x, length, 59 + shift, 1.8, -0.35 * scale);
          add_gauss_bump(x, length, 95 + shift, 9, 0.55 * scale);
          break;
        case 1:  // r-on-t like: tall R, inverted T
          add_gauss_bump(x, length, 20 + shift, 4, 0.2 * scale);
          add_gauss_bump(x, length, 55 + shift, 2.4, 1.7 * scale);
          add_gauss_bump(x, length, 92 + shift, 10, -0.75 * scale);
          break;
        case 2:  // premature ventricular: early, wide complex
          add_gauss_bump(x, length, 40 + shift, 6.0, 1.9 * scale);
          add_gauss_bump(x, length, 50 + shift, 7.0, -0.9 * scale);
          add_gauss_bump(x, length, 98 + shift, 9, 0.35 * scale);
          break;
        case 3:  // wide negative deflection
          add_gauss_bump(x, length, 58 + shift, 8.0, -1.8 * scale);
          add_gauss_bump(x, length, 30 + shift, 5.0, 0.4 * scale);
          break;
        default:  // low-amplitude erratic
          add_gauss_bump(x, length, 50 + shift, 3.0, 0.7 * scale);
          add_gauss_bump(x, length, 75 + shift, 4.0, -0.5 * scale);
          add_gauss_bump(x, length, 105 + shift, 5.0, 0.5 * scale);
          break;
      }
      out.labels.push_back(cls + 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Wafer: process-control traces; abnormal traces carry spike bursts, level
// shifts or plateau oscillations.
// ---------------------------------------------------------------------------

LabeledSet gen_wafer(int n_normal, int n_abnormal, Rng& rng) {
  const int length = 152;
  const double noise = 0.08;
  LabeledSet out;
  out.data = SeriesBatch::zeros(n_normal + n_abnormal, 1, length);
  auto base_trace = [&](float* x) {
    double rise = 25 + rng.uniform(-4.0f, 4.0f);
    double fall = 120 + rng.uniform(-4.0f, 4.0f);
    double level = 1.0 + rng.uniform(-0.08f, 0.08f);
    double wig_amp = 0.06 + rng.uniform(0.0f, 0.04f);
    double wig_freq = 0.25 + rng.uniform(-0.05f, 0.05f);
    double phase = rng.uniform(0.0f, 6.28f);
    for (int t = 0; t < length; ++t) {
      double up = 1.0 / (1.0 + std::exp(-(t - rise) / 3.0));
      double down = 1.0 / (1.0 + std::exp((t - fall) / 3.0));
      x[t] += float(level * up * down + wig_amp * std::sin(wig_freq * t + phase) +
                    rng.normal(0.0f, float(noise)));
    }
  };
  int row = 0;
  for (int i = 0; i < n_normal; ++i, ++row) {
    base_trace(out.data.sample_channel(row, 0));
    out.labels.push_back(1);
  }
  for (int i = 0; i < n_abnormal; ++i, ++row) {
    float* x = out.data.sample_channel(row, 0);
    base_trace(x);
    int kind = int(rng.uniform_int(0, 2));
    int pos = int(rng.uniform_int(35, 100));
    if (kind == 0) {
      int n_spikes = int(rng.uniform_int(3, 8));
      for (int s = 0; s < n_spikes; ++s) {
        int p = pos + int(rng.uniform_int(0, 14));
        if (p < length) x[p] += rng.uniform(0.0f, 1.0f) < 0.5f ? -1.4f : 1.4f;
      }
    } else if (kind == 1) {
      float delta = rng.uniform(0.0f, 1.0f) < 0.5f ? -0.55f : 0.55f;
      for (int t = pos; t < std::min(length, pos + 34); ++t) x[t] += delta;
    } else {
      for (int t = pos; t < std::min(length, pos + 40); ++t)
        x[t] += float(0.5 * std::sin(1.1 * (t - pos)));
    }
    out.labels.push_back(-1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ShapesAll: sixty smooth contour prototypes (random low-order Fourier
// series), samples are mildly shifted, scaled and noised copies.
// ---------------------------------------------------------------------------

LabeledSet gen_shapes_all(int per_class_count, Rng& rng, std::uint64_t proto_seed) {
  const int length = 512, n_classes = 60, harmonics = 8;
  const double noise = 0.12;
  std::vector<std::vector<double>> proto(n_classes, std::vector<double>(length, 0.0));
  Rng proto_rng(proto_seed);
  for (int c = 0; c < n_classes; ++c) {
    double sq = 0.0;
    for (int h = 1; h <= harmonics; ++h) {
      double a = proto_rng.normal(0.0f, 1.0f) / h;
      double b = proto_rng.normal(0.0f, 1.0f) / h;
      for (int t = 0; t < length; ++t) {
        double w = 2.0 * M_PI * h * t / length;
        proto[c][t] += a * std::cos(w) + b * std::sin(w);
      }
    }
    for (int t = 0; t < length; ++t) sq += proto[c][t] * proto[c][t];
    double sd = std::sqrt(sq / length);
    for (int t = 0; t < length; ++t) proto[c][t] /= sd;
  }
  LabeledSet out;
  out.data = SeriesBatch::zeros(per_class_count * n_classes, 1, length);
  int row = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (int i = 0; i < per_class_count; ++i, ++row) {
      float* x = out.data.sample_channel(row, 0);
      int shift = int(rng.uniform_int(-16, 16));
      double scale = rng.uniform(0.9f, 1.1f);
      for (int t = 0; t < length; ++t) {
        int src = ((t + shift) % length + length) % length;
        x[t] = float(scale * proto[c][src] + rng.normal(0.0f, float(noise)));
      }
      out.labels.push_back(c + 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// GunPoint: single smooth draw motion vs draw with a pre-shoulder.
// ---------------------------------------------------------------------------

LabeledSet gen_gun_point(const std::vector<int>& per_class, Rng& rng) {
  const int length = 150;
  const double noise = 0.05;
  int count = per_class[0] + per_class[1];
  LabeledSet out;
  out.data = SeriesBatch::zeros(count, 1, length);
  int row = 0;
  for (int cls = 0; cls < 2; ++cls) {
    for (int i = 0; i < per_class[cls]; ++i, ++row) {
      float* x = out.data.sample_channel(row, 0);
      double center = 75 + rng.uniform(-5.0f, 5.0f);
      double width = 14 + rng.uniform(-2.0f, 2.0f);
      double amp = 1.0 + rng.uniform(-0.1f, 0.1f);
      for (int t = 0; t < length; ++t) x[t] = rng.normal(0.0f, float(noise));
      add_gauss_bump(x, length, center, width, amp);
      if (cls == 1) {
        add_gauss_bump(x, length, center - 30, 6.0, 0.55 * amp);
        add_gauss_bump(x, length, center + 24, 8.0, -0.25 * amp);
      }
      out.labels.push_back(cls + 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Crop: 24 seasonal reflectance-style profiles.
// ---------------------------------------------------------------------------

LabeledSet gen_crop(int per_class_train_test, Rng& rng, std::uint64_t proto_seed) {
  const int length = 46, n_classes = 24;
  const double noise = 0.15;
  std::vector<std::array<double, 6>> coef(n_classes);
  Rng proto_rng(proto_seed);
  for (int c = 0; c < n_classes; ++c)
    for (auto& v : coef[c]) v = proto_rng.normal(0.0f, 0.8f);
  LabeledSet out;
  out.data = SeriesBatch::zeros(per_class_train_test * n_classes, 1, length);
  int row = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (int i = 0; i < per_class_train_test; ++i, ++row) {
      float* x = out.data.sample_channel(row, 0);
      double jitter = rng.uniform(-1.5f, 1.5f);
      for (int t = 0; t < length; ++t) {
        double w = 2.0 * M_PI * (t + jitter) / length;
        double v = coef[c][0] * std::cos(w) + coef[c][1] * std::sin(w) +
                   coef[c][2] * std::cos(2 * w) + coef[c][3] * std::sin(2 * w) +
                   coef[c][4] * std::cos(3 * w) + coef[c][5] * std::sin(3 * w);
        x[t] = float(v + rng.normal(0.0f, float(noise)));
      }
      out.labels.push_back(c + 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// BasicMotions (UEA): four activities over six channels.
// ---------------------------------------------------------------------------

LabeledSet gen_basic_motions(int per_class, Rng& rng) {
  const int length = 100, channels = 6, n_classes = 4;
  const double noise = 0.2;
  LabeledSet out;
  out.data = SeriesBatch::zeros(per_class * n_classes, channels, length);
  int row = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (int i = 0; i < per_class; ++i, ++row) {
      double phase = rng.uniform(0.0f, 6.28f);
      for (int ch = 0; ch < channels; ++ch) {
        float* x = out.data.sample_channel(row, ch);
        double freq = 0.05 + 0.05 * c + 0.01 * ch;
        double amp = (c == 0 ? 0.3 : 1.0 + 0.3 * c) * (1.0 + 0.1 * ch);
        for (int t = 0; t < length; ++t)
          x[t] = float(amp * std::sin(2.0 * M_PI * freq * t + phase) +
                       rng.normal(0.0f, float(noise)));
      }
      out.labels.push_back(c + 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

void write_ucr_tsv(const fs::path& path, const LabeledSet& set) {
  std::ofstream out(path);
  require(bool(out), "fixtures: cannot write " + path.string());
  out.precision(6);
  for (int i = 0; i < set.data.batch; ++i) {
    out << set.labels[i];
    const float* x = set.data.sample_channel(i, 0);
    for (int t = 0; t < set.data.length; ++t) out << '\t' << x[t];
    out << '\n';
  }
}

void write_uea_ts(const fs::path& path, const std::string& name, const LabeledSet& set,
                  int n_classes) {
  std::ofstream out(path);
  require(bool(out), "fixtures: cannot write " + path.string());
  out.precision(6);
  out << "@problemName " << name << "\n@timeStamps false\n@missing false\n@univariate false\n"
      << "@dimensions " << set.data.channels << "\n@equalLength true\n@seriesLength "
      << set.data.length << "\n@classLabel true";
  for (int c = 1; c <= n_classes; ++c) out << ' ' << c;
  out << "\n@data\n";
  for (int i = 0; i < set.data.batch; ++i) {
    for (int c = 0; c < set.data.channels; ++c) {
      if (c) out << ':';
      const float* x = set.data.sample_channel(i, c);
      for (int t = 0; t < set.data.length; ++t) {
        if (t) out << ',';
        out << x[t];
      }
    }
    out << ':' << set.labels[i] << '\n';
  }
}

// Interleaves order-preserving class blocks into a shuffled row order so the
// on-disk files do not enumerate classes contiguously.
LabeledSet shuffled(const LabeledSet& set, Rng& rng) {
  std::vector<int> order(set.data.batch);
  for (int i = 0; i < set.data.batch; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng.engine());
  LabeledSet out;
  out.data = set.data.select(order);
  out.labels.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) out.labels[i] = set.labels[order[i]];
  return out;
}

void write_ucr_pair(const fs::path& root, const std::string& name, const LabeledSet& train,
                    const LabeledSet& test) {
  fs::create_directories(root / name);
  write_ucr_tsv(root / name / (name + "_TRAIN.tsv"), train);
  write_ucr_tsv(root / name / (name + "_TEST.tsv"), test);
}

// PTB-XL mini: wfdb format-16 records plus annotation tables.
void write_ptbxl(const fs::path& root, std::uint64_t seed) {
  const int n_records = 240, channels = 12, length = 1000, n_labels = 71;
  const double gain = 1000.0;
  Rng rng(derive_seed(seed, {0xECu}));
  fs::create_directories(root / "ptbxl" / "records100" / "00000");

  std::ofstream scp(root / "ptbxl" / "scp_statements.csv");
  scp << "code,description,diagnostic,form,rhythm\n";
  for (int l = 0; l < n_labels; ++l)
    scp << "L" << (l < 10 ? "0" : "") << l << ",synthetic statement " << l << ",1,0,0\n";
  scp.close();

  std::ofstream db(root / "ptbxl" / "ptbxl_database.csv");
  db << "ecg_id,patient_id,scp_codes,strat_fold,filename_lr,filename_hr\n";

  for (int r = 0; r < n_records; ++r) {
    char base[32];
    std::snprintf(base, sizeof(base), "%05d_lr", r + 1);
    std::string rel = std::string("records100/00000/") + base;

    // Pseudo-ECG: periodic sharp R spikes + slower waves; lead-dependent mix.
    int n_codes = 1 + int(rng.uniform_int(0, 2));
    std::vector<int> codes;
    for (int k = 0; k < n_codes; ++k) {
      // Skew label frequencies toward the low indices.
      int c = std::min<int>(n_labels - 1, int(std::floor(std::abs(rng.normal(0.0f, 12.0f)))));
      codes.push_back(c);
    }
    double hr = 60.0 + rng.uniform(0.0f, 40.0f);
    double period = 100.0 * 60.0 / hr;
    double phase = rng.uniform(0.0f, float(period));
    std::vector<std::int16_t> raw(std::size_t(channels) * length);
    for (int t = 0; t < length; ++t) {
      double beat = std::fmod(t + phase, period) / period;
      double base_wave = 1.2 * std::exp(-0.5 * std::pow((beat - 0.5) / 0.02, 2)) +
                         0.25 * std::exp(-0.5 * std::pow((beat - 0.7) / 0.06, 2)) +
                         0.1 * std::sin(2 * M_PI * beat);
      for (int c = 0; c < channels; ++c) {
        double lead_scale = 0.4 + 0.08 * c;
        double label_mod = 0.0;
        for (int code : codes) label_mod += 0.04 * std::sin(2 * M_PI * (code + 1) * t / 1000.0);
        double v = lead_scale * base_wave + label_mod + rng.normal(0.0f, 0.02f);
        raw[std::size_t(t) * channels + c] = std::int16_t(std::lround(v * gain));
      }
    }
    std::ofstream dat(root / "ptbxl" / (rel + ".dat"), std::ios::binary);
    dat.write(reinterpret_cast<const char*>(raw.data()),
              std::streamsize(raw.size() * sizeof(std::int16_t)));
    dat.close();
    std::ofstream hea(root / "ptbxl" / (rel + ".hea"));
    hea << base << ' ' << channels << " 100 " << length << '\n';
    for (int c = 0; c < channels; ++c)
      hea << base << ".dat 16 " << gain << "(0)/mV 16 0 0 0 0 ch" << c << '\n';
    hea.close();

    db << (r + 1) << ',' << (10000 + r) << ",\"{";
    for (std::size_t k = 0; k < codes.size(); ++k) {
      db << (k ? ", " : "") << '\'' << 'L' << (codes[k] < 10 ? "0" : "") << codes[k]
         << "': 100.0";
    }
    db << "}\"," << (r % 10 + 1) << ',' << rel << ',' << rel << '\n';
  }
}

}  // namespace

std::vector<std::string> available_fixtures() {
  return {"TwoPatterns", "ECG5000", "Wafer", "ShapesAll", "GunPoint",
          "Crop",        "BasicMotions", "ptbxl"};
}

void make_fixture(const std::string& name, const fs::path& root, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {std::hash<std::string>{}(name)}));
  if (name == "TwoPatterns") {
    LabeledSet train = gen_two_patterns(1000, {250, 250, 250, 250}, rng);
    LabeledSet test = gen_two_patterns(4000, {1000, 1000, 1000, 1000}, rng);
    write_ucr_pair(root, name, shuffled(train, rng), shuffled(test, rng));
  } else if (name == "ECG5000") {
    LabeledSet train = gen_ecg5000({292, 177, 19, 10, 2}, rng);
    LabeledSet test = gen_ecg5000({2627, 1590, 175, 86, 22}, rng);
    write_ucr_pair(root, name, shuffled(train, rng), shuffled(test, rng));
  } else if (name == "Wafer") {
    LabeledSet train = gen_wafer(903, 97, rng);
    LabeledSet test = gen_wafer(5499, 665, rng);
    write_ucr_pair(root, name, shuffled(train, rng), shuffled(test, rng));
  } else if (name == "ShapesAll") {
    std::uint64_t proto_seed = derive_seed(seed, {0x5A11u});
    LabeledSet train = gen_shapes_all(10, rng, proto_seed);
    LabeledSet test = gen_shapes_all(10, rng, proto_seed);
    write_ucr_pair(root, name, shuffled(train, rng), shuffled(test, rng));
  } else if (name == "GunPoint") {
    LabeledSet train = gen_gun_point({25, 25}, rng);
    LabeledSet test = gen_gun_point({75, 75}, rng);
    write_ucr_pair(root, name, shuffled(train, rng), shuffled(test, rng));
  } else if (name == "Crop") {
    std::uint64_t proto_seed = derive_seed(seed, {0xC407u});
    LabeledSet train = gen_crop(300, rng, proto_seed);
    LabeledSet test = gen_crop(700, rng, proto_seed);
    write_ucr_pair(root, name, shuffled(train, rng), shuffled(test, rng));
  } else if (name == "BasicMotions") {
    LabeledSet train = gen_basic_motions(10, rng);
    LabeledSet test = gen_basic_motions(10, rng);
    fs::create_directories(root / name);
    write_uea_ts(root / name / (name + "_TRAIN.ts"), name, shuffled(train, rng), 4);
    write_uea_ts(root / name / (name + "_TEST.ts"), name, shuffled(test, rng), 4);
  } else if (name == "ptbxl") {
    write_ptbxl(root, seed);
  } else {
    throw ContractError("make_fixture: unknown fixture '" + name + "'");
  }
}

void make_all(const fs::path& root, std::uint64_t seed) {
  for (const auto& name : available_fixtures()) make_fixture(name, root, seed);
}

}  // namespace vibcreg::fixtures
