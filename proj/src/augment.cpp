#include "vibcreg/augment.hpp"

#include <cmath>

namespace vibcreg::aug {

AugmentConfig part1_pretrain_config(int crop_length) {
  AugmentConfig cfg;
  cfg.crop_length = crop_length;
  cfg.alpha_rar = 0.3f;
  cfg.beta_rvs = 0.5f;
  cfg.amplitude_mode = AmplitudeMode::kUniformP1;
  return cfg;
}

AugmentConfig part1_linear_config() {
  AugmentConfig cfg;
  cfg.enable_crop = false;
  cfg.crop_length = 0;
  cfg.alpha_rar = 0.3f;
  cfg.beta_rvs = 0.5f;
  cfg.amplitude_mode = AmplitudeMode::kUniformP1;
  return cfg;
}

AugmentConfig part2_pretrain_config(float gaussian_center) {
  AugmentConfig cfg;
  cfg.alpha_rar = 0.1f;
  cfg.amplitude_mode = AmplitudeMode::kGaussianP2;
  cfg.gaussian_center = gaussian_center;
  cfg.enable_shift = false;
  return cfg;
}

SeriesBatch random_crop(const SeriesBatch& x, int crop_length, Rng& rng) {
  require(crop_length >= 1, "random_crop: crop length must be positive");
  require(crop_length <= x.length, "random_crop: crop length " + std::to_string(crop_length) +
                                       " exceeds series length " + std::to_string(x.length));
  SeriesBatch out;
  out.batch = x.batch;
  out.channels = x.channels;
  out.length = crop_length;
  out.values.resize(std::size_t(x.batch) * x.channels * crop_length);
  out.labels = x.labels;
  out.multilabels = x.multilabels;
  const int max_start = x.length - crop_length;
  for (int b = 0; b < x.batch; ++b) {
    int start = max_start == 0 ? 0 : int(rng.uniform_int(0, max_start));
    for (int c = 0; c < x.channels; ++c) {
      const float* src = x.sample_channel(b, c) + start;
      std::copy(src, src + crop_length, out.sample_channel(b, c));
    }
  }
  return out;
}

void random_amplitude_resize(SeriesBatch& x, const AugmentConfig& cfg, Rng& rng) {
  for (int b = 0; b < x.batch; ++b) {
    float m = cfg.amplitude_mode == AmplitudeMode::kUniformP1
                  ? rng.uniform(1.0f - cfg.alpha_rar, 1.0f + cfg.alpha_rar)
                  : rng.normal(cfg.gaussian_center, cfg.alpha_rar);
    float* base = x.sample_channel(b, 0);
    const std::size_t n = std::size_t(x.channels) * x.length;
    for (std::size_t i = 0; i < n; ++i) base[i] *= m;
  }
}

std::vector<float> per_channel_std(const SeriesBatch& x) {
  std::vector<float> out(std::size_t(x.batch) * x.channels);
  for (int b = 0; b < x.batch; ++b) {
    for (int c = 0; c < x.channels; ++c) {
      const float* src = x.sample_channel(b, c);
      double mean = 0.0;
      for (int l = 0; l < x.length; ++l) mean += src[l];
      mean /= x.length;
      double var = 0.0;
      for (int l = 0; l < x.length; ++l) var += (src[l] - mean) * (src[l] - mean);
      out[std::size_t(b) * x.channels + c] = float(std::sqrt(var / x.length));
    }
  }
  return out;
}

void random_vertical_shift(SeriesBatch& x, const std::vector<float>& ref_std, float beta,
                           Rng& rng) {
  require(ref_std.size() == std::size_t(x.batch) * x.channels,
          "random_vertical_shift: reference std size mismatch");
  for (int b = 0; b < x.batch; ++b) {
    for (int c = 0; c < x.channels; ++c) {
      float alpha = beta * ref_std[std::size_t(b) * x.channels + c];
      float shift = alpha > 0.0f ? rng.uniform(-alpha, alpha) : 0.0f;
      float* dst = x.sample_channel(b, c);
      for (int l = 0; l < x.length; ++l) dst[l] += shift;
    }
  }
}

SeriesBatch make_view(const SeriesBatch& x, const AugmentConfig& cfg, Rng& rng) {
  std::vector<float> ref_std;
  if (cfg.enable_shift) ref_std = per_channel_std(x);
  SeriesBatch view = cfg.enable_crop && cfg.crop_length > 0 && cfg.crop_length < x.length
                         ? random_crop(x, cfg.crop_length, rng)
                         : x;
  if (cfg.enable_amplitude) random_amplitude_resize(view, cfg, rng);
  if (cfg.enable_shift) random_vertical_shift(view, ref_std, cfg.beta_rvs, rng);
  return view;
}

const std::vector<std::pair<std::string, int>>& part1_crop_table() {
  static const std::vector<std::pair<std::string, int>> table = {
      {"Crop", 46},
      {"ElectricDevices", 48},
      {"StarLightCurves", 512},
      {"Wafer", 152},
      {"ECG5000", 70},
      {"TwoPatterns", 64},
      {"FordA", 250},
      {"UWaveGestureLibraryAll", 473},
      {"FordB", 250},
      {"ChlorineConcentration", 166},
      {"ShapesAll", 256},
      {"FiftyWords", 135},
      {"NonInvasiveFetalECGThorax1", 750},
      {"Phoneme", 512},
      {"WordSynonyms", 135},
      {"PTBXL", 250},
  };
  return table;
}

std::optional<int> part1_crop_size(const std::string& dataset) {
  for (const auto& [name, crop] : part1_crop_table()) {
    if (name == dataset) return crop;
  }
  return std::nullopt;
}

TwoCropStats two_crop_schedule(
    const SeriesBatch& x, const AugmentConfig& cfg, int min_length,
    const std::string& dataset_name, Rng& rng,
    const std::function<void(const SeriesBatch&, const SeriesBatch&, double)>& step_fn) {
  require(x.length >= 2, "two_crop_schedule: series too short");
  TwoCropStats stats;
  for (double ratio : {0.5, 1.0}) {
    int crop = int(std::lround(ratio * x.length));
    if (crop < min_length) {
      throw ContractError("two_crop_schedule: dataset '" + dataset_name + "' crop length " +
                          std::to_string(crop) + " at ratio " + std::to_string(ratio) +
                          " is below the encoder minimum of " + std::to_string(min_length));
    }
    AugmentConfig view_cfg = cfg;
    view_cfg.enable_crop = true;
    view_cfg.crop_length = crop;
    SeriesBatch a = make_view(x, view_cfg, rng);
    SeriesBatch b = make_view(x, view_cfg, rng);
    step_fn(a, b, ratio);
    stats.invocations += 1;
    stats.ratios.push_back(ratio);
  }
  return stats;
}

}  // namespace vibcreg::aug
