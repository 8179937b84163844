// augment.hpp -- stochastic view generation: random crop, random amplitude
// resize (uniform and gaussian variants), random vertical shift, and the
// two-crop schedule. All draws come from an explicit rng handle.
#pragma once

#include "vibcreg/common.hpp"
#include "vibcreg/series.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vibcreg::aug {

enum class AmplitudeMode { kUniformP1, kGaussianP2 };

struct AugmentConfig {
  int crop_length = 0;  // 0 disables cropping
  float alpha_rar = 0.3f;
  float beta_rvs = 0.5f;
  AmplitudeMode amplitude_mode = AmplitudeMode::kUniformP1;
  // Center of the gaussian multiplier. The printed form of the part-2
  // amplitude resize is N(0, alpha); this field documents the override for
  // a multiplier centered elsewhere (e.g. 1.0).
  float gaussian_center = 0.0f;
  bool enable_crop = true;
  bool enable_amplitude = true;
  bool enable_shift = true;
};

// Active augmentation sets per evaluation phase.
AugmentConfig part1_pretrain_config(int crop_length);
AugmentConfig part1_linear_config();
AugmentConfig part2_pretrain_config(float gaussian_center = 0.0f);

// Per-sample uniformly chosen contiguous window of exactly crop_length.
SeriesBatch random_crop(const SeriesBatch& x, int crop_length, Rng& rng);

// One multiplier per sample, shared across channels and time.
void random_amplitude_resize(SeriesBatch& x, const AugmentConfig& cfg, Rng& rng);

// Per-channel std of the pre-augmentation series, indexed [b * channels + c].
std::vector<float> per_channel_std(const SeriesBatch& x);

// Adds one scalar per channel drawn from U(-beta*std, beta*std) where std is
// the pre-augmentation per-channel std handed in by the caller.
void random_vertical_shift(SeriesBatch& x, const std::vector<float>& ref_std, float beta,
                           Rng& rng);

// Full view pipeline for one config: reference std -> crop -> amplitude ->
// vertical shift, honoring the enabled set.
SeriesBatch make_view(const SeriesBatch& x, const AugmentConfig& cfg, Rng& rng);

// Part-1 crop sizes for the bundled UCR subset (and the PTB-XL window).
// Unlisted datasets return nullopt: they fall back to the two-crop schedule.
std::optional<int> part1_crop_size(const std::string& dataset);
const std::vector<std::pair<std::string, int>>& part1_crop_table();

// Two-crop schedule: for each ratio in {0.5, 1.0} generate a view pair at
// that crop length and hand it to step_fn. min_length guards encoders that
// cannot digest the half-length crop.
struct TwoCropStats {
  int invocations = 0;
  std::vector<double> ratios;
};
TwoCropStats two_crop_schedule(
    const SeriesBatch& x, const AugmentConfig& cfg, int min_length,
    const std::string& dataset_name, Rng& rng,
    const std::function<void(const SeriesBatch&, const SeriesBatch&, double)>& step_fn);

}  // namespace vibcreg::aug
