// optim.hpp -- AdamW with decoupled weight decay, plus the cosine schedule.
#pragma once

#include "vibcreg/nn/layers.hpp"

#include <cmath>
#include <vector>

namespace vibcreg::nn {

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One optimizer instance may manage several parameter groups with distinct
// learning-rate scales (fine-tuning uses encoder lr != classifier lr).
class AdamW {
 public:
  explicit AdamW(const AdamWConfig& cfg) : cfg_(cfg) {}

  // lr_scale multiplies the schedule lr for every param in the group.
  void add_group(const std::vector<Param*>& params, double lr_scale = 1.0);

  void zero_grad();
  void step(double lr);

  std::int64_t step_count() const { return step_count_; }
  // Optimizer state exposure for checkpointing.
  void collect_state(StateDict& sd);
  void set_step_count(std::int64_t t) { step_count_ = t; }

 private:
  struct Slot {
    Param* param;
    double lr_scale;
    MatF m, v;
  };
  AdamWConfig cfg_;
  std::vector<Slot> slots_;
  std::int64_t step_count_ = 0;
  std::vector<MatF> step_storage_;  // serialized step count staging
};

inline double cosine_lr(double base_lr, int epoch, int total_epochs) {
  if (total_epochs <= 0) return base_lr;
  double t = double(epoch) / double(total_epochs);
  return base_lr * 0.5 * (1.0 + std::cos(M_PI * t));
}

}  // namespace vibcreg::nn
