// heads.hpp -- projector / predictor / discriminator assemblies sitting on
// top of the encoder representation.
#pragma once

#include "vibcreg/nn/layers.hpp"

#include <memory>
#include <string>
#include <vector>

namespace vibcreg::nn {

enum class HeadStyle { kVibcreg, kVicreg, kVicregIterN, kVicregNcm };

inline bool head_ends_with_iternorm(HeadStyle s) {
  return s == HeadStyle::kVibcreg || s == HeadStyle::kVicregIterN;
}

const char* to_string(HeadStyle s);

struct ProjectorConfig {
  int input_dim = 256;
  int hidden_dim = 4096;
  int output_dim = 4096;
  HeadStyle style = HeadStyle::kVibcreg;
  whitening::IterNormConfig iternorm;
};

// Type-erased feat-land op so heads can be assembled declaratively.
class FeatOp {
 public:
  virtual ~FeatOp() = default;
  virtual MatF forward(const MatF& x, bool training, Rng* rng) = 0;
  virtual MatF backward(const MatF& gy) = 0;
  virtual void collect(std::vector<Param*>&) {}
  virtual void collect_state(StateDict&) {}
};

class MlpHead {
 public:
  MlpHead() = default;

  void push(std::unique_ptr<FeatOp> op) { ops_.push_back(std::move(op)); }
  MatF forward(const MatF& x, bool training, Rng* rng = nullptr);
  MatF backward(const MatF& gy);
  void collect(std::vector<Param*>& params);
  void collect_state(StateDict& sd);

  int output_dim = 0;

 private:
  std::vector<std::unique_ptr<FeatOp>> ops_;
};

// Projector per the VICReg family: two (Linear-BN-ReLU) blocks, then either a
// plain linear output or Linear + IterNorm depending on the head style.
MlpHead build_projector(const ProjectorConfig& cfg, Rng& rng, const std::string& name);

MlpHead build_simclr_head(int input_dim, int dim, Rng& rng, const std::string& name);
MlpHead build_byol_projector(int input_dim, int dim, Rng& rng, const std::string& name);
MlpHead build_byol_predictor(int dim, Rng& rng, const std::string& name);
MlpHead build_simsiam_projector(int input_dim, int dim, Rng& rng, const std::string& name);
MlpHead build_simsiam_predictor(int dim, int bottleneck, Rng& rng, const std::string& name);
// Linear-ReLU-Dropout(0.5)-Linear on concatenated pair representations.
MlpHead build_tnc_discriminator(int rep_dim, Rng& rng, const std::string& name);

}  // namespace vibcreg::nn
