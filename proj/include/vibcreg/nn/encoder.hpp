// encoder.hpp -- light 1D ResNet: stem conv + maxpool, one residual block per
// stage with stride-2 downsampling at every stage entry, GAP head.
#pragma once

#include "vibcreg/nn/layers.hpp"
#include "vibcreg/series.hpp"

#include <memory>
#include <vector>

namespace vibcreg::nn {

struct EncoderConfig {
  int in_channels = 1;
  std::vector<int> stage_channels = {32, 64, 128, 256};
  int blocks_per_stage = 1;
  int kernel_size = 3;

  int representation_dim() const { return stage_channels.back(); }
};

// Shortest input the stem + stages can digest.
inline constexpr int kMinEncoderLength = 8;

class ResidualBlock {
 public:
  ResidualBlock(int in_ch, int out_ch, int kernel, int stride, Rng& rng,
                const std::string& name);

  MatF forward(const MatF& x, int batch, int len_in, int* len_out, bool training);
  MatF backward(const MatF& gy);
  void collect(std::vector<Param*>& params);
  void collect_state(StateDict& sd);

 private:
  Conv1d conv1_, conv2_;
  BatchNormChan bn1_, bn2_;
  ReluChan relu1_, relu_out_;
  std::unique_ptr<Conv1d> proj_;
  std::unique_ptr<BatchNormChan> proj_bn_;
};

class ResNet1d {
 public:
  ResNet1d(const EncoderConfig& cfg, Rng& rng);

  // (B x D) representations from a conv-land activation.
  MatF forward(const MatF& x, int batch, int len, bool training);
  MatF forward(const SeriesBatch& batch, bool training);
  void backward(const MatF& grep);

  void collect(std::vector<Param*>& params);
  void collect_state(StateDict& sd);
  std::int64_t parameter_count() const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  Conv1d stem_conv_;
  BatchNormChan stem_bn_;
  ReluChan stem_relu_;
  MaxPool1d stem_pool_;
  std::vector<std::unique_ptr<ResidualBlock>> blocks_;
  GlobalAveragePool gap_;
};

}  // namespace vibcreg::nn
