#include "vibcreg/nn/encoder.hpp"

namespace vibcreg::nn {

ResidualBlock::ResidualBlock(int in_ch, int out_ch, int kernel, int stride, Rng& rng,
                             const std::string& name)
    : conv1_(in_ch, out_ch, kernel, stride, kernel / 2, rng, name + ".conv1"),
      conv2_(out_ch, out_ch, kernel, 1, kernel / 2, rng, name + ".conv2"),
      bn1_(out_ch, rng, name + ".bn1"),
      bn2_(out_ch, rng, name + ".bn2") {
  if (stride != 1 || in_ch != out_ch) {
    proj_ = std::make_unique<Conv1d>(in_ch, out_ch, 1, stride, 0, rng, name + ".proj");
    proj_bn_ = std::make_unique<BatchNormChan>(out_ch, rng, name + ".proj_bn");
  }
}

MatF ResidualBlock::forward(const MatF& x, int batch, int len_in, int* len_out, bool training) {
  int l1 = 0, l2 = 0;
  MatF h = conv1_.forward(x, batch, len_in, &l1, training);
  h = bn1_.forward(h, training);
  h = relu1_.forward(h);
  h = conv2_.forward(h, batch, l1, &l2, training);
  h = bn2_.forward(h, training);
  MatF shortcut;
  if (proj_) {
    int lp = 0;
    shortcut = proj_->forward(x, batch, len_in, &lp, training);
    shortcut = proj_bn_->forward(shortcut, training);
    require(lp == l2, "residual block: shortcut length mismatch");
  } else {
    shortcut = x;
  }
  *len_out = l2;
  return relu_out_.forward(h + shortcut);
}

MatF ResidualBlock::backward(const MatF& gy) {
  MatF g = relu_out_.backward(gy);
  MatF g_main = bn2_.backward(g);
  g_main = conv2_.backward(g_main);
  g_main = relu1_.backward(g_main);
  g_main = bn1_.backward(g_main);
  g_main = conv1_.backward(g_main);
  MatF g_short;
  if (proj_) {
    g_short = proj_bn_->backward(g);
    g_short = proj_->backward(g_short);
  } else {
    g_short = g;
  }
  return g_main + g_short;
}

void ResidualBlock::collect(std::vector<Param*>& params) {
  conv1_.collect(params);
  bn1_.collect(params);
  conv2_.collect(params);
  bn2_.collect(params);
  if (proj_) {
    proj_->collect(params);
    proj_bn_->collect(params);
  }
}

void ResidualBlock::collect_state(StateDict& sd) {
  conv1_.collect_state(sd);
  bn1_.collect_state(sd);
  conv2_.collect_state(sd);
  bn2_.collect_state(sd);
  if (proj_) {
    proj_->collect_state(sd);
    proj_bn_->collect_state(sd);
  }
}

ResNet1d::ResNet1d(const EncoderConfig& cfg, Rng& rng)
    : cfg_(cfg),
      stem_conv_(cfg.in_channels, cfg.stage_channels.front(), 7, 2, 3, rng, "encoder.stem"),
      stem_bn_(cfg.stage_channels.front(), rng, "encoder.stem_bn"),
      stem_pool_(3, 2, 1) {
  require(!cfg.stage_channels.empty(), "encoder: at least one stage required");
  require(cfg.kernel_size % 2 == 1, "encoder: kernel size must be odd");
  int in_ch = cfg.stage_channels.front();
  for (std::size_t s = 0; s < cfg.stage_channels.size(); ++s) {
    int out_ch = cfg.stage_channels[s];
    for (int b = 0; b < cfg.blocks_per_stage; ++b) {
      int stride = b == 0 ? 2 : 1;  // stride-2 downsampling at every stage entry
      blocks_.push_back(std::make_unique<ResidualBlock>(
          in_ch, out_ch, cfg.kernel_size, stride, rng,
          "encoder.stage" + std::to_string(s) + ".block" + std::to_string(b)));
      in_ch = out_ch;
    }
  }
}

MatF ResNet1d::forward(const MatF& x, int batch, int len, bool training) {
  require(len >= kMinEncoderLength,
          "encoder: input length " + std::to_string(len) + " is below the minimum of " +
              std::to_string(kMinEncoderLength));
  require(x.allFinite(), "encoder: non-finite input");
  int l = 0;
  MatF h = stem_conv_.forward(x, batch, len, &l, training);
  h = stem_bn_.forward(h, training);
  h = stem_relu_.forward(h);
  int lp = 0;
  h = stem_pool_.forward(h, batch, l, &lp);
  l = lp;
  for (auto& block : blocks_) {
    int lo = 0;
    h = block->forward(h, batch, l, &lo, training);
    l = lo;
  }
  return gap_.forward(h, batch, l);
}

MatF ResNet1d::forward(const SeriesBatch& batch, bool training) {
  return forward(batch.to_convland(), batch.batch, batch.length, training);
}

void ResNet1d::backward(const MatF& grep) {
  MatF g = gap_.backward(grep);
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = (*it)->backward(g);
  g = stem_pool_.backward(g);
  g = stem_relu_.backward(g);
  g = stem_bn_.backward(g);
  stem_conv_.backward(g);
}

void ResNet1d::collect(std::vector<Param*>& params) {
  stem_conv_.collect(params);
  stem_bn_.collect(params);
  for (auto& b : blocks_) b->collect(params);
}

void ResNet1d::collect_state(StateDict& sd) {
  stem_conv_.collect_state(sd);
  stem_bn_.collect_state(sd);
  for (auto& b : blocks_) b->collect_state(sd);
}

std::int64_t ResNet1d::parameter_count() const {
  std::vector<Param*> params;
  const_cast<ResNet1d*>(this)->collect(params);
  std::int64_t n = 0;
  for (auto* p : params) n += p->value.size();
  return n;
}

}  // namespace vibcreg::nn
