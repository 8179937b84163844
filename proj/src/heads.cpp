#include "vibcreg/nn/heads.hpp"

namespace vibcreg::nn {

const char* to_string(HeadStyle s) {
  switch (s) {
    case HeadStyle::kVibcreg: return "vibcreg";
    case HeadStyle::kVicreg: return "vicreg";
    case HeadStyle::kVicregIterN: return "vicreg_itern";
    case HeadStyle::kVicregNcm: return "vicreg_ncm";
  }
  return "?";
}

namespace {

class LinearOp : public FeatOp {
 public:
  LinearOp(int in, int out, Rng& rng, const std::string& name) : layer_(in, out, rng, name) {}
  MatF forward(const MatF& x, bool training, Rng*) override { return layer_.forward(x, training); }
  MatF backward(const MatF& gy) override { return layer_.backward(gy); }
  void collect(std::vector<Param*>& p) override { layer_.collect(p); }
  void collect_state(StateDict& sd) override { layer_.collect_state(sd); }

 private:
  Linear layer_;
};

class BnOp : public FeatOp {
 public:
  BnOp(int features, Rng& rng, const std::string& name, bool affine = true)
      : layer_(features, rng, name, affine) {}
  MatF forward(const MatF& x, bool training, Rng*) override { return layer_.forward(x, training); }
  MatF backward(const MatF& gy) override { return layer_.backward(gy); }
  void collect(std::vector<Param*>& p) override { layer_.collect(p); }
  void collect_state(StateDict& sd) override { layer_.collect_state(sd); }

 private:
  BatchNormFeat layer_;
};

class ReluOp : public FeatOp {
 public:
  MatF forward(const MatF& x, bool, Rng*) override { return layer_.forward(x); }
  MatF backward(const MatF& gy) override { return layer_.backward(gy); }

 private:
  ReluFeat layer_;
};

class IterNormOp : public FeatOp {
 public:
  IterNormOp(int features, const whitening::IterNormConfig& cfg, const std::string& name)
      : layer_(features, cfg, name) {}
  MatF forward(const MatF& x, bool training, Rng*) override { return layer_.forward(x, training); }
  MatF backward(const MatF& gy) override { return layer_.backward(gy); }
  void collect_state(StateDict& sd) override { layer_.collect_state(sd); }

 private:
  IterNorm layer_;
};

class DropoutOp : public FeatOp {
 public:
  explicit DropoutOp(double rate) : layer_(rate) {}
  MatF forward(const MatF& x, bool training, Rng* rng) override {
    require(!training || rng != nullptr, "dropout: training forward needs an rng");
    static Rng dummy(0);
    return layer_.forward(x, training, rng ? *rng : dummy);
  }
  MatF backward(const MatF& gy) override { return layer_.backward(gy); }

 private:
  Dropout layer_;
};

}  // namespace

MatF MlpHead::forward(const MatF& x, bool training, Rng* rng) {
  MatF h = x;
  for (auto& op : ops_) h = op->forward(h, training, rng);
  return h;
}

MatF MlpHead::backward(const MatF& gy) {
  MatF g = gy;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void MlpHead::collect(std::vector<Param*>& params) {
  for (auto& op : ops_) op->collect(params);
}

void MlpHead::collect_state(StateDict& sd) {
  for (auto& op : ops_) op->collect_state(sd);
}

MlpHead build_projector(const ProjectorConfig& cfg, Rng& rng, const std::string& name) {
  require(cfg.input_dim > 0 && cfg.hidden_dim > 0 && cfg.output_dim > 0,
          "projector: dims must be positive");
  MlpHead head;
  head.push(std::make_unique<LinearOp>(cfg.input_dim, cfg.hidden_dim, rng, name + ".fc1"));
  head.push(std::make_unique<BnOp>(cfg.hidden_dim, rng, name + ".bn1"));
  head.push(std::make_unique<ReluOp>());
  head.push(std::make_unique<LinearOp>(cfg.hidden_dim, cfg.hidden_dim, rng, name + ".fc2"));
  head.push(std::make_unique<BnOp>(cfg.hidden_dim, rng, name + ".bn2"));
  head.push(std::make_unique<ReluOp>());
  head.push(std::make_unique<LinearOp>(cfg.hidden_dim, cfg.output_dim, rng, name + ".fc3"));
  if (head_ends_with_iternorm(cfg.style)) {
    whitening::IterNormConfig in_cfg = cfg.iternorm;
    if (cfg.output_dim % in_cfg.group_size != 0) in_cfg.group_size = cfg.output_dim;
    head.push(std::make_unique<IterNormOp>(cfg.output_dim, in_cfg, name + ".iternorm"));
  }
  head.output_dim = cfg.output_dim;
  return head;
}

MlpHead build_simclr_head(int input_dim, int dim, Rng& rng, const std::string& name) {
  MlpHead head;
  head.push(std::make_unique<LinearOp>(input_dim, dim, rng, name + ".fc1"));
  head.push(std::make_unique<ReluOp>());
  head.push(std::make_unique<LinearOp>(dim, dim, rng, name + ".fc2"));
  head.output_dim = dim;
  return head;
}

MlpHead build_byol_projector(int input_dim, int dim, Rng& rng, const std::string& name) {
  MlpHead head;
  head.push(std::make_unique<LinearOp>(input_dim, dim, rng, name + ".fc1"));
  head.push(std::make_unique<BnOp>(dim, rng, name + ".bn1"));
  head.push(std::make_unique<ReluOp>());
  head.push(std::make_unique<LinearOp>(dim, dim, rng, name + ".fc2"));
  head.output_dim = dim;
  return head;
}

MlpHead build_byol_predictor(int dim, Rng& rng, const std::string& name) {
  return build_byol_projector(dim, dim, rng, name);
}

MlpHead build_simsiam_projector(int input_dim, int dim, Rng& rng, const std::string& name) {
  MlpHead head;
  head.push(std::make_unique<LinearOp>(input_dim, dim, rng, name + ".fc1"));
  head.push(std::make_unique<BnOp>(dim, rng, name + ".bn1"));
  head.push(std::make_unique<ReluOp>());
  head.push(std::make_unique<LinearOp>(dim, dim, rng, name + ".fc2"));
  head.push(std::make_unique<BnOp>(dim, rng, name + ".bn2"));
  head.push(std::make_unique<ReluOp>());
  head.push(std::make_unique<LinearOp>(dim, dim, rng, name + ".fc3"));
  head.push(std::make_unique<BnOp>(dim, rng, name + ".bn3", /*affine=*/false));
  head.output_dim = dim;
  return head;
}

MlpHead build_simsiam_predictor(int dim, int bottleneck, Rng& rng, const std::string& name) {
  MlpHead head;
  head.push(std::make_unique<LinearOp>(dim, bottleneck, rng, name + ".fc1"));
  head.push(std::make_unique<BnOp>(bottleneck, rng, name + ".bn1"));
  head.push(std::make_unique<ReluOp>());
  head.push(std::make_unique<LinearOp>(bottleneck, dim, rng, name + ".fc2"));
  head.output_dim = dim;
  return head;
}

MlpHead build_tnc_discriminator(int rep_dim, Rng& rng, const std::string& name) {
  MlpHead head;
  head.push(std::make_unique<LinearOp>(2 * rep_dim, 4 * rep_dim, rng, name + ".fc1"));
  head.push(std::make_unique<ReluOp>());
  head.push(std::make_unique<DropoutOp>(0.5));
  head.push(std::make_unique<LinearOp>(4 * rep_dim, 1, rng, name + ".fc2"));
  head.output_dim = 1;
  return head;
}

}  // namespace vibcreg::nn
