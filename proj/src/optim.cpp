#include "vibcreg/nn/optim.hpp"

namespace vibcreg::nn {

void AdamW::add_group(const std::vector<Param*>& params, double lr_scale) {
  for (Param* p : params) {
    Slot s;
    s.param = p;
    s.lr_scale = lr_scale;
    s.m = MatF::Zero(p->value.rows(), p->value.cols());
    s.v = MatF::Zero(p->value.rows(), p->value.cols());
    slots_.push_back(std::move(s));
  }
}

void AdamW::zero_grad() {
  for (auto& s : slots_) s.param->zero_grad();
}

void AdamW::step(double lr) {
  ++step_count_;
  const float b1 = float(cfg_.beta1), b2 = float(cfg_.beta2);
  const float bc1 = 1.0f - std::pow(b1, float(step_count_));
  const float bc2 = 1.0f - std::pow(b2, float(step_count_));
  for (auto& s : slots_) {
    const float eff_lr = float(lr * s.lr_scale);
    const float wd = float(cfg_.weight_decay);
    auto& w = s.param->value;
    auto& g = s.param->grad;
    s.m = b1 * s.m + (1.0f - b1) * g;
    s.v = (b2 * s.v.array() + (1.0f - b2) * g.array().square()).matrix();
    auto mhat = (s.m.array() / bc1).eval();
    auto vhat = (s.v.array() / bc2).eval();
    w.array() -= eff_lr * (mhat / (vhat.sqrt() + float(cfg_.eps)) + wd * w.array());
  }
}

void AdamW::collect_state(StateDict& sd) {
  step_storage_.resize(1);
  step_storage_[0] = MatF::Constant(1, 1, float(step_count_));
  sd.add("optim.step", &step_storage_[0]);
  for (auto& s : slots_) {
    sd.add("optim.m." + s.param->name, &s.m);
    sd.add("optim.v." + s.param->name, &s.v);
  }
}

}  // namespace vibcreg::nn
