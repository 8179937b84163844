#include "vibcreg/nn/layers.hpp"

#include <cmath>

namespace vibcreg::nn {

namespace {

// PyTorch-style kaiming-uniform default init.
void init_uniform(MatF& m, float bound, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv1d
// ---------------------------------------------------------------------------

Conv1d::Conv1d(int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng,
               const std::string& name)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding) {
  require(kernel >= 1 && stride >= 1 && padding >= 0, "conv1d: bad geometry");
  weight_.name = name + ".weight";
  weight_.value.resize(out_channels, in_channels * kernel);
  bias_.name = name + ".bias";
  bias_.value.resize(out_channels, 1);
  float bound = 1.0f / std::sqrt(float(in_channels * kernel));
  init_uniform(weight_.value, bound, rng);
  init_uniform(bias_.value, bound, rng);
  weight_.zero_grad();
  bias_.zero_grad();
}

int Conv1d::output_length(int len_in, int kernel, int stride, int padding) {
  return (len_in + 2 * padding - kernel) / stride + 1;
}

MatF Conv1d::forward(const MatF& x, int batch, int len_in, int* len_out, bool training) {
  require(x.rows() == in_channels_, "conv1d: channel mismatch");
  require(x.cols() == Eigen::Index(batch) * len_in, "conv1d: column count mismatch");
  const int lo = output_length(len_in, kernel_, stride_, padding_);
  require(lo >= 1, "conv1d: input too short");
  *len_out = lo;

  MatF cols = MatF::Zero(Eigen::Index(in_channels_) * kernel_, Eigen::Index(batch) * lo);
  for (int b = 0; b < batch; ++b) {
    for (int t = 0; t < lo; ++t) {
      const Eigen::Index out_col = Eigen::Index(b) * lo + t;
      const int base = t * stride_ - padding_;
      for (int k = 0; k < kernel_; ++k) {
        const int src = base + k;
        if (src < 0 || src >= len_in) continue;
        const Eigen::Index in_col = Eigen::Index(b) * len_in + src;
        for (int c = 0; c < in_channels_; ++c) {
          cols(Eigen::Index(c) * kernel_ + k, out_col) = x(c, in_col);
        }
      }
    }
  }
  MatF y = weight_.value * cols;
  y.colwise() += bias_.value.col(0);
  if (training) {
    cols_ = std::move(cols);
    cached_batch_ = batch;
    cached_len_in_ = len_in;
    cached_len_out_ = lo;
  }
  return y;
}

MatF Conv1d::backward(const MatF& gy) {
  require(cols_.size() > 0, "conv1d: backward without cached forward");
  weight_.grad.noalias() += gy * cols_.transpose();
  bias_.grad.col(0) += gy.rowwise().sum();
  MatF dcols = weight_.value.transpose() * gy;
  MatF dx = MatF::Zero(in_channels_, Eigen::Index(cached_batch_) * cached_len_in_);
  for (int b = 0; b < cached_batch_; ++b) {
    for (int t = 0; t < cached_len_out_; ++t) {
      const Eigen::Index out_col = Eigen::Index(b) * cached_len_out_ + t;
      const int base = t * stride_ - padding_;
      for (int k = 0; k < kernel_; ++k) {
        const int src = base + k;
        if (src < 0 || src >= cached_len_in_) continue;
        const Eigen::Index in_col = Eigen::Index(b) * cached_len_in_ + src;
        for (int c = 0; c < in_channels_; ++c) {
          dx(c, in_col) += dcols(Eigen::Index(c) * kernel_ + k, out_col);
        }
      }
    }
  }
  return dx;
}

void Conv1d::collect(std::vector<Param*>& params) {
  params.push_back(&weight_);
  params.push_back(&bias_);
}

void Conv1d::collect_state(StateDict& sd) {
  sd.add(weight_.name, &weight_.value);
  sd.add(bias_.name, &bias_.value);
}

// ---------------------------------------------------------------------------
// BatchNormChan: stats per channel (row) over all columns.
// ---------------------------------------------------------------------------

BatchNormChan::BatchNormChan(int channels, Rng&, const std::string& name, double momentum,
                             double eps)
    : channels_(channels), momentum_(momentum), eps_(eps) {
  gamma_.name = name + ".gamma";
  gamma_.value = MatF::Ones(channels, 1);
  beta_.name = name + ".beta";
  beta_.value = MatF::Zero(channels, 1);
  gamma_.zero_grad();
  beta_.zero_grad();
  running_mean_ = MatF::Zero(channels, 1);
  running_var_ = MatF::Ones(channels, 1);
}

MatF BatchNormChan::forward(const MatF& x, bool training) {
  require(x.rows() == channels_, "batchnorm: channel mismatch");
  const Eigen::Index n = x.cols();
  last_training_ = training;
  if (!training) {
    MatF y(x.rows(), n);
    for (int c = 0; c < channels_; ++c) {
      float inv = 1.0f / std::sqrt(running_var_(c, 0) + float(eps_));
      y.row(c) = (x.row(c).array() - running_mean_(c, 0)) * inv * gamma_.value(c, 0) +
                 beta_.value(c, 0);
    }
    return y;
  }
  require(n >= 2, "batchnorm: training mode needs >= 2 samples");
  xhat_.resize(x.rows(), n);
  inv_std_.resize(channels_);
  MatF y(x.rows(), n);
  for (int c = 0; c < channels_; ++c) {
    float mu = x.row(c).mean();
    float var = (x.row(c).array() - mu).square().mean();
    float inv = 1.0f / std::sqrt(var + float(eps_));
    inv_std_(c) = inv;
    xhat_.row(c) = (x.row(c).array() - mu) * inv;
    y.row(c) = xhat_.row(c).array() * gamma_.value(c, 0) + beta_.value(c, 0);
    running_mean_(c, 0) = float((1.0 - momentum_) * running_mean_(c, 0) + momentum_ * mu);
    double unbiased = double(var) * double(n) / double(n - 1);
    running_var_(c, 0) = float((1.0 - momentum_) * running_var_(c, 0) + momentum_ * unbiased);
  }
  return y;
}

MatF BatchNormChan::backward(const MatF& gy) {
  require(last_training_, "batchnorm: backward requires a training-mode forward");
  const Eigen::Index n = gy.cols();
  MatF dx(gy.rows(), n);
  for (int c = 0; c < channels_; ++c) {
    float g = gamma_.value(c, 0);
    auto dy = gy.row(c).array();
    auto xh = xhat_.row(c).array();
    gamma_.grad(c, 0) += (dy * xh).sum();
    beta_.grad(c, 0) += dy.sum();
    float sum_dy = dy.sum();
    float sum_dy_xh = (dy * xh).sum();
    dx.row(c) =
        (g * inv_std_(c) / float(n)) * (float(n) * dy - sum_dy - xh * sum_dy_xh);
  }
  return dx;
}

void BatchNormChan::collect(std::vector<Param*>& params) {
  params.push_back(&gamma_);
  params.push_back(&beta_);
}

void BatchNormChan::collect_state(StateDict& sd) {
  sd.add(gamma_.name, &gamma_.value);
  sd.add(beta_.name, &beta_.value);
  sd.add(gamma_.name + ".running_mean", &running_mean_);
  sd.add(gamma_.name + ".running_var", &running_var_);
}

// ---------------------------------------------------------------------------
// ReluChan / ReluFeat
// ---------------------------------------------------------------------------

MatF ReluChan::forward(const MatF& x) {
  mask_ = (x.array() > 0.0f);
  return x.cwiseMax(0.0f);
}

MatF ReluChan::backward(const MatF& gy) {
  return (gy.array() * mask_.cast<float>().array()).matrix();
}

MatF ReluFeat::forward(const MatF& x) {
  mask_ = (x.array() > 0.0f);
  return x.cwiseMax(0.0f);
}

MatF ReluFeat::backward(const MatF& gy) {
  return (gy.array() * mask_.cast<float>().array()).matrix();
}

// ---------------------------------------------------------------------------
// MaxPool1d
// ---------------------------------------------------------------------------

MaxPool1d::MaxPool1d(int kernel, int stride, int padding)
    : kernel_(kernel), stride_(stride), padding_(padding) {}

MatF MaxPool1d::forward(const MatF& x, int batch, int len_in, int* len_out) {
  const int lo = Conv1d::output_length(len_in, kernel_, stride_, padding_);
  require(lo >= 1, "maxpool: input too short");
  *len_out = lo;
  channels_ = int(x.rows());
  cached_batch_ = batch;
  cached_len_in_ = len_in;
  cached_len_out_ = lo;
  MatF y(channels_, Eigen::Index(batch) * lo);
  argmax_.assign(std::size_t(channels_) * batch * lo, -1);
  for (int b = 0; b < batch; ++b) {
    for (int t = 0; t < lo; ++t) {
      const Eigen::Index out_col = Eigen::Index(b) * lo + t;
      const int base = t * stride_ - padding_;
      for (int c = 0; c < channels_; ++c) {
        float best = -std::numeric_limits<float>::infinity();
        std::int32_t best_col = -1;
        for (int k = 0; k < kernel_; ++k) {
          const int src = base + k;
          if (src < 0 || src >= len_in) continue;
          const Eigen::Index in_col = Eigen::Index(b) * len_in + src;
          float v = x(c, in_col);
          if (v > best) {
            best = v;
            best_col = std::int32_t(in_col);
          }
        }
        y(c, out_col) = best_col >= 0 ? best : 0.0f;
        argmax_[std::size_t(c) + std::size_t(channels_) * out_col] = best_col;
      }
    }
  }
  return y;
}

MatF MaxPool1d::backward(const MatF& gy) {
  MatF dx = MatF::Zero(channels_, Eigen::Index(cached_batch_) * cached_len_in_);
  for (Eigen::Index col = 0; col < gy.cols(); ++col) {
    for (int c = 0; c < channels_; ++c) {
      std::int32_t src = argmax_[std::size_t(c) + std::size_t(channels_) * col];
      if (src >= 0) dx(c, src) += gy(c, col);
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// GlobalAveragePool
// ---------------------------------------------------------------------------

MatF GlobalAveragePool::forward(const MatF& x, int batch, int len) {
  channels_ = int(x.rows());
  cached_batch_ = batch;
  cached_len_ = len;
  MatF y(batch, channels_);
  for (int b = 0; b < batch; ++b) {
    y.row(b) = x.middleCols(Eigen::Index(b) * len, len).rowwise().mean().transpose();
  }
  return y;
}

MatF GlobalAveragePool::backward(const MatF& gy) {
  MatF dx(channels_, Eigen::Index(cached_batch_) * cached_len_);
  const float inv = 1.0f / float(cached_len_);
  for (int b = 0; b < cached_batch_; ++b) {
    dx.middleCols(Eigen::Index(b) * cached_len_, cached_len_) =
        (gy.row(b).transpose() * inv).replicate(1, cached_len_);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

Linear::Linear(int in_dim, int out_dim, Rng& rng, const std::string& name, bool bias)
    : in_dim_(in_dim), out_dim_(out_dim), has_bias_(bias) {
  weight_.name = name + ".weight";
  weight_.value.resize(in_dim, out_dim);
  float bound = 1.0f / std::sqrt(float(in_dim));
  init_uniform(weight_.value, bound, rng);
  weight_.zero_grad();
  if (bias) {
    bias_.name = name + ".bias";
    bias_.value.resize(1, out_dim);
    init_uniform(bias_.value, bound, rng);
    bias_.zero_grad();
  }
}

MatF Linear::forward(const MatF& x, bool training) {
  require(x.cols() == in_dim_, "linear: input dim mismatch");
  MatF y = x * weight_.value;
  if (has_bias_) y.rowwise() += bias_.value.row(0);
  if (training) input_ = x;
  return y;
}

MatF Linear::backward(const MatF& gy) {
  require(input_.size() > 0, "linear: backward without cached forward");
  weight_.grad.noalias() += input_.transpose() * gy;
  if (has_bias_) bias_.grad.row(0) += gy.colwise().sum();
  return gy * weight_.value.transpose();
}

void Linear::collect(std::vector<Param*>& params) {
  params.push_back(&weight_);
  if (has_bias_) params.push_back(&bias_);
}

void Linear::collect_state(StateDict& sd) {
  sd.add(weight_.name, &weight_.value);
  if (has_bias_) sd.add(bias_.name, &bias_.value);
}

// ---------------------------------------------------------------------------
// BatchNormFeat: stats per feature (column) over rows.
// ---------------------------------------------------------------------------

BatchNormFeat::BatchNormFeat(int features, Rng&, const std::string& name, bool affine,
                             double momentum, double eps)
    : features_(features), affine_(affine), momentum_(momentum), eps_(eps) {
  gamma_.name = name + ".gamma";
  gamma_.value = MatF::Ones(1, features);
  beta_.name = name + ".beta";
  beta_.value = MatF::Zero(1, features);
  gamma_.zero_grad();
  beta_.zero_grad();
  running_mean_ = MatF::Zero(1, features);
  running_var_ = MatF::Ones(1, features);
}

MatF BatchNormFeat::forward(const MatF& x, bool training) {
  require(x.cols() == features_, "batchnorm: feature mismatch");
  const Eigen::Index n = x.rows();
  last_training_ = training;
  if (!training) {
    MatF y(n, features_);
    for (int j = 0; j < features_; ++j) {
      float inv = 1.0f / std::sqrt(running_var_(0, j) + float(eps_));
      float g = affine_ ? gamma_.value(0, j) : 1.0f;
      float b = affine_ ? beta_.value(0, j) : 0.0f;
      y.col(j) = (x.col(j).array() - running_mean_(0, j)) * (inv * g) + b;
    }
    return y;
  }
  require(n >= 2, "batchnorm: training mode needs >= 2 samples");
  xhat_.resize(n, features_);
  inv_std_.resize(features_);
  MatF y(n, features_);
  for (int j = 0; j < features_; ++j) {
    float mu = x.col(j).mean();
    float var = (x.col(j).array() - mu).square().mean();
    float inv = 1.0f / std::sqrt(var + float(eps_));
    inv_std_(j) = inv;
    xhat_.col(j) = (x.col(j).array() - mu) * inv;
    if (affine_) {
      y.col(j) = xhat_.col(j).array() * gamma_.value(0, j) + beta_.value(0, j);
    } else {
      y.col(j) = xhat_.col(j);
    }
    running_mean_(0, j) = float((1.0 - momentum_) * running_mean_(0, j) + momentum_ * mu);
    double unbiased = double(var) * double(n) / double(n - 1);
    running_var_(0, j) = float((1.0 - momentum_) * running_var_(0, j) + momentum_ * unbiased);
  }
  return y;
}

MatF BatchNormFeat::backward(const MatF& gy) {
  require(last_training_, "batchnorm: backward requires a training-mode forward");
  const Eigen::Index n = gy.rows();
  MatF dx(n, features_);
  for (int j = 0; j < features_; ++j) {
    float g = affine_ ? gamma_.value(0, j) : 1.0f;
    auto dy = gy.col(j).array();
    auto xh = xhat_.col(j).array();
    if (affine_) {
      gamma_.grad(0, j) += (dy * xh).sum();
      beta_.grad(0, j) += dy.sum();
    }
    float sum_dy = dy.sum();
    float sum_dy_xh = (dy * xh).sum();
    dx.col(j) = (g * inv_std_(j) / float(n)) * (float(n) * dy - sum_dy - xh * sum_dy_xh);
  }
  return dx;
}

void BatchNormFeat::collect(std::vector<Param*>& params) {
  if (!affine_) return;
  params.push_back(&gamma_);
  params.push_back(&beta_);
}

void BatchNormFeat::collect_state(StateDict& sd) {
  if (affine_) {
    sd.add(gamma_.name, &gamma_.value);
    sd.add(beta_.name, &beta_.value);
  }
  sd.add(gamma_.name + ".running_mean", &running_mean_);
  sd.add(gamma_.name + ".running_var", &running_var_);
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

MatF Dropout::forward(const MatF& x, bool training, Rng& rng) {
  if (!training || rate_ <= 0.0) {
    mask_ = MatF::Ones(x.rows(), x.cols());
    return x;
  }
  const float keep = float(1.0 - rate_);
  mask_.resize(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      mask_(i, j) = rng.uniform(0.0f, 1.0f) < keep ? 1.0f / keep : 0.0f;
  return x.cwiseProduct(mask_);
}

MatF Dropout::backward(const MatF& gy) { return gy.cwiseProduct(mask_); }

// ---------------------------------------------------------------------------
// IterNorm layer
// ---------------------------------------------------------------------------

IterNorm::IterNorm(int features, const whitening::IterNormConfig& cfg, const std::string& name)
    : features_(features), cfg_(cfg), name_(name) {
  require(features % cfg.group_size == 0, "iternorm: features not divisible by group size");
  const int g = cfg.group_size;
  running_mean_ = MatF::Zero(1, features);
  running_wm_ = MatF::Zero(g, features);
  for (int gi = 0; gi < features / g; ++gi)
    running_wm_.middleCols(Eigen::Index(gi) * g, g).setIdentity();
}

MatF IterNorm::forward(const MatF& x, bool training) {
  require(x.cols() == features_, "iternorm: feature mismatch");
  const int g = cfg_.group_size;
  if (!training) {
    Eigen::VectorXd rm = running_mean_.row(0).transpose().cast<double>();
    std::vector<Eigen::MatrixXd> wms(features_ / g);
    for (int gi = 0; gi < features_ / g; ++gi)
      wms[gi] = running_wm_.middleCols(Eigen::Index(gi) * g, g).cast<double>();
    return whitening::iternorm_forward_infer<double>(x.cast<double>(), rm, wms, g)
        .cast<float>();
  }
  Eigen::VectorXd mean;
  std::vector<Eigen::MatrixXd> wms;
  Eigen::MatrixXd y =
      whitening::iternorm_forward_train<double>(x.cast<double>(), cfg_, &cache_, &mean, &wms);
  has_cache_ = true;
  const float m = float(cfg_.momentum);
  running_mean_.row(0) =
      (1.0f - m) * running_mean_.row(0) + m * mean.cast<float>().transpose();
  for (int gi = 0; gi < features_ / g; ++gi) {
    running_wm_.middleCols(Eigen::Index(gi) * g, g) =
        (1.0f - m) * running_wm_.middleCols(Eigen::Index(gi) * g, g) +
        m * wms[gi].cast<float>();
  }
  return y.cast<float>();
}

MatF IterNorm::backward(const MatF& gy) {
  require(has_cache_, "iternorm: backward without training forward");
  return whitening::iternorm_backward<double>(cache_, cfg_, gy.cast<double>()).cast<float>();
}

void IterNorm::collect_state(StateDict& sd) {
  sd.add(name_ + ".running_mean", &running_mean_);
  sd.add(name_ + ".running_wm", &running_wm_);
}

}  // namespace vibcreg::nn
