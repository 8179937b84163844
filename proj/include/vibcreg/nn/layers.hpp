// layers.hpp -- minimal trainable layers used by the encoder and heads.
//
// Two activation layouts are used throughout:
//   * conv-land: a (C x B*L) matrix, per-sample column blocks of length L
//     (channels x time, samples concatenated along columns);
//   * feat-land: a (B x F) matrix of per-sample feature rows.
//
// Training-mode forwards push onto a per-layer cache stack and backward pops
// (LIFO), so Siamese wiring can run both branch forwards before the two
// backwards. Inference forwards push nothing.
#pragma once

#include "vibcreg/common.hpp"
#include "vibcreg/whitening.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace vibcreg::nn {

struct Param {
  std::string name;
  MatF value;
  MatF grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Named views over a model's tensors (parameters + running buffers), used by
// the checkpoint writer/reader.
struct StateDict {
  std::vector<std::pair<std::string, MatF*>> tensors;

  void add(const std::string& name, MatF* t) { tensors.emplace_back(name, t); }
};

// ---------------------------------------------------------------------------
// conv-land layers
// ---------------------------------------------------------------------------

class Conv1d {
 public:
  Conv1d(int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng,
         const std::string& name);

  MatF forward(const MatF& x, int batch, int len_in, int* len_out, bool training);
  MatF backward(const MatF& gy);

  static int output_length(int len_in, int kernel, int stride, int padding);
  void collect(std::vector<Param*>& params);
  void collect_state(StateDict& sd);
  void drop_caches() { stack_.clear(); }

  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }

 private:
  struct Cache {
    MatF cols;
    int batch, len_in, len_out;
  };
  int in_channels_, out_channels_, kernel_, stride_, padding_;
  Param weight_;  // (out x in*kernel)
  Param bias_;    // (out x 1)
  std::vector<Cache> stack_;
};

class BatchNormChan {
 public:
  BatchNormChan(int channels, const std::string& name, double momentum = 0.1, double eps = 1e-5);

  MatF forward(const MatF& x, bool training);
  MatF backward(const MatF& gy);

  void collect(std::vector<Param*>& params);
  void collect_state(StateDict& sd);
  void drop_caches() { stack_.clear(); }

 private:
  struct Cache {
    MatF xhat;
    VecF inv_std;
  };
  int channels_;
  double momentum_, eps_;
  Param gamma_, beta_;
  MatF running_mean_, running_var_;  // (C x 1)
  std::vector<Cache> stack_;
};

class ReluChan {
 public:
  MatF forward(const MatF& x, bool training);
  MatF backward(const MatF& gy);
  void drop_caches() { stack_.clear(); }

 private:
  std::vector<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> stack_;
};

class MaxPool1d {
 public:
  MaxPool1d(int kernel, int stride, int padding);

  MatF forward(const MatF& x, int batch, int len_in, int* len_out, bool training);
  MatF backward(const MatF& gy);
  void drop_caches() { stack_.clear(); }

 private:
  struct Cache {
    std::vector<std::int32_t> argmax;  // source column per (channel, out col)
    int batch, len_in, len_out, channels;
  };
  int kernel_, stride_, padding_;
  std::vector<Cache> stack_;
};

// Global average pooling over time: (C x B*L) -> (B x C).
class GlobalAveragePool {
 public:
  MatF forward(const MatF& x, int batch, int len, bool training);
  MatF backward(const MatF& gy);
  void drop_caches() { stack_.clear(); }

 private:
  struct Cache {
    int batch, len, channels;
  };
  std::vector<Cache> stack_;
};

// ---------------------------------------------------------------------------
// feat-land layers
// ---------------------------------------------------------------------------

class Linear {
 public:
  Linear(int in_dim, int out_dim, Rng& rng, const std::string& name, bool bias = true);

  MatF forward(const MatF& x, bool training);
  MatF backward(const MatF& gy);

  void collect(std::vector<Param*>& params);
  void collect_state(StateDict& sd);
  void drop_caches() { stack_.clear(); }

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }

 private:
  int in_dim_, out_dim_;
  bool has_bias_;
  Param weight_;  // (in x out)
  Param bias_;    // (1 x out)
  std::vector<MatF> stack_;
};

class BatchNormFeat {
 public:
  BatchNormFeat(int features, const std::string& name, bool affine = true, double momentum = 0.1,
                double eps = 1e-5);

  MatF forward(const MatF& x, bool training);
  MatF backward(const MatF& gy);

  void collect(std::vector<Param*>& params);
  void collect_state(StateDict& sd);
  void drop_caches() { stack_.clear(); }

 private:
  struct Cache {
    MatF xhat;
    VecF inv_std;
  };
  int features_;
  bool affine_;
  double momentum_, eps_;
  Param gamma_, beta_;
  MatF running_mean_, running_var_;  // (1 x F)
  std::vector<Cache> stack_;
};

class ReluFeat {
 public:
  MatF forward(const MatF& x, bool training);
  MatF backward(const MatF& gy);
  void drop_caches() { stack_.clear(); }

 private:
  std::vector<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> stack_;
};

class Dropout {
 public:
  explicit Dropout(double rate) : rate_(rate) {}

  MatF forward(const MatF& x, bool training, Rng& rng);
  MatF backward(const MatF& gy);
  void drop_caches() { stack_.clear(); }

 private:
  double rate_;
  std::vector<MatF> stack_;
};

// IterNorm whitening layer (feat-land). No learnable parameters; keeps EMA
// running mean and whitening matrices for inference. Internals run in double.
class IterNorm {
 public:
  IterNorm(int features, const whitening::IterNormConfig& cfg, const std::string& name);

  MatF forward(const MatF& x, bool training);
  MatF backward(const MatF& gy);

  void collect_state(StateDict& sd);
  void drop_caches() { stack_.clear(); }
  const whitening::IterNormConfig& config() const { return cfg_; }
  // Running whitening matrices stored as one (G x F) matrix; group gi owns
  // the column block [gi*G, (gi+1)*G).
  const MatF& running_whitening() const { return running_wm_; }
  const MatF& running_mean() const { return running_mean_; }

 private:
  int features_;
  whitening::IterNormConfig cfg_;
  std::string name_;
  MatF running_mean_;  // (1 x F)
  MatF running_wm_;    // (G x F)
  std::vector<whitening::IterNormCache<double>> stack_;
};

}  // namespace vibcreg::nn
