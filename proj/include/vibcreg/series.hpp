// series.hpp -- the batch-of-time-series container shared by data loading,
// augmentation and the encoder.
#pragma once

#include "vibcreg/common.hpp"

#include <cstdint>
#include <vector>

namespace vibcreg {

// B samples, C channels, length L, values stored row-major [b][c][l].
// Single-label tasks use `labels`; multi-label tasks use `multilabels`
// (B x n_labels, 0/1). Exactly one of the two is populated for labeled data.
struct SeriesBatch {
  int batch = 0;
  int channels = 0;
  int length = 0;
  std::vector<float> values;
  std::vector<int> labels;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> multilabels;

  static SeriesBatch zeros(int b, int c, int l) {
    SeriesBatch sb;
    sb.batch = b;
    sb.channels = c;
    sb.length = l;
    sb.values.assign(std::size_t(b) * c * l, 0.0f);
    return sb;
  }

  float& at(int b, int c, int l) {
    return values[(std::size_t(b) * channels + c) * length + l];
  }
  float at(int b, int c, int l) const {
    return values[(std::size_t(b) * channels + c) * length + l];
  }
  const float* sample_channel(int b, int c) const {
    return values.data() + (std::size_t(b) * channels + c) * length;
  }
  float* sample_channel(int b, int c) {
    return values.data() + (std::size_t(b) * channels + c) * length;
  }

  bool multilabel() const { return multilabels.size() > 0; }

  // Select rows, preserving labels.
  SeriesBatch select(const std::vector<int>& indices) const;

  // conv-land view: (C x B*L), per-sample contiguous column blocks.
  MatF to_convland() const;
};

}  // namespace vibcreg
