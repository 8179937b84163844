#include "vibcreg/series.hpp"

namespace vibcreg {

SeriesBatch SeriesBatch::select(const std::vector<int>& indices) const {
  SeriesBatch out;
  out.batch = int(indices.size());
  out.channels = channels;
  out.length = length;
  out.values.resize(std::size_t(out.batch) * channels * length);
  if (!labels.empty()) out.labels.resize(indices.size());
  if (multilabel()) out.multilabels.resize(Eigen::Index(indices.size()), multilabels.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    int src = indices[i];
    require(src >= 0 && src < batch, "SeriesBatch::select: index out of range");
    std::copy(values.begin() + std::size_t(src) * channels * length,
              values.begin() + std::size_t(src + 1) * channels * length,
              out.values.begin() + i * std::size_t(channels) * length);
    if (!labels.empty()) out.labels[i] = labels[src];
    if (multilabel()) out.multilabels.row(Eigen::Index(i)) = multilabels.row(src);
  }
  return out;
}

MatF SeriesBatch::to_convland() const {
  MatF x(channels, Eigen::Index(batch) * length);
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < channels; ++c)
      for (int l = 0; l < length; ++l) x(c, Eigen::Index(b) * length + l) = at(b, c, l);
  return x;
}

}  // namespace vibcreg
