// whitening.hpp -- IterNorm: grouped whitening via Newton's iteration on the
// normalized covariance. Training mode whitens with batch statistics and
// maintains EMA running statistics; inference mode applies the stored ones.
//
// The covariance is scaled by the power-mean s = (tr(Sigma^k)/G)^(1/k) with k
// chosen so that G^(1/k) <= 2. This keeps the Newton iteration's spectrum in
// (0, 2] (convergent) and makes an exactly-whitened batch a fixed point of
// the transform at every iteration count.
#pragma once

#include "vibcreg/common.hpp"

#include <cmath>
#include <vector>

namespace vibcreg::whitening {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct IterNormConfig {
  int iterations = 5;
  int group_size = 64;
  double momentum = 0.1;
  double eps = 1e-8;
};

inline int power_for_group(int group_size) {
  int k = 2;
  while (std::pow(double(group_size), 1.0 / k) > 2.0) k += 2;
  return k;
}

template <typename S>
struct IterNormGroupCache {
  Mat<S> centered;            // B x G
  Mat<S> sigma;               // G x G (with eps on the diagonal)
  Mat<S> sigma_n;             // sigma / s
  std::vector<Mat<S>> p;      // Newton iterates P_0..P_T
  Mat<S> wm;                  // P_T / sqrt(s)
  S scale = S(1);             // s
  S trace_pow = S(1);         // tr(sigma^k)
  Mat<S> sigma_pow_km1;       // sigma^(k-1), for d s / d sigma
  int power = 2;
};

template <typename S>
struct IterNormCache {
  std::vector<IterNormGroupCache<S>> groups;
  Eigen::Index batch = 0, features = 0;
  int group_size = 0;
};

// Forward in training mode. Returns the whitened batch; fills `cache` for the
// backward pass and `mean_out` / `wm_out` with the per-group batch statistics
// so the caller can fold them into running averages.
template <typename S>
Mat<S> iternorm_forward_train(const Mat<S>& x, const IterNormConfig& cfg, IterNormCache<S>* cache,
                              Vec<S>* mean_out, std::vector<Mat<S>>* wm_out) {
  const Eigen::Index b = x.rows(), f = x.cols();
  require(b >= 2, "iternorm: training mode requires batch size >= 2");
  require(cfg.group_size >= 1 && f % cfg.group_size == 0,
          "iternorm: feature dim " + std::to_string(f) + " not divisible by group size " +
              std::to_string(cfg.group_size));
  require(x.allFinite(), "iternorm: non-finite input");
  const int g = cfg.group_size;
  const Eigen::Index n_groups = f / g;
  const int k = power_for_group(g);
  const int half = k / 2;

  Mat<S> y(b, f);
  if (cache) {
    cache->groups.assign(n_groups, {});
    cache->batch = b;
    cache->features = f;
    cache->group_size = g;
  }
  if (mean_out) mean_out->resize(f);
  if (wm_out) wm_out->assign(n_groups, Mat<S>());

  for (Eigen::Index gi = 0; gi < n_groups; ++gi) {
    Mat<S> xg = x.middleCols(gi * g, g);
    Vec<S> mu = xg.colwise().mean();
    Mat<S> centered = xg.rowwise() - mu.transpose();
    Mat<S> sigma = (centered.transpose() * centered) / static_cast<S>(b);
    sigma.diagonal().array() += S(cfg.eps);
    require(sigma.allFinite(), "iternorm: non-finite covariance");

    // Powers of sigma for the scale and its derivative.
    Mat<S> pow_half = sigma;        // sigma^half
    Mat<S> pow_half_m1;             // sigma^(half-1)
    if (half == 1) {
      pow_half_m1 = Mat<S>::Identity(g, g);
    } else {
      pow_half_m1 = sigma;
      for (int i = 2; i < half; ++i) pow_half_m1 = pow_half_m1 * sigma;
      pow_half = pow_half_m1 * sigma;
    }
    S trace_pow = pow_half.squaredNorm();  // tr(sigma^k) for symmetric sigma
    S s = std::pow(trace_pow / static_cast<S>(g), S(1) / static_cast<S>(k));
    Mat<S> sigma_n = sigma / s;

    std::vector<Mat<S>> p(cfg.iterations + 1);
    p[0] = Mat<S>::Identity(g, g);
    for (int t = 0; t < cfg.iterations; ++t) {
      Mat<S> p2 = p[t] * p[t];
      p[t + 1] = S(1.5) * p[t] - S(0.5) * (p2 * p[t] * sigma_n);
    }
    Mat<S> wm = p[cfg.iterations] / std::sqrt(s);
    y.middleCols(gi * g, g) = centered * wm;  // wm symmetric

    if (mean_out) mean_out->segment(gi * g, g) = mu;
    if (wm_out) (*wm_out)[gi] = wm;
    if (cache) {
      auto& gc = cache->groups[gi];
      gc.centered = std::move(centered);
      gc.sigma = std::move(sigma);
      gc.sigma_n = std::move(sigma_n);
      gc.p = std::move(p);
      gc.wm = std::move(wm);
      gc.scale = s;
      gc.trace_pow = trace_pow;
      gc.sigma_pow_km1 = pow_half * pow_half_m1;
      gc.power = k;
    }
  }
  return y;
}

// Gradient w.r.t. the input, backpropagating through the batch mean, the
// covariance, the power-mean scale and the Newton iterates.
template <typename S>
Mat<S> iternorm_backward(const IterNormCache<S>& cache, const IterNormConfig& cfg,
                         const Mat<S>& dy) {
  const Eigen::Index b = cache.batch, f = cache.features;
  const int g = cache.group_size;
  const Eigen::Index n_groups = f / g;
  Mat<S> dx(b, f);

  for (Eigen::Index gi = 0; gi < n_groups; ++gi) {
    const auto& gc = cache.groups[gi];
    Mat<S> dyg = dy.middleCols(gi * g, g);

    Mat<S> d_centered = dyg * gc.wm.transpose();
    Mat<S> dwm = gc.centered.transpose() * dyg;

    const S sqrt_s = std::sqrt(gc.scale);
    Mat<S> dp = dwm / sqrt_s;
    S ds = S(-0.5) * std::pow(gc.scale, S(-1.5)) *
           (dwm.array() * gc.p[cfg.iterations].array()).sum();

    Mat<S> d_sigma_n = Mat<S>::Zero(g, g);
    for (int t = cfg.iterations; t >= 1; --t) {
      const Mat<S>& a = gc.p[t - 1];
      Mat<S> a2 = a * a;
      Mat<S> a3 = a2 * a;
      Mat<S> a_sn = a * gc.sigma_n;
      Mat<S> a2_sn = a2 * gc.sigma_n;
      Mat<S> dprev = S(1.5) * dp -
                     S(0.5) * (dp * a2_sn.transpose() + a.transpose() * dp * a_sn.transpose() +
                               a2.transpose() * dp * gc.sigma_n.transpose());
      d_sigma_n -= S(0.5) * (a3.transpose() * dp);
      dp = std::move(dprev);
    }

    Mat<S> d_sigma = d_sigma_n / gc.scale;
    ds += -(d_sigma_n.array() * gc.sigma.array()).sum() / (gc.scale * gc.scale);
    // s = (tr(sigma^k)/g)^(1/k) => ds/dsigma = s * sigma^(k-1) / tr(sigma^k).
    d_sigma += (ds * gc.scale / gc.trace_pow) * gc.sigma_pow_km1;

    d_centered += gc.centered * (d_sigma + d_sigma.transpose()) / static_cast<S>(b);
    Vec<S> colmean = d_centered.colwise().mean();
    dx.middleCols(gi * g, g) = d_centered.rowwise() - colmean.transpose();
  }
  return dx;
}

template <typename S>
Mat<S> iternorm_forward_infer(const Mat<S>& x, const Vec<S>& running_mean,
                              const std::vector<Mat<S>>& running_wm, int group_size) {
  const Eigen::Index f = x.cols();
  require(f == running_mean.size(), "iternorm: feature dim mismatch with running stats");
  const int g = group_size;
  Mat<S> y(x.rows(), f);
  for (Eigen::Index gi = 0; gi < f / g; ++gi) {
    Mat<S> centered = x.middleCols(gi * g, g).rowwise() -
                      running_mean.segment(gi * g, g).transpose();
    y.middleCols(gi * g, g) = centered * running_wm[gi].transpose();
  }
  return y;
}

}  // namespace vibcreg::whitening
