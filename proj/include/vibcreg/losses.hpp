// losses.hpp -- pure loss functions over projection batches, with analytic
// gradients. Everything here is stateless; templated on the scalar type so
// training runs in float while tests and gradient checks run in double.
#pragma once

#include "vibcreg/common.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace vibcreg::losses {

enum class CovarianceMode { kRawVicreg, kNormalizedVibcreg };

inline const char* to_string(CovarianceMode m) {
  return m == CovarianceMode::kRawVicreg ? "raw" : "normalized";
}

template <typename S>
struct LossWeights {
  S lambda_sim = S(25);
  S mu_var = S(25);
  S nu_cov = S(200);
  S gamma = S(1);
  S epsilon = S(1e-4);
};

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

namespace detail {

// Stabilizer added to l2 norms of centered columns (normализed covariance)
// and rows (cosine-based losses) so degenerate inputs warn instead of NaN.
inline constexpr double kNormStabilizer = 1e-12;

template <typename S>
void check_same_shape(const Mat<S>& a, const Mat<S>& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
              std::to_string(b.cols()) + ")");
}

template <typename S>
void check_batch_at_least(const Mat<S>& z, Eigen::Index n, const char* op) {
  require(z.rows() >= n, std::string(op) + ": batch size must be >= " + std::to_string(n) +
                             ", got " + std::to_string(z.rows()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Similarity (invariance) loss: mean over rows of squared l2 distance.
// ---------------------------------------------------------------------------

template <typename S>
S similarity_loss(const Mat<S>& z, const Mat<S>& z_prime) {
  detail::check_same_shape(z, z_prime, "similarity_loss");
  detail::check_batch_at_least(z, 1, "similarity_loss");
  const S b = static_cast<S>(z.rows());
  return (z - z_prime).squaredNorm() / b;
}

template <typename S>
S similarity_loss_grad(const Mat<S>& z, const Mat<S>& z_prime, Mat<S>* gz, Mat<S>* gzp) {
  detail::check_same_shape(z, z_prime, "similarity_loss");
  detail::check_batch_at_least(z, 1, "similarity_loss");
  const S b = static_cast<S>(z.rows());
  Mat<S> diff = z - z_prime;
  if (gz) *gz = diff * (S(2) / b);
  if (gzp) *gzp = diff * (S(-2) / b);
  return diff.squaredNorm() / b;
}

// ---------------------------------------------------------------------------
// Variance (FcE) loss: hinge on per-feature standard deviation.
// Uses the unbiased column-variance estimator.
// ---------------------------------------------------------------------------

template <typename S>
S variance_loss(const Mat<S>& z, const LossWeights<S>& w) {
  detail::check_batch_at_least(z, 2, "variance_loss");
  const Eigen::Index b = z.rows(), f = z.cols();
  Vec<S> mean = z.colwise().mean();
  S total = S(0);
  for (Eigen::Index j = 0; j < f; ++j) {
    S var = (z.col(j).array() - mean(j)).square().sum() / static_cast<S>(b - 1);
    S sd = std::sqrt(var + w.epsilon);
    if (w.gamma > sd) total += w.gamma - sd;
  }
  return total / static_cast<S>(f);
}

template <typename S>
S variance_loss_grad(const Mat<S>& z, const LossWeights<S>& w, Mat<S>* gz) {
  detail::check_batch_at_least(z, 2, "variance_loss");
  const Eigen::Index b = z.rows(), f = z.cols();
  Vec<S> mean = z.colwise().mean();
  if (gz) gz->setZero(b, f);
  S total = S(0);
  for (Eigen::Index j = 0; j < f; ++j) {
    auto centered = (z.col(j).array() - mean(j)).eval();
    S var = centered.square().sum() / static_cast<S>(b - 1);
    S sd = std::sqrt(var + w.epsilon);
    if (w.gamma > sd) {
      total += w.gamma - sd;
      if (gz) {
        // d/dz of -sqrt(var+eps)/F; the mean-chain term cancels exactly.
        S coef = S(-1) / (static_cast<S>(f) * sd * static_cast<S>(b - 1));
        gz->col(j) = (centered * coef).matrix();
      }
    }
  }
  return total / static_cast<S>(f);
}

// ---------------------------------------------------------------------------
// Covariance matrices, Eq.-style raw (unbiased) and normalized (NCM).
// ---------------------------------------------------------------------------

template <typename S>
Mat<S> covariance_matrix(const Mat<S>& z, CovarianceMode mode) {
  detail::check_batch_at_least(z, 2, "covariance_matrix");
  const Eigen::Index b = z.rows();
  Mat<S> centered = z.rowwise() - z.colwise().mean();
  if (mode == CovarianceMode::kRawVicreg) {
    return (centered.transpose() * centered) / static_cast<S>(b - 1);
  }
  Mat<S> unit = centered;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    S r = centered.col(j).norm();
    if (r <= S(detail::kNormStabilizer)) {
      warnings::emit("covariance_matrix: zero-norm centered column " + std::to_string(j) +
                     "; normalized entries for it are ~0");
    }
    unit.col(j) /= (r + S(detail::kNormStabilizer));
  }
  return unit.transpose() * unit;
}

// ---------------------------------------------------------------------------
// Feature-decorrelation loss on the covariance matrix off-diagonals.
// Raw mode divides by F, normalized mode by F^2.
// ---------------------------------------------------------------------------

template <typename S>
S fd_loss(const Mat<S>& z, CovarianceMode mode) {
  Mat<S> c = covariance_matrix(z, mode);
  const Eigen::Index f = c.cols();
  S acc = c.array().square().sum() - c.diagonal().array().square().sum();
  S denom = mode == CovarianceMode::kRawVicreg ? static_cast<S>(f)
                                               : static_cast<S>(f) * static_cast<S>(f);
  return acc / denom;
}

template <typename S>
S fd_loss_grad(const Mat<S>& z, CovarianceMode mode, Mat<S>* gz) {
  detail::check_batch_at_least(z, 2, "fd_loss");
  const Eigen::Index b = z.rows(), f = z.cols();
  Mat<S> centered = z.rowwise() - z.colwise().mean();
  S loss;
  Mat<S> d_centered;
  if (mode == CovarianceMode::kRawVicreg) {
    Mat<S> c = (centered.transpose() * centered) / static_cast<S>(b - 1);
    Mat<S> m = c * (S(2) / static_cast<S>(f));
    m.diagonal().setZero();
    loss = (c.array().square().sum() - c.diagonal().array().square().sum()) / static_cast<S>(f);
    // c is symmetric and so is m: d/d(centered) = centered * (m + m^T) / (b-1).
    d_centered = centered * (m + m.transpose()) / static_cast<S>(b - 1);
  } else {
    Vec<S> norms(f);
    Mat<S> unit = centered;
    for (Eigen::Index j = 0; j < f; ++j) {
      norms(j) = centered.col(j).norm();
      if (norms(j) <= S(detail::kNormStabilizer)) {
        warnings::emit("fd_loss: zero-norm centered column " + std::to_string(j));
      }
      unit.col(j) /= (norms(j) + S(detail::kNormStabilizer));
    }
    Mat<S> c = unit.transpose() * unit;
    S f2 = static_cast<S>(f) * static_cast<S>(f);
    Mat<S> m = c * (S(2) / f2);
    m.diagonal().setZero();
    loss = (c.array().square().sum() - c.diagonal().array().square().sum()) / f2;
    Mat<S> d_unit = unit * (m + m.transpose());
    d_centered.resize(b, f);
    for (Eigen::Index j = 0; j < f; ++j) {
      S r = norms(j);
      S rs = r + S(detail::kNormStabilizer);
      if (r <= S(detail::kNormStabilizer)) {
        d_centered.col(j).setZero();
        continue;
      }
      S dot = unit.col(j).dot(d_unit.col(j));
      d_centered.col(j) = d_unit.col(j) / rs - centered.col(j) * (dot / (r * rs));
    }
  }
  if (gz) {
    // Backprop through column centering.
    Vec<S> colmean = d_centered.colwise().mean();
    *gz = d_centered.rowwise() - colmean.transpose();
  }
  return loss;
}

// ---------------------------------------------------------------------------
// VIbCReg / VICReg total loss, Eq. (7) wiring.
// ---------------------------------------------------------------------------

template <typename S>
struct VibcregBreakdown {
  S similarity = S(0);
  S variance_a = S(0);
  S variance_b = S(0);
  S fd_a = S(0);
  S fd_b = S(0);
  S total = S(0);
};

template <typename S>
VibcregBreakdown<S> vibcreg_total_loss(const Mat<S>& z, const Mat<S>& z_prime,
                                       const LossWeights<S>& w, CovarianceMode mode) {
  detail::check_same_shape(z, z_prime, "vibcreg_total_loss");
  detail::check_batch_at_least(z, 2, "vibcreg_total_loss");
  VibcregBreakdown<S> out;
  out.similarity = similarity_loss(z, z_prime);
  out.variance_a = variance_loss(z, w);
  out.variance_b = variance_loss(z_prime, w);
  out.fd_a = fd_loss(z, mode);
  out.fd_b = fd_loss(z_prime, mode);
  out.total = w.lambda_sim * out.similarity + w.mu_var * (out.variance_a + out.variance_b) +
              w.nu_cov * (out.fd_a + out.fd_b);
  return out;
}

template <typename S>
VibcregBreakdown<S> vibcreg_total_loss_grad(const Mat<S>& z, const Mat<S>& z_prime,
                                            const LossWeights<S>& w, CovarianceMode mode,
                                            Mat<S>* gz, Mat<S>* gzp) {
  detail::check_same_shape(z, z_prime, "vibcreg_total_loss");
  detail::check_batch_at_least(z, 2, "vibcreg_total_loss");
  VibcregBreakdown<S> out;
  Mat<S> g_sim_a, g_sim_b, g_var_a, g_var_b, g_fd_a, g_fd_b;
  out.similarity = similarity_loss_grad(z, z_prime, &g_sim_a, &g_sim_b);
  out.variance_a = variance_loss_grad(z, w, &g_var_a);
  out.variance_b = variance_loss_grad(z_prime, w, &g_var_b);
  out.fd_a = fd_loss_grad(z, mode, &g_fd_a);
  out.fd_b = fd_loss_grad(z_prime, mode, &g_fd_b);
  out.total = w.lambda_sim * out.similarity + w.mu_var * (out.variance_a + out.variance_b) +
              w.nu_cov * (out.fd_a + out.fd_b);
  if (gz) *gz = w.lambda_sim * g_sim_a + w.mu_var * g_var_a + w.nu_cov * g_fd_a;
  if (gzp) *gzp = w.lambda_sim * g_sim_b + w.mu_var * g_var_b + w.nu_cov * g_fd_b;
  return out;
}

// ---------------------------------------------------------------------------
// Barlow Twins: cross-correlation of batch-standardized columns.
// Standardization uses the biased std so a perfectly standardized input
// yields exactly the identity cross-correlation.
// ---------------------------------------------------------------------------

namespace detail {

template <typename S>
struct Standardized {
  Mat<S> y;          // standardized columns
  Vec<S> sigma;      // biased std per column
  Vec<S> sigma_eff;  // sigma + stabilizer (the actual divisor)
};

template <typename S>
Standardized<S> standardize_columns(const Mat<S>& z, const char* op) {
  Standardized<S> out;
  const Eigen::Index b = z.rows(), f = z.cols();
  out.y.resize(b, f);
  out.sigma.resize(f);
  out.sigma_eff.resize(f);
  Vec<S> mean = z.colwise().mean();
  for (Eigen::Index j = 0; j < f; ++j) {
    auto centered = (z.col(j).array() - mean(j)).eval();
    S sigma = std::sqrt(centered.square().sum() / static_cast<S>(b));
    if (sigma <= S(kNormStabilizer)) {
      warnings::emit(std::string(op) + ": zero-variance column " + std::to_string(j) +
                     "; standardization stabilized");
    }
    out.sigma(j) = sigma;
    out.sigma_eff(j) = sigma + S(kNormStabilizer);
    out.y.col(j) = (centered / out.sigma_eff(j)).matrix();
  }
  return out;
}

// Backprop through y = (x - mean(x)) / (sigma + delta), sigma biased.
template <typename S>
Mat<S> standardize_backward(const Standardized<S>& s, const Mat<S>& dy) {
  const Eigen::Index b = s.y.rows(), f = s.y.cols();
  Mat<S> dx(b, f);
  for (Eigen::Index j = 0; j < f; ++j) {
    S mean_dy = dy.col(j).mean();
    if (s.sigma(j) <= S(kNormStabilizer)) {
      dx.col(j) = (dy.col(j).array() - mean_dy).matrix() / s.sigma_eff(j);
      continue;
    }
    S mean_dyy = (dy.col(j).array() * s.y.col(j).array()).mean();
    S ratio = s.sigma_eff(j) / s.sigma(j);
    dx.col(j) =
        ((dy.col(j).array() - mean_dy - s.y.col(j).array() * (ratio * mean_dyy)) / s.sigma_eff(j))
            .matrix();
  }
  return dx;
}

}  // namespace detail

template <typename S>
S barlow_twins_loss(const Mat<S>& z, const Mat<S>& z_prime, S lam) {
  detail::check_same_shape(z, z_prime, "barlow_twins_loss");
  detail::check_batch_at_least(z, 2, "barlow_twins_loss");
  const S b = static_cast<S>(z.rows());
  auto sa = detail::standardize_columns(z, "barlow_twins_loss");
  auto sb = detail::standardize_columns(z_prime, "barlow_twins_loss");
  Mat<S> m = (sa.y.transpose() * sb.y) / b;
  S on = (Vec<S>::Ones(m.rows()) - m.diagonal()).array().square().sum();
  S off = m.array().square().sum() - m.diagonal().array().square().sum();
  return on + lam * off;
}

template <typename S>
S barlow_twins_loss_grad(const Mat<S>& z, const Mat<S>& z_prime, S lam, Mat<S>* gz, Mat<S>* gzp) {
  detail::check_same_shape(z, z_prime, "barlow_twins_loss");
  detail::check_batch_at_least(z, 2, "barlow_twins_loss");
  const S b = static_cast<S>(z.rows());
  auto sa = detail::standardize_columns(z, "barlow_twins_loss");
  auto sb = detail::standardize_columns(z_prime, "barlow_twins_loss");
  Mat<S> m = (sa.y.transpose() * sb.y) / b;
  S on = (Vec<S>::Ones(m.rows()) - m.diagonal()).array().square().sum();
  S off = m.array().square().sum() - m.diagonal().array().square().sum();
  Mat<S> dm = m * (S(2) * lam);
  dm.diagonal() = (m.diagonal().array() - S(1)) * S(2);
  if (gz) *gz = detail::standardize_backward(sa, Mat<S>((sb.y * dm.transpose()) / b));
  if (gzp) *gzp = detail::standardize_backward(sb, Mat<S>((sa.y * dm) / b));
  return on + lam * off;
}

// ---------------------------------------------------------------------------
// InfoNCE / NT-Xent over the 2B-view batch with l2-normalized rows.
// ---------------------------------------------------------------------------

template <typename S>
S info_nce_loss_grad(const Mat<S>& z, const Mat<S>& z_prime, S tau, Mat<S>* gz, Mat<S>* gzp) {
  detail::check_same_shape(z, z_prime, "info_nce_loss");
  detail::check_batch_at_least(z, 2, "info_nce_loss");
  require(tau > S(0), "info_nce_loss: tau must be positive");
  const Eigen::Index b = z.rows(), f = z.cols();
  const Eigen::Index n = 2 * b;

  Mat<S> stacked(n, f);
  stacked.topRows(b) = z;
  stacked.bottomRows(b) = z_prime;
  Vec<S> norms(n);
  Mat<S> unit(n, f);
  for (Eigen::Index i = 0; i < n; ++i) {
    norms(i) = stacked.row(i).norm();
    if (norms(i) <= S(detail::kNormStabilizer)) {
      warnings::emit("info_nce_loss: zero-norm row " + std::to_string(i));
    }
    unit.row(i) = stacked.row(i) / (norms(i) + S(detail::kNormStabilizer));
  }
  Mat<S> logits = (unit * unit.transpose()) / tau;

  S loss = S(0);
  Mat<S> dlogits = Mat<S>::Zero(n, n);
  const S inv_n = S(1) / static_cast<S>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index pos = (i + b) % n;
    S maxv = -std::numeric_limits<S>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) maxv = std::max(maxv, logits(i, j));
    S denom = S(0);
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) denom += std::exp(logits(i, j) - maxv);
    loss += inv_n * (std::log(denom) + maxv - logits(i, pos));
    if (gz || gzp) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        S q = std::exp(logits(i, j) - maxv) / denom;
        dlogits(i, j) += inv_n * (q - (j == pos ? S(1) : S(0)));
      }
    }
  }
  if (gz || gzp) {
    Mat<S> dunit = ((dlogits + dlogits.transpose()) * unit) / tau;
    Mat<S> dstacked(n, f);
    for (Eigen::Index i = 0; i < n; ++i) {
      S r = norms(i), rs = r + S(detail::kNormStabilizer);
      if (r <= S(detail::kNormStabilizer)) {
        dstacked.row(i).setZero();
        continue;
      }
      S dot = unit.row(i).dot(dunit.row(i));
      dstacked.row(i) = dunit.row(i) / rs - stacked.row(i) * (dot / (r * rs));
    }
    if (gz) *gz = dstacked.topRows(b);
    if (gzp) *gzp = dstacked.bottomRows(b);
  }
  return loss;
}

template <typename S>
S info_nce_loss(const Mat<S>& z, const Mat<S>& z_prime, S tau) {
  return info_nce_loss_grad<S>(z, z_prime, tau, nullptr, nullptr);
}

// ---------------------------------------------------------------------------
// BYOL/SimSiam similarity: mean over rows of 2 - 2*cos(p, z). The target
// batch carries no gradient; the stop-gradient contract is the caller's.
// ---------------------------------------------------------------------------

template <typename S>
S normalized_mse_loss_grad(const Mat<S>& p, const Mat<S>& z_target, Mat<S>* gp) {
  detail::check_same_shape(p, z_target, "normalized_mse_loss");
  detail::check_batch_at_least(p, 1, "normalized_mse_loss");
  const Eigen::Index b = p.rows();
  if (gp) gp->setZero(b, p.cols());
  S loss = S(0);
  for (Eigen::Index i = 0; i < b; ++i) {
    S rp = p.row(i).norm(), rz = z_target.row(i).norm();
    if (rp <= S(detail::kNormStabilizer) || rz <= S(detail::kNormStabilizer)) {
      warnings::emit("normalized_mse_loss: zero-norm row " + std::to_string(i));
    }
    S rps = rp + S(detail::kNormStabilizer), rzs = rz + S(detail::kNormStabilizer);
    auto phat = (p.row(i) / rps).eval();
    auto zhat = (z_target.row(i) / rzs).eval();
    S cos = phat.dot(zhat);
    loss += S(2) - S(2) * cos;
    if (gp && rp > S(detail::kNormStabilizer)) {
      gp->row(i) = (zhat - phat * (cos * rps / rp)) * (S(-2) / (static_cast<S>(b) * rps));
    }
  }
  return loss / static_cast<S>(b);
}

template <typename S>
S normalized_mse_loss(const Mat<S>& p, const Mat<S>& z_target) {
  return normalized_mse_loss_grad<S>(p, z_target, nullptr);
}

// ---------------------------------------------------------------------------
// TNC discriminator objective with positive-unlabeled weighting of the
// negative pairs: (bce(pos,1) + (1-w) bce(neg,0) + w bce(neg,1)) / 2.
// ---------------------------------------------------------------------------

namespace detail {
template <typename S>
S stable_bce_with_logits(S x, S y) {
  return std::max(x, S(0)) - x * y + std::log1p(std::exp(-std::abs(x)));
}
template <typename S>
S sigmoid(S x) {
  return S(1) / (S(1) + std::exp(-x));
}
}  // namespace detail

template <typename S>
S tnc_loss_grad(const Vec<S>& disc_pos, const Vec<S>& disc_neg, S w, Vec<S>* gpos, Vec<S>* gneg) {
  require(disc_pos.size() > 0 && disc_neg.size() > 0, "tnc_loss: empty logits");
  require(w >= S(0) && w <= S(1), "tnc_loss: w must lie in [0,1]");
  const S np = static_cast<S>(disc_pos.size()), nn = static_cast<S>(disc_neg.size());
  S pos_term = S(0), neg_term = S(0);
  if (gpos) gpos->resize(disc_pos.size());
  if (gneg) gneg->resize(disc_neg.size());
  for (Eigen::Index i = 0; i < disc_pos.size(); ++i) {
    pos_term += detail::stable_bce_with_logits(disc_pos(i), S(1));
    if (gpos) (*gpos)(i) = (detail::sigmoid(disc_pos(i)) - S(1)) / (S(2) * np);
  }
  for (Eigen::Index i = 0; i < disc_neg.size(); ++i) {
    neg_term += (S(1) - w) * detail::stable_bce_with_logits(disc_neg(i), S(0)) +
                w * detail::stable_bce_with_logits(disc_neg(i), S(1));
    if (gneg) (*gneg)(i) = (detail::sigmoid(disc_neg(i)) - w) / (S(2) * nn);
  }
  return (pos_term / np + neg_term / nn) / S(2);
}

template <typename S>
S tnc_loss(const Vec<S>& disc_pos, const Vec<S>& disc_neg, S w) {
  return tnc_loss_grad<S>(disc_pos, disc_neg, w, nullptr, nullptr);
}

// ---------------------------------------------------------------------------
// Collapse diagnostics: mean absolute off-diagonal of the normalized
// covariance, and mean per-feature std (unbiased).
// ---------------------------------------------------------------------------

template <typename S>
S fd_metric(const Mat<S>& z) {
  Mat<S> c = covariance_matrix(z, CovarianceMode::kNormalizedVibcreg);
  const Eigen::Index f = c.cols();
  S acc = c.array().abs().sum() - c.diagonal().array().abs().sum();
  return acc / (static_cast<S>(f) * static_cast<S>(f));
}

template <typename S>
S fce_metric(const Mat<S>& z) {
  detail::check_batch_at_least(z, 2, "fce_metric");
  const Eigen::Index b = z.rows(), f = z.cols();
  Vec<S> mean = z.colwise().mean();
  S acc = S(0);
  for (Eigen::Index j = 0; j < f; ++j) {
    S var = (z.col(j).array() - mean(j)).square().sum() / static_cast<S>(b - 1);
    acc += std::sqrt(var);
  }
  return acc / static_cast<S>(f);
}

}  // namespace vibcreg::losses
