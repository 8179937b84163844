// Shared helpers for the test suites: deterministic random matrices, a
// central-difference gradient checker and brute-force double-loop oracles
// kept deliberately independent of the library implementations.
#pragma once

#include "vibcreg/common.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testutil {

using vibcreg::MatD;
using vibcreg::VecD;

inline MatD random_matrix(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, scale);
  MatD m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = d(gen);
  return m;
}

inline double rel_err(double a, double b) {
  double denom = std::max({std::abs(a), std::abs(b), 1e-12});
  return std::abs(a - b) / denom;
}

// Central finite differences of a scalar function w.r.t. one matrix argument.
inline MatD numeric_grad(const std::function<double(const MatD&)>& f, MatD x,
                         double step = 1e-5) {
  MatD g(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double keep = x(i, j);
      x(i, j) = keep + step;
      double up = f(x);
      x(i, j) = keep - step;
      double down = f(x);
      x(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * step);
    }
  }
  return g;
}

inline double grad_rel_err(const MatD& analytic, const MatD& numeric) {
  double denom = std::max({numeric.norm(), analytic.norm(), 1e-12});
  return (analytic - numeric).norm() / denom;
}

// ---------------------------------------------------------------------------
// Brute-force oracles (plain index loops only).
// ---------------------------------------------------------------------------

inline double oracle_similarity(const MatD& z, const MatD& zp) {
  double acc = 0.0;
  for (int b = 0; b < z.rows(); ++b)
    for (int f = 0; f < z.cols(); ++f) acc += (z(b, f) - zp(b, f)) * (z(b, f) - zp(b, f));
  return acc / z.rows();
}

inline double oracle_variance(const MatD& z, double gamma, double eps) {
  const int B = int(z.rows()), F = int(z.cols());
  double total = 0.0;
  for (int f = 0; f < F; ++f) {
    double mu = 0.0;
    for (int b = 0; b < B; ++b) mu += z(b, f);
    mu /= B;
    double var = 0.0;
    for (int b = 0; b < B; ++b) var += (z(b, f) - mu) * (z(b, f) - mu);
    var /= (B - 1);
    double term = gamma - std::sqrt(var + eps);
    if (term > 0) total += term;
  }
  return total / F;
}

inline MatD oracle_cov_raw(const MatD& z) {
  const int B = int(z.rows()), F = int(z.cols());
  std::vector<double> mu(F, 0.0);
  for (int f = 0; f < F; ++f) {
    for (int b = 0; b < B; ++b) mu[f] += z(b, f);
    mu[f] /= B;
  }
  MatD c(F, F);
  for (int i = 0; i < F; ++i)
    for (int j = 0; j < F; ++j) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b) acc += (z(b, i) - mu[i]) * (z(b, j) - mu[j]);
      c(i, j) = acc / (B - 1);
    }
  return c;
}

inline MatD oracle_cov_normalized(const MatD& z) {
  const int B = int(z.rows()), F = int(z.cols());
  std::vector<double> mu(F, 0.0), norm(F, 0.0);
  for (int f = 0; f < F; ++f) {
    for (int b = 0; b < B; ++b) mu[f] += z(b, f);
    mu[f] /= B;
    for (int b = 0; b < B; ++b) norm[f] += (z(b, f) - mu[f]) * (z(b, f) - mu[f]);
    norm[f] = std::sqrt(norm[f]);
  }
  MatD c(F, F);
  for (int i = 0; i < F; ++i)
    for (int j = 0; j < F; ++j) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b) acc += (z(b, i) - mu[i]) * (z(b, j) - mu[j]);
      c(i, j) = acc / (norm[i] * norm[j]);
    }
  return c;
}

inline double oracle_fd_raw(const MatD& z) {
  MatD c = oracle_cov_raw(z);
  double acc = 0.0;
  for (int i = 0; i < c.rows(); ++i)
    for (int j = 0; j < c.cols(); ++j)
      if (i != j) acc += c(i, j) * c(i, j);
  return acc / c.cols();
}

inline double oracle_fd_normalized(const MatD& z) {
  MatD c = oracle_cov_normalized(z);
  double acc = 0.0;
  for (int i = 0; i < c.rows(); ++i)
    for (int j = 0; j < c.cols(); ++j)
      if (i != j) acc += c(i, j) * c(i, j);
  return acc / double(c.cols() * c.cols());
}

inline double oracle_fd_metric(const MatD& z) {
  MatD c = oracle_cov_normalized(z);
  double acc = 0.0;
  for (int i = 0; i < c.rows(); ++i)
    for (int j = 0; j < c.cols(); ++j)
      if (i != j) acc += std::abs(c(i, j));
  return acc / double(c.cols() * c.cols());
}

inline double oracle_fce_metric(const MatD& z) {
  const int B = int(z.rows()), F = int(z.cols());
  double acc = 0.0;
  for (int f = 0; f < F; ++f) {
    double mu = 0.0;
    for (int b = 0; b < B; ++b) mu += z(b, f);
    mu /= B;
    double var = 0.0;
    for (int b = 0; b < B; ++b) var += (z(b, f) - mu) * (z(b, f) - mu);
    acc += std::sqrt(var / (B - 1));
  }
  return acc / F;
}

inline double oracle_barlow_twins(const MatD& z, const MatD& zp, double lam) {
  const int B = int(z.rows()), F = int(z.cols());
  auto standardize = [&](const MatD& m) {
    MatD y(B, F);
    for (int f = 0; f < F; ++f) {
      double mu = 0.0;
      for (int b = 0; b < B; ++b) mu += m(b, f);
      mu /= B;
      double var = 0.0;
      for (int b = 0; b < B; ++b) var += (m(b, f) - mu) * (m(b, f) - mu);
      double sd = std::sqrt(var / B);
      for (int b = 0; b < B; ++b) y(b, f) = (m(b, f) - mu) / sd;
    }
    return y;
  };
  MatD a = standardize(z), bm = standardize(zp);
  double loss = 0.0;
  for (int i = 0; i < F; ++i)
    for (int j = 0; j < F; ++j) {
      double m = 0.0;
      for (int b = 0; b < B; ++b) m += a(b, i) * bm(b, j);
      m /= B;
      if (i == j)
        loss += (1.0 - m) * (1.0 - m);
      else
        loss += lam * m * m;
    }
  return loss;
}

inline double oracle_info_nce(const MatD& z, const MatD& zp, double tau) {
  const int B = int(z.rows()), F = int(z.cols());
  const int N = 2 * B;
  MatD s(N, F);
  s.topRows(B) = z;
  s.bottomRows(B) = zp;
  for (int i = 0; i < N; ++i) s.row(i) /= s.row(i).norm();
  double loss = 0.0;
  for (int i = 0; i < N; ++i) {
    int pos = (i + B) % N;
    double denom = 0.0;
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      denom += std::exp(s.row(i).dot(s.row(j)) / tau);
    }
    loss += -std::log(std::exp(s.row(i).dot(s.row(pos)) / tau) / denom);
  }
  return loss / N;
}

inline double oracle_normalized_mse(const MatD& p, const MatD& z) {
  double loss = 0.0;
  for (int b = 0; b < p.rows(); ++b) {
    double cos = p.row(b).dot(z.row(b)) / (p.row(b).norm() * z.row(b).norm());
    loss += 2.0 - 2.0 * cos;
  }
  return loss / p.rows();
}

inline double oracle_tnc(const VecD& pos, const VecD& neg, double w) {
  auto bce = [](double x, double y) {
    double p = 1.0 / (1.0 + std::exp(-x));
    return -y * std::log(p) - (1.0 - y) * std::log(1.0 - p);
  };
  double lp = 0.0, ln = 0.0;
  for (int i = 0; i < pos.size(); ++i) lp += bce(pos(i), 1.0);
  for (int i = 0; i < neg.size(); ++i) ln += (1.0 - w) * bce(neg(i), 0.0) + w * bce(neg(i), 1.0);
  return (lp / pos.size() + ln / neg.size()) / 2.0;
}

}  // namespace testutil
