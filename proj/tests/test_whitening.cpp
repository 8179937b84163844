#include "vibcreg/whitening.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "test_util.hpp"
#include "vibcreg/nn/layers.hpp"

using namespace vibcreg;
using namespace vibcreg::whitening;
using testutil::random_matrix;

namespace {

// Exactly whitened batch: zero column means, (1/B) X^T X = I.
MatD make_whitened(int b, int f, std::uint64_t seed) {
  MatD x = random_matrix(b, f, seed);
  x.rowwise() -= x.colwise().mean();
  MatD sigma = (x.transpose() * x) / double(b);
  Eigen::SelfAdjointEigenSolver<MatD> eig(sigma);
  MatD inv_sqrt = eig.eigenvectors() *
                  eig.eigenvalues().cwiseMax(1e-18).cwiseSqrt().cwiseInverse().asDiagonal() *
                  eig.eigenvectors().transpose();
  return x * inv_sqrt;
}

double mean_abs_offdiag_cov(const MatD& y) {
  MatD c = (y.rowwise() - y.colwise().mean());
  MatD cov = (c.transpose() * c) / double(y.rows());
  double acc = 0.0;
  int f = int(y.cols());
  for (int i = 0; i < f; ++i)
    for (int j = 0; j < f; ++j)
      if (i != j) acc += std::abs(cov(i, j));
  return acc / double(f * (f - 1));
}

}  // namespace

TEST_CASE("whitened input is a fixed point at any iteration count") {
  MatD x = make_whitened(64, 16, 7);
  for (int iters : {1, 2, 3, 5, 8}) {
    IterNormConfig cfg;
    cfg.iterations = iters;
    cfg.group_size = 16;
    IterNormCache<double> cache;
    MatD y = iternorm_forward_train<double>(x, cfg, &cache, nullptr, nullptr);
    CHECK((y - x).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("group size 1 reduces to batch standardization") {
  MatD x = random_matrix(32, 6, 8, 2.5);
  x.array() += 3.0;
  IterNormConfig cfg;
  cfg.group_size = 1;
  IterNormCache<double> cache;
  MatD y = iternorm_forward_train<double>(x, cfg, &cache, nullptr, nullptr);
  for (int j = 0; j < y.cols(); ++j) {
    double mu = y.col(j).mean();
    double sd = std::sqrt((y.col(j).array() - mu).square().sum() / y.rows());
    CHECK(std::abs(mu) < 1e-9);
    CHECK(sd == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("whitening convergence on random gaussian batches") {
  for (int f : {16, 64}) {
    IterNormConfig cfg;
    cfg.group_size = f;
    MatD x = random_matrix(256, f, 100 + f);
    double prev = std::numeric_limits<double>::infinity();
    double last = 0.0;
    for (int t = 1; t <= 5; ++t) {
      cfg.iterations = t;
      IterNormCache<double> cache;
      MatD y = iternorm_forward_train<double>(x, cfg, &cache, nullptr, nullptr);
      double off = mean_abs_offdiag_cov(y);
      CHECK(off <= prev * 1.10);  // monotone within 10% noise tolerance
      prev = off;
      last = off;
    }
    CHECK(last < 0.05);
  }
}

TEST_CASE("iternorm input gradient matches finite differences at 1e-3") {
  IterNormConfig cfg;
  cfg.iterations = 5;
  cfg.group_size = 8;
  MatD x = random_matrix(16, 8, 11);
  MatD r = random_matrix(16, 8, 12);  // fixed linear functional
  auto f = [&](const MatD& m) {
    IterNormCache<double> cache;
    MatD y = iternorm_forward_train<double>(m, cfg, &cache, nullptr, nullptr);
    return (y.array() * r.array()).sum();
  };
  IterNormCache<double> cache;
  iternorm_forward_train<double>(x, cfg, &cache, nullptr, nullptr);
  MatD analytic = iternorm_backward<double>(cache, cfg, r);
  MatD numeric = testutil::numeric_grad(f, x, 1e-5);
  CHECK(testutil::grad_rel_err(analytic, numeric) < 1e-3);

  // Also with grouped features (two groups of 4).
  cfg.group_size = 4;
  IterNormCache<double> cache2;
  iternorm_forward_train<double>(x, cfg, &cache2, nullptr, nullptr);
  MatD analytic2 = iternorm_backward<double>(cache2, cfg, r);
  MatD numeric2 = testutil::numeric_grad(f, x, 1e-5);
  CHECK(testutil::grad_rel_err(analytic2, numeric2) < 1e-3);
}

TEST_CASE("iternorm layer: training errors and inference determinism") {
  IterNormConfig cfg;
  cfg.group_size = 4;
  nn::IterNorm layer(8, cfg, "itn");

  MatF single = MatF::Random(1, 8);
  CHECK_THROWS_AS(layer.forward(single, true), ContractError);

  Rng rng(3);
  for (int i = 0; i < 5; ++i) {
    MatF batch(16, 8);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 8; ++c) batch(r, c) = rng.normal(0.0f, 1.0f + 0.1f * c);
    layer.forward(batch, true);
  }

  // A shared row maps identically regardless of batch company.
  MatF row = MatF::Random(1, 8);
  MatF batch_a(4, 8), batch_b(7, 8);
  batch_a.setRandom();
  batch_b.setRandom();
  batch_a.row(2) = row.row(0);
  batch_b.row(5) = row.row(0);
  MatF ya = layer.forward(batch_a, false);
  MatF yb = layer.forward(batch_b, false);
  CHECK((ya.row(2) - yb.row(5)).cwiseAbs().maxCoeff() < 1e-6f);
}

TEST_CASE("iternorm layer forward finite on degenerate zero input in inference") {
  IterNormConfig cfg;
  cfg.group_size = 8;
  nn::IterNorm layer(8, cfg, "itn");
  MatF zeros = MatF::Zero(8, 8);
  MatF y = layer.forward(zeros, false);
  CHECK(y.allFinite());
}

TEST_CASE("power_for_group keeps the normalized spectrum within (0, 2]") {
  CHECK(power_for_group(1) == 2);
  CHECK(power_for_group(4) == 2);
  CHECK(power_for_group(16) == 4);
  for (int g : {1, 2, 4, 8, 16, 64, 256}) {
    int k = power_for_group(g);
    CHECK(std::pow(double(g), 1.0 / k) <= 2.0 + 1e-12);
  }
}
