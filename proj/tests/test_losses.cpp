#include "vibcreg/losses.hpp"

#include <doctest.h>

#include "test_util.hpp"

using namespace vibcreg;
using namespace vibcreg::losses;
using testutil::random_matrix;

namespace {
LossWeights<double> default_weights() { return LossWeights<double>{}; }
}  // namespace

TEST_CASE("similarity loss basics") {
  MatD z = random_matrix(5, 3, 1);
  CHECK(similarity_loss<double>(z, z) == doctest::Approx(0.0));

  MatD a(2, 2), b(2, 2);
  a << 1, 0, 0, 1;
  b.setZero();
  CHECK(similarity_loss<double>(a, b) == doctest::Approx(1.0));

  MatD z8 = random_matrix(8, 4, 2), zp8 = random_matrix(8, 4, 3);
  CHECK(testutil::rel_err(similarity_loss<double>(z8, zp8),
                          testutil::oracle_similarity(z8, zp8)) < 1e-12);

  MatD bad = random_matrix(8, 5, 4);
  CHECK_THROWS_AS(similarity_loss<double>(z8, bad), ContractError);
}

TEST_CASE("variance loss basics") {
  auto w = default_weights();
  // Columns with std >= gamma contribute nothing.
  MatD wide = random_matrix(64, 4, 5, 10.0);
  CHECK(variance_loss<double>(wide, w) == doctest::Approx(0.0));

  // All-constant batch: every feature contributes 1 - sqrt(eps) = 0.99.
  MatD flat = MatD::Constant(6, 3, 2.5);
  CHECK(variance_loss<double>(flat, w) == doctest::Approx(0.99));

  MatD z = random_matrix(8, 4, 6, 0.4);
  CHECK(testutil::rel_err(variance_loss<double>(z, w),
                          testutil::oracle_variance(z, w.gamma, w.epsilon)) < 1e-12);

  MatD single = random_matrix(1, 4, 7);
  CHECK_THROWS_AS(variance_loss<double>(single, w), ContractError);
}

TEST_CASE("covariance matrix both modes") {
  // Orthogonal centered columns -> zero off-diagonals in both modes.
  MatD z(4, 2);
  z << 1, 1, -1, 1, 1, -1, -1, -1;
  MatD raw = covariance_matrix<double>(z, CovarianceMode::kRawVicreg);
  MatD ncm = covariance_matrix<double>(z, CovarianceMode::kNormalizedVibcreg);
  CHECK(std::abs(raw(0, 1)) < 1e-12);
  CHECK(std::abs(ncm(0, 1)) < 1e-12);
  CHECK(ncm(0, 0) == doctest::Approx(1.0));

  // Duplicated column -> perfect correlation.
  MatD dup(4, 2);
  dup << 0.3, 0.3, -1.2, -1.2, 0.7, 0.7, 2.0, 2.0;
  MatD c = covariance_matrix<double>(dup, CovarianceMode::kNormalizedVibcreg);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(c(i, j) == doctest::Approx(1.0).epsilon(1e-9));

  MatD z8 = random_matrix(8, 4, 8);
  CHECK((covariance_matrix<double>(z8, CovarianceMode::kRawVicreg) - testutil::oracle_cov_raw(z8))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  CHECK((covariance_matrix<double>(z8, CovarianceMode::kNormalizedVibcreg) -
         testutil::oracle_cov_normalized(z8))
            .cwiseAbs()
            .maxCoeff() < 1e-10);

  // Degenerate constant column warns but does not crash.
  auto before = warnings::count();
  MatD degen = random_matrix(6, 2, 9);
  degen.col(1).setConstant(3.0);
  MatD cd = covariance_matrix<double>(degen, CovarianceMode::kNormalizedVibcreg);
  CHECK(warnings::count() > before);
  CHECK(std::isfinite(cd(0, 1)));
}

TEST_CASE("fd loss values and ranges") {
  MatD z(4, 2);
  z << 1, 1, -1, 1, 1, -1, -1, -1;
  CHECK(fd_loss<double>(z, CovarianceMode::kRawVicreg) == doctest::Approx(0.0));
  CHECK(fd_loss<double>(z, CovarianceMode::kNormalizedVibcreg) == doctest::Approx(0.0));

  MatD dup(4, 2);
  dup << 0.3, 0.3, -1.2, -1.2, 0.7, 0.7, 2.0, 2.0;
  CHECK(fd_loss<double>(dup, CovarianceMode::kNormalizedVibcreg) ==
        doctest::Approx(0.5).epsilon(1e-9));

  MatD z8 = random_matrix(8, 4, 10);
  CHECK(testutil::rel_err(fd_loss<double>(z8, CovarianceMode::kRawVicreg),
                          testutil::oracle_fd_raw(z8)) < 1e-10);

  // Normalized fd is bounded by (F-1)/F.
  for (int trial = 0; trial < 20; ++trial) {
    MatD r = random_matrix(6, 5, 100 + trial);
    double v = fd_loss<double>(r, CovarianceMode::kNormalizedVibcreg);
    CHECK(v >= 0.0);
    CHECK(v <= 4.0 / 5.0 + 1e-12);
  }
}

TEST_CASE("feature scale: raw fd scales as k^4, normalized is invariant") {
  MatD z = random_matrix(8, 4, 11);
  const double k = 3.0;
  double raw = fd_loss<double>(z, CovarianceMode::kRawVicreg);
  double raw_scaled = fd_loss<double>(MatD(k * z), CovarianceMode::kRawVicreg);
  CHECK(testutil::rel_err(raw_scaled, std::pow(k, 4) * raw) < 1e-10);

  double ncm = fd_loss<double>(z, CovarianceMode::kNormalizedVibcreg);
  double ncm_scaled = fd_loss<double>(MatD(k * z), CovarianceMode::kNormalizedVibcreg);
  CHECK(testutil::rel_err(ncm_scaled, ncm) < 1e-10);
}

TEST_CASE("vibcreg total loss composition") {
  auto w = default_weights();
  // Identical views with unit per-column std and decorrelated columns -> 0.
  // Columns constructed orthogonal after centering, then rescaled to std 1.
  MatD z(4, 2);
  z << 1, 1, -1, 1, 1, -1, -1, -1;
  for (int j = 0; j < 2; ++j) {
    double sd = std::sqrt((z.col(j).array() - z.col(j).mean()).square().sum() / 3.0);
    z.col(j) /= sd;
  }
  auto r = vibcreg_total_loss<double>(z, z, w, CovarianceMode::kNormalizedVibcreg);
  CHECK(std::abs(r.total) < 1e-9);

  LossWeights<double> zero;
  zero.lambda_sim = zero.mu_var = zero.nu_cov = 0;
  MatD a = random_matrix(6, 3, 12), b = random_matrix(6, 3, 13);
  CHECK(vibcreg_total_loss<double>(a, b, zero, CovarianceMode::kRawVicreg).total ==
        doctest::Approx(0.0));

  // Term-wise oracle sum at the part-1 weights.
  MatD z8 = random_matrix(8, 4, 14), zp8 = random_matrix(8, 4, 15);
  auto out = vibcreg_total_loss<double>(z8, zp8, w, CovarianceMode::kNormalizedVibcreg);
  double expect = 25.0 * testutil::oracle_similarity(z8, zp8) +
                  25.0 * (testutil::oracle_variance(z8, 1.0, 1e-4) +
                          testutil::oracle_variance(zp8, 1.0, 1e-4)) +
                  200.0 * (testutil::oracle_fd_normalized(z8) +
                           testutil::oracle_fd_normalized(zp8));
  CHECK(testutil::rel_err(out.total, expect) < 1e-10);
}

TEST_CASE("barlow twins loss") {
  // Perfectly standardized decorrelated columns -> identity cross-correlation.
  MatD z(4, 2);
  z << 1, 1, -1, 1, 1, -1, -1, -1;  // orthogonal, mean 0, biased std 1
  CHECK(barlow_twins_loss<double>(z, z, 5e-3) == doctest::Approx(0.0).epsilon(1e-9));

  // lam = 0 keeps only the invariance term.
  MatD a = random_matrix(16, 4, 16), b = random_matrix(16, 4, 17);
  double inv_only = barlow_twins_loss<double>(a, b, 0.0);
  double with_off = barlow_twins_loss<double>(a, b, 5e-3);
  CHECK(with_off > inv_only);

  CHECK(testutil::rel_err(barlow_twins_loss<double>(a, b, 5e-3),
                          testutil::oracle_barlow_twins(a, b, 5e-3)) < 1e-10);
}

TEST_CASE("info nce loss") {
  // Four mutually orthogonal unit rows at tau=1: every anchor sees equal
  // logits -> loss = ln 3.
  MatD z(2, 4), zp(2, 4);
  z << 1, 0, 0, 0, 0, 1, 0, 0;
  zp << 0, 0, 1, 0, 0, 0, 0, 1;
  CHECK(info_nce_loss<double>(z, zp, 1.0) == doctest::Approx(std::log(3.0)).epsilon(1e-12));

  MatD a = random_matrix(8, 4, 18), b = random_matrix(8, 4, 19);
  CHECK(testutil::rel_err(info_nce_loss<double>(a, b, 0.1),
                          testutil::oracle_info_nce(a, b, 0.1)) < 1e-10);

  MatD one = random_matrix(1, 4, 20);
  CHECK_THROWS_AS(info_nce_loss<double>(one, one, 0.1), ContractError);
}

TEST_CASE("normalized mse loss") {
  MatD p = random_matrix(6, 5, 21);
  CHECK(std::abs(normalized_mse_loss<double>(p, p)) < 1e-9);
  CHECK(normalized_mse_loss<double>(p, MatD(-p)) == doctest::Approx(4.0).epsilon(1e-9));
  MatD q = random_matrix(6, 5, 22);
  double v = normalized_mse_loss<double>(p, q);
  CHECK(testutil::rel_err(v, testutil::oracle_normalized_mse(p, q)) < 1e-12);
  CHECK(v >= 0.0);
  CHECK(v <= 4.0);
}

TEST_CASE("tnc loss") {
  VecD big = VecD::Constant(4, 60.0), small = VecD::Constant(4, -60.0);
  CHECK(tnc_loss<double>(big, small, 0.0) == doctest::Approx(0.0).epsilon(1e-12));

  // w = 0.5 makes the negative term symmetric in the label.
  VecD neg = testutil::random_matrix(5, 1, 23).col(0);
  VecD pos = testutil::random_matrix(5, 1, 24).col(0);
  double v1 = tnc_loss<double>(pos, neg, 0.5);
  double v2 = tnc_loss<double>(pos, VecD(-neg), 0.5);
  CHECK(testutil::rel_err(v1, v2) < 1e-12);

  CHECK(testutil::rel_err(tnc_loss<double>(pos, neg, 0.05),
                          testutil::oracle_tnc(pos, neg, 0.05)) < 1e-12);
}

TEST_CASE("fd and fce metrics") {
  MatD dup(4, 2);
  dup << 0.3, 0.3, -1.2, -1.2, 0.7, 0.7, 2.0, 2.0;
  CHECK(fd_metric<double>(dup) == doctest::Approx(0.5).epsilon(1e-9));

  MatD flat = MatD::Constant(5, 3, 1.0);
  CHECK(fce_metric<double>(flat) == doctest::Approx(0.0));

  MatD z = random_matrix(16, 8, 25);
  CHECK(testutil::rel_err(fd_metric<double>(z), testutil::oracle_fd_metric(z)) < 1e-10);
  CHECK(testutil::rel_err(fce_metric<double>(z), testutil::oracle_fce_metric(z)) < 1e-10);
}

TEST_CASE("oracle equivalence over 200 random instances") {
  std::mt19937_64 gen(99);
  auto w = default_weights();
  for (int trial = 0; trial < 200; ++trial) {
    int B = 2 + int(gen() % 15);
    int F = 1 + int(gen() % 8);
    MatD z = random_matrix(B, F, gen(), 0.8);
    MatD zp = random_matrix(B, F, gen(), 0.8);
    CHECK(testutil::rel_err(similarity_loss<double>(z, zp),
                            testutil::oracle_similarity(z, zp)) < 1e-8);
    CHECK(testutil::rel_err(variance_loss<double>(z, w),
                            testutil::oracle_variance(z, w.gamma, w.epsilon)) < 1e-8);
    CHECK(testutil::rel_err(fd_loss<double>(z, CovarianceMode::kRawVicreg),
                            testutil::oracle_fd_raw(z)) < 1e-8);
    CHECK(testutil::rel_err(fd_loss<double>(z, CovarianceMode::kNormalizedVibcreg),
                            testutil::oracle_fd_normalized(z)) < 1e-8);
    CHECK(testutil::rel_err(barlow_twins_loss<double>(z, zp, 5e-3),
                            testutil::oracle_barlow_twins(z, zp, 5e-3)) < 1e-8);
    CHECK(testutil::rel_err(info_nce_loss<double>(z, zp, 0.1),
                            testutil::oracle_info_nce(z, zp, 0.1)) < 1e-8);
    CHECK(testutil::rel_err(normalized_mse_loss<double>(z, zp),
                            testutil::oracle_normalized_mse(z, zp)) < 1e-8);
    CHECK(testutil::rel_err(fd_metric<double>(z), testutil::oracle_fd_metric(z)) < 1e-8);
    CHECK(testutil::rel_err(fce_metric<double>(z), testutil::oracle_fce_metric(z)) < 1e-8);
    auto r = vibcreg_total_loss<double>(z, zp, w, CovarianceMode::kNormalizedVibcreg);
    double expect =
        w.lambda_sim * testutil::oracle_similarity(z, zp) +
        w.mu_var * (testutil::oracle_variance(z, w.gamma, w.epsilon) +
                    testutil::oracle_variance(zp, w.gamma, w.epsilon)) +
        w.nu_cov *
            (testutil::oracle_fd_normalized(z) + testutil::oracle_fd_normalized(zp));
    CHECK(testutil::rel_err(r.total, expect) < 1e-8);
  }
}

TEST_CASE("permutation equivariance: row permutations leave losses unchanged") {
  std::mt19937_64 gen(123);
  auto w = default_weights();
  MatD z = random_matrix(10, 5, 30), zp = random_matrix(10, 5, 31);
  std::vector<int> perm(10);
  for (int i = 0; i < 10; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), gen);
  MatD pz(10, 5), pzp(10, 5);
  for (int i = 0; i < 10; ++i) {
    pz.row(i) = z.row(perm[i]);
    pzp.row(i) = zp.row(perm[i]);
  }
  CHECK(testutil::rel_err(similarity_loss<double>(z, zp), similarity_loss<double>(pz, pzp)) <
        1e-12);
  CHECK(testutil::rel_err(variance_loss<double>(z, w), variance_loss<double>(pz, w)) < 1e-12);
  CHECK(testutil::rel_err(fd_loss<double>(z, CovarianceMode::kRawVicreg),
                          fd_loss<double>(pz, CovarianceMode::kRawVicreg)) < 1e-12);
  CHECK(testutil::rel_err(fd_loss<double>(z, CovarianceMode::kNormalizedVibcreg),
                          fd_loss<double>(pz, CovarianceMode::kNormalizedVibcreg)) < 1e-12);
  CHECK(testutil::rel_err(barlow_twins_loss<double>(z, zp, 5e-3),
                          barlow_twins_loss<double>(pz, pzp, 5e-3)) < 1e-12);
  CHECK(testutil::rel_err(info_nce_loss<double>(z, zp, 0.1),
                          info_nce_loss<double>(pz, pzp, 0.1)) < 1e-12);
  auto r0 = vibcreg_total_loss<double>(z, zp, w, CovarianceMode::kNormalizedVibcreg);
  auto r1 = vibcreg_total_loss<double>(pz, pzp, w, CovarianceMode::kNormalizedVibcreg);
  CHECK(testutil::rel_err(r0.total, r1.total) < 1e-12);
}

TEST_CASE("tau scaling multiplies logits") {
  // Dividing tau by 10 is the same as multiplying all cosine logits by 10.
  MatD z = random_matrix(4, 3, 32), zp = random_matrix(4, 3, 33);
  double base = info_nce_loss<double>(z, zp, 1.0);
  double sharp = info_nce_loss<double>(z, zp, 0.1);
  CHECK(sharp != doctest::Approx(base));  // definition sanity, sharper logits
  // And scaling all rows by a constant leaves the loss unchanged (cosine).
  CHECK(testutil::rel_err(info_nce_loss<double>(MatD(5.0 * z), MatD(5.0 * zp), 0.1), sharp) <
        1e-10);
}

TEST_CASE("analytic gradients match central differences (1e-4 rel)") {
  auto w = default_weights();
  const double tol = 1e-4;
  MatD z = random_matrix(8, 4, 40, 0.6);
  MatD zp = random_matrix(8, 4, 41, 0.6);

  SUBCASE("similarity") {
    MatD ga, gb;
    similarity_loss_grad<double>(z, zp, &ga, &gb);
    auto fa = [&](const MatD& m) { return similarity_loss<double>(m, zp); };
    auto fb = [&](const MatD& m) { return similarity_loss<double>(z, m); };
    CHECK(testutil::grad_rel_err(ga, testutil::numeric_grad(fa, z)) < tol);
    CHECK(testutil::grad_rel_err(gb, testutil::numeric_grad(fb, zp)) < tol);
  }
  SUBCASE("variance") {
    MatD g;
    variance_loss_grad<double>(z, w, &g);
    auto f = [&](const MatD& m) { return variance_loss<double>(m, w); };
    CHECK(testutil::grad_rel_err(g, testutil::numeric_grad(f, z)) < tol);
  }
  SUBCASE("fd raw") {
    MatD g;
    fd_loss_grad<double>(z, CovarianceMode::kRawVicreg, &g);
    auto f = [&](const MatD& m) { return fd_loss<double>(m, CovarianceMode::kRawVicreg); };
    CHECK(testutil::grad_rel_err(g, testutil::numeric_grad(f, z)) < tol);
  }
  SUBCASE("fd normalized") {
    MatD g;
    fd_loss_grad<double>(z, CovarianceMode::kNormalizedVibcreg, &g);
    auto f = [&](const MatD& m) {
      return fd_loss<double>(m, CovarianceMode::kNormalizedVibcreg);
    };
    CHECK(testutil::grad_rel_err(g, testutil::numeric_grad(f, z)) < tol);
  }
  SUBCASE("vibcreg total") {
    MatD ga, gb;
    vibcreg_total_loss_grad<double>(z, zp, w, CovarianceMode::kNormalizedVibcreg, &ga, &gb);
    auto fa = [&](const MatD& m) {
      return vibcreg_total_loss<double>(m, zp, w, CovarianceMode::kNormalizedVibcreg).total;
    };
    auto fb = [&](const MatD& m) {
      return vibcreg_total_loss<double>(z, m, w, CovarianceMode::kNormalizedVibcreg).total;
    };
    CHECK(testutil::grad_rel_err(ga, testutil::numeric_grad(fa, z)) < tol);
    CHECK(testutil::grad_rel_err(gb, testutil::numeric_grad(fb, zp)) < tol);
  }
  SUBCASE("barlow twins") {
    MatD ga, gb;
    barlow_twins_loss_grad<double>(z, zp, 5e-3, &ga, &gb);
    auto fa = [&](const MatD& m) { return barlow_twins_loss<double>(m, zp, 5e-3); };
    auto fb = [&](const MatD& m) { return barlow_twins_loss<double>(z, m, 5e-3); };
    CHECK(testutil::grad_rel_err(ga, testutil::numeric_grad(fa, z)) < tol);
    CHECK(testutil::grad_rel_err(gb, testutil::numeric_grad(fb, zp)) < tol);
  }
  SUBCASE("info nce") {
    MatD ga, gb;
    info_nce_loss_grad<double>(z, zp, 0.1, &ga, &gb);
    auto fa = [&](const MatD& m) { return info_nce_loss<double>(m, zp, 0.1); };
    auto fb = [&](const MatD& m) { return info_nce_loss<double>(z, m, 0.1); };
    CHECK(testutil::grad_rel_err(ga, testutil::numeric_grad(fa, z)) < tol);
    CHECK(testutil::grad_rel_err(gb, testutil::numeric_grad(fb, zp)) < tol);
  }
  SUBCASE("normalized mse") {
    MatD g;
    normalized_mse_loss_grad<double>(z, zp, &g);
    auto f = [&](const MatD& m) { return normalized_mse_loss<double>(m, zp); };
    CHECK(testutil::grad_rel_err(g, testutil::numeric_grad(f, z)) < tol);
  }
  SUBCASE("tnc") {
    VecD pos = random_matrix(6, 1, 42).col(0), neg = random_matrix(6, 1, 43).col(0);
    VecD gp, gn;
    tnc_loss_grad<double>(pos, neg, 0.05, &gp, &gn);
    auto fp = [&](const MatD& m) { return tnc_loss<double>(VecD(m.col(0)), neg, 0.05); };
    auto fn = [&](const MatD& m) { return tnc_loss<double>(pos, VecD(m.col(0)), 0.05); };
    CHECK(testutil::grad_rel_err(gp, testutil::numeric_grad(fp, pos)) < 1e-4);
    CHECK(testutil::grad_rel_err(gn, testutil::numeric_grad(fn, neg)) < 1e-4);
  }
}
