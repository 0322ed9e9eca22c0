#include <gtest/gtest.h>

#include <complex>

#include "xcov/empirical.hpp"
#include "xcov/model.hpp"

using namespace xcov;

TEST(CrossCovariance, SelfPairingGivesCovariance) {
  auto rng = make_rng(1);
  const Eigen::MatrixXd x = gaussian_matrix(4, 20, rng);
  const SampleSet s{x, x};
  auto [cx, cy] = empirical_covariances(s);
  EXPECT_LE((cross_covariance(s) - cx).norm(), 1e-14);
}

TEST(CrossCovariance, SingleObservationOuterProduct) {
  Eigen::MatrixXd x(2, 1), y(3, 1);
  x << 1, 0;
  y << 0, 1, 0;
  const Eigen::MatrixXd c = cross_covariance({x, y});
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2, 3);
  expected(0, 1) = 1.0;
  EXPECT_EQ(c, expected);
}

TEST(CrossCovariance, MonteCarloConsistency) {
  ModelSpec spec;
  spec.variant = ModelVariant::FactorModel;
  spec.n = 2;
  spec.p = 2;
  spec.nonzero_fraction = 1.0;
  spec.sv_low = 0.3;
  spec.sv_high = 0.6;
  spec.noise_var = 0.2;
  auto rng = make_rng(13);
  const auto model = build_factor_model(spec, rng);
  const SampleSet s = sample(model, 1000000, rng);
  EXPECT_LE((cross_covariance(s) - model.block_C).cwiseAbs().maxCoeff(), 5e-3);
}

TEST(EmpiricalCovariances, OrthogonalRowsGiveIdentity) {
  const Eigen::Index T = 16;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, T);
  x(0, 0) = x(1, 1) = x(2, 2) = std::sqrt(static_cast<double>(T));
  const SampleSet s{x, x};
  auto [cx, cy] = empirical_covariances(s);
  EXPECT_LE((cx - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-14);
}

TEST(EmpiricalCovariances, GramPsdAndLargeTConcentration) {
  auto rng = make_rng(4);
  const Eigen::MatrixXd x = gaussian_matrix(5, 1000000, rng);
  const SampleSet s{x, x};
  auto [cx, cy] = empirical_covariances(s);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cx);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
  EXPECT_LE((cx - Eigen::MatrixXd::Identity(5, 5)).operatorNorm(), 0.01);
}

TEST(SvdWithCoeffs, OrthonormalityAndReconstruction) {
  auto rng = make_rng(9);
  const SampleSet s{gaussian_matrix(6, 25, rng), gaussian_matrix(9, 25, rng)};
  const EmpiricalSvd svd = svd_with_coeffs(s);
  EXPECT_LE((svd.U.transpose() * svd.U - Eigen::MatrixXd::Identity(6, 6)).norm(),
            1e-10);
  EXPECT_LE((svd.V.transpose() * svd.V - Eigen::MatrixXd::Identity(6, 6)).norm(),
            1e-10);
  EXPECT_LE((svd.U * svd.s.asDiagonal() * svd.V.transpose() - svd.cxy).norm(),
            1e-10 * svd.cxy.norm());
  for (Eigen::Index k = 1; k < svd.s.size(); ++k)
    EXPECT_GE(svd.s(k - 1), svd.s(k));
}

TEST(SvdWithCoeffs, ZeroCrossCovariance) {
  Eigen::MatrixXd x(1, 2), y(2, 2);
  x << 1, -1;
  y << 1, 1, 2, 2;  // XY' = 0
  const EmpiricalSvd svd = svd_with_coeffs({x, y});
  EXPECT_NEAR(svd.s(0), 0.0, 1e-14);
  EXPECT_NEAR(svd.coeff_B_tail, svd.trace_cy - svd.coeff_B.sum(), 1e-14);
}

TEST(SvdWithCoeffs, CoefficientsMatchDirectQuadraticForms) {
  auto rng = make_rng(77);
  const SampleSet s{gaussian_matrix(1, 8, rng), gaussian_matrix(2, 8, rng)};
  const EmpiricalSvd svd = svd_with_coeffs(s);
  auto [cx, cy] = empirical_covariances(s);
  for (Eigen::Index l = 0; l < svd.n; ++l) {
    EXPECT_NEAR(svd.coeff_A(l), svd.U.col(l).dot(cx * svd.U.col(l)), 1e-12);
    EXPECT_NEAR(svd.coeff_B(l), svd.V.col(l).dot(cy * svd.V.col(l)), 1e-12);
  }
}

TEST(SvdWithCoeffs, TraceCompleteness) {
  auto rng = make_rng(31);
  const SampleSet s{gaussian_matrix(5, 12, rng), gaussian_matrix(7, 12, rng)};
  const EmpiricalSvd svd = svd_with_coeffs(s);
  EXPECT_NEAR(svd.coeff_B.sum() + svd.coeff_B_tail, svd.trace_cy,
              1e-8 * svd.trace_cy);
  EXPECT_GE(svd.coeff_B_tail, -1e-8 * svd.trace_cy);
}

// H from the singular values vs the dense resolvent trace.
TEST(SvdWithCoeffs, SpectralSumMatchesDenseTrace) {
  using cplx = std::complex<double>;
  auto rng = make_rng(63);
  for (int inst = 0; inst < 10; ++inst) {
    const Eigen::Index n = 3 + inst % 8, p = n + 1 + inst % 4, T = 10 + inst;
    const SampleSet s{gaussian_matrix(n, T, rng), gaussian_matrix(p, T, rng)};
    const EmpiricalSvd svd = svd_with_coeffs(s);
    const cplx z(0.7, 0.4);
    const cplx z2 = z * z;
    cplx from_svd = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) {
      const double s2 = svd.s(l) * svd.s(l);
      from_svd += s2 / (z2 - s2);
    }
    from_svd /= static_cast<double>(T);
    const Eigen::MatrixXd m = svd.cxy * svd.cxy.transpose();
    const Eigen::MatrixXcd res =
        (z2 * Eigen::MatrixXcd::Identity(n, n) - m.cast<cplx>()).inverse();
    const cplx dense = (res * m.cast<cplx>()).trace() / static_cast<double>(T);
    EXPECT_LE(std::abs(from_svd - dense), 1e-8 * std::abs(dense) + 1e-12);
  }
}
