#pragma once

#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "xcov/resolvent.hpp"

// Ground-truth computations available only in simulation: exact oracle
// singular values u_k' C v_k, the true oracle function L(z), the
// Stieltjes-inversion limit formula, and the Ledoit-Peche covariance RIE
// used as comparator.
namespace xcov {

// k-th Frobenius-optimal singular value for the empirical singular vectors.
inline Eigen::VectorXd oracle_singular_values(const EmpiricalSvd& svd,
                                              const Eigen::MatrixXd& truth) {
  if (truth.rows() != svd.n || truth.cols() != svd.p)
    throw std::invalid_argument("oracle_singular_values: truth dimensions");
  return (svd.U.transpose() * (truth * svd.V)).diagonal();
}

// L(z) = (1/T) Tr (z^2 - C_XY C_XY')^{-1} C_XY C', via the SVD expansion
// (1/T) sum_k s_k (u_k' C v_k) / (z^2 - s_k^2). Works at any size; the dense
// path in eval_direct_reference is the small-size cross-check.
inline cplx oracle_L(const EmpiricalSvd& svd, const Eigen::MatrixXd& truth,
                     cplx z) {
  detail::require_off_axis(z);
  const Eigen::VectorXd t = oracle_singular_values(svd, truth);
  const cplx z2 = z * z;
  cplx acc = 0.0;
  for (Eigen::Index k = 0; k < svd.n; ++k)
    acc += svd.s(k) * t(k) / (z2 - svd.s(k) * svd.s(k));
  return acc / static_cast<double>(svd.T);
}

struct LimitCheck {
  double ratio = 0.0;   // extrapolated Stieltjes-inversion ratio
  double exact = 0.0;   // u_k' C v_k
};

// Numerical version of the limit formula
//   s_k^cleaned = lim_{eta->0} int Im L(x+i eta) dx / int Im((x+i eta)G) dx
// over [s_k - eps, s_k + eps], trapezoidal with >= 2000 abscissae and a
// Richardson step on the two smallest eta values.
inline LimitCheck limit_formula_check(const EmpiricalSvd& svd,
                                      const Eigen::MatrixXd& truth,
                                      Eigen::Index k, double eps,
                                      const std::vector<double>& eta_sequence,
                                      int abscissae = 2001) {
  if (k < 0 || k >= svd.n) throw std::invalid_argument("limit_formula_check: k");
  if (eta_sequence.size() < 2)
    throw std::invalid_argument("limit_formula_check: need >= 2 eta values");
  for (Eigen::Index j = 0; j < svd.n; ++j)
    if (j != k && std::abs(svd.s(j) - svd.s(k)) <= eps)
      throw std::invalid_argument(
          "limit_formula_check: eps does not isolate s_k");

  const Eigen::VectorXd t = oracle_singular_values(svd, truth);
  const double lo = svd.s(k) - eps, hi = svd.s(k) + eps;
  const double dx = (hi - lo) / (abscissae - 1);

  std::vector<double> ratios;
  for (double eta : eta_sequence) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < abscissae; ++i) {
      const double w = (i == 0 || i == abscissae - 1) ? 0.5 : 1.0;
      const cplx z(lo + i * dx, eta);
      num += w * oracle_L(svd, truth, z).imag();
      den += w * (z * eval_G(svd, z)).imag();
    }
    ratios.push_back(num / den);
  }
  // linear-in-eta extrapolation on the two smallest eta
  const std::size_t m = ratios.size();
  const double e1 = eta_sequence[m - 2], e2 = eta_sequence[m - 1];
  const double r1 = ratios[m - 2], r2 = ratios[m - 1];
  LimitCheck out;
  out.ratio = (e1 * r2 - e2 * r1) / (e1 - e2);
  out.exact = t(k);
  return out;
}

// Ledoit-Peche eigenvalue map lambda / |1 - q + q lambda g_E(lambda - i eta)|^2
// applied to an empirical covariance spectrum.
inline Eigen::VectorXd ledoit_peche_clean_eigenvalues(const Eigen::VectorXd& lam,
                                                      double q, double eta_lp) {
  const Eigen::Index N = lam.size();
  Eigen::VectorXd cleaned(N);
  for (Eigen::Index k = 0; k < N; ++k) {
    const cplx zk(lam(k), -eta_lp);
    cplx g = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) g += 1.0 / (zk - lam(j));
    g /= static_cast<double>(N);
    const cplx den = 1.0 - q + q * lam(k) * g;
    cleaned(k) = lam(k) / std::norm(den);
  }
  return cleaned;
}

// Ledoit-Peche nonlinear shrinkage applied to the stacked (n+p)-dimensional
// empirical covariance, eigenvectors kept; returns the upper-right n x p
// block. Default eta is T^{-1/2}. Following the estimator's standard usage,
// the shrinkage acts on the correlation matrix: variables are standardized
// by their sample standard deviations, cleaned, and rescaled back.
inline Eigen::MatrixXd ledoit_peche_projection(const SampleSet& sample,
                                               double eta_lp = 0.0) {
  const Eigen::Index n = sample.n(), p = sample.p(), N = n + p;
  const double t = static_cast<double>(sample.T());
  if (eta_lp <= 0.0) eta_lp = 1.0 / std::sqrt(t);
  const double q = static_cast<double>(N) / t;

  Eigen::MatrixXd z(N, sample.T());
  z.topRows(n) = sample.X;
  z.bottomRows(p) = sample.Y;
  const Eigen::MatrixXd e = (z * z.transpose()) / t;
  const Eigen::VectorXd sd = e.diagonal().cwiseSqrt();
  const Eigen::MatrixXd corr =
      sd.cwiseInverse().asDiagonal() * e * sd.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
  const Eigen::VectorXd cleaned =
      ledoit_peche_clean_eigenvalues(es.eigenvalues(), q, eta_lp);
  const Eigen::MatrixXd xi =
      sd.asDiagonal() *
      (es.eigenvectors() * cleaned.asDiagonal() * es.eigenvectors().transpose()) *
      sd.asDiagonal();
  return xi.topRightCorner(n, p);
}

}  // namespace xcov
