#pragma once

#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "xcov/model.hpp"

// Empirical cross-covariance C_XY = XY'/T, its SVD, and the cached quadratic
// form coefficients that let every resolvent function be evaluated without
// matrix inversion afterwards.
namespace xcov {

struct EmpiricalSvd {
  Eigen::MatrixXd cxy;   // n x p
  Eigen::VectorXd s;     // length n, non-increasing
  Eigen::MatrixXd U;     // n x n, columns u_k
  Eigen::MatrixXd V;     // p x n, columns v_k
  Eigen::VectorXd coeff_A;   // u_l' C_X u_l
  Eigen::VectorXd coeff_B;   // v_l' C_Y v_l
  double coeff_B_tail = 0.0;  // sum over the orthogonal complement of V
  double trace_cx = 0.0;
  double trace_cy = 0.0;
  Eigen::Index n = 0, p = 0, T = 0;
};

inline Eigen::MatrixXd cross_covariance(const SampleSet& sample) {
  return (sample.X * sample.Y.transpose()) / static_cast<double>(sample.T());
}

inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> empirical_covariances(
    const SampleSet& sample) {
  const double t = static_cast<double>(sample.T());
  return {(sample.X * sample.X.transpose()) / t,
          (sample.Y * sample.Y.transpose()) / t};
}

// Thin SVD of C_XY plus the coefficient vectors. coeff_B_tail is obtained
// from trace completeness, Tr C_Y - sum_l v_l' C_Y v_l, which avoids
// completing the basis of R^p.
inline EmpiricalSvd svd_with_coeffs(const SampleSet& sample) {
  if (sample.X.cols() != sample.Y.cols())
    throw std::invalid_argument("svd_with_coeffs: X and Y column counts differ");
  if (sample.n() > sample.p())
    throw std::invalid_argument("svd_with_coeffs: requires n <= p");
  EmpiricalSvd out;
  out.n = sample.n();
  out.p = sample.p();
  out.T = sample.T();
  const double t = static_cast<double>(out.T);

  out.cxy = cross_covariance(sample);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(out.cxy,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.s = svd.singularValues();
  out.U = svd.matrixU();
  out.V = svd.matrixV();

  // u_l' C_X u_l = |X' u_l|^2 / T, same on the Y side; C_X, C_Y are never
  // materialized.
  Eigen::MatrixXd xu = sample.X.transpose() * out.U;  // T x n
  Eigen::MatrixXd yv = sample.Y.transpose() * out.V;  // T x n
  out.coeff_A = xu.colwise().squaredNorm().transpose() / t;
  out.coeff_B = yv.colwise().squaredNorm().transpose() / t;
  out.trace_cx = sample.X.squaredNorm() / t;
  out.trace_cy = sample.Y.squaredNorm() / t;
  out.coeff_B_tail = out.trace_cy - out.coeff_B.sum();
  return out;
}

}  // namespace xcov
