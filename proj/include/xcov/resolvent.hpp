#pragma once

#include <complex>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "xcov/empirical.hpp"

// Complex-plane spectral functions of the empirical SVD:
//   G(z) = (1/T) Tr (z^2 - C_XY C_XY')^{-1}
//   H(z) = (1/T) Tr (z^2 - C_XY C_XY')^{-1} C_XY C_XY'
//   A(z) = (1/T) Tr (z^2 - C_XY C_XY')^{-1} C_X
//   B(z) = (1/T) Tr (z^2 - C_XY' C_XY)^{-1} C_Y
// together with the two data-only estimators of the oracle function L(z),
// all evaluated from cached SVD coefficients, plus a dense direct-inversion
// reference used by the tests.
namespace xcov {

using cplx = std::complex<double>;

// Pole or branch-cut hit during an evaluation; z is always off-axis in
// intended use, so a hit indicates caller error and is reported, not
// silently turned into infinity.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr double kPoleTol = 1e-14;

namespace detail {
inline void require_off_axis(cplx z) {
  if (z.imag() == 0.0)
    throw std::invalid_argument("resolvent evaluation requires Im z != 0");
}
}  // namespace detail

inline cplx eval_G(const EmpiricalSvd& svd, cplx z) {
  detail::require_off_axis(z);
  const cplx z2 = z * z;
  cplx acc = 0.0;
  for (Eigen::Index l = 0; l < svd.n; ++l)
    acc += 1.0 / (z2 - svd.s(l) * svd.s(l));
  return acc / static_cast<double>(svd.T);
}

inline cplx eval_H(const EmpiricalSvd& svd, cplx z) {
  detail::require_off_axis(z);
  const cplx z2 = z * z;
  cplx acc = 0.0;
  for (Eigen::Index l = 0; l < svd.n; ++l) {
    const double s2 = svd.s(l) * svd.s(l);
    acc += s2 / (z2 - s2);
  }
  return acc / static_cast<double>(svd.T);
}

inline std::pair<cplx, cplx> eval_A_B(const EmpiricalSvd& svd, cplx z) {
  detail::require_off_axis(z);
  const cplx z2 = z * z;
  cplx a = 0.0, b = 0.0;
  for (Eigen::Index l = 0; l < svd.n; ++l) {
    const cplx d = 1.0 / (z2 - svd.s(l) * svd.s(l));
    a += svd.coeff_A(l) * d;
    b += svd.coeff_B(l) * d;
  }
  b += svd.coeff_B_tail / z2;
  const double t = static_cast<double>(svd.T);
  return {a / t, b / t};
}

inline cplx eval_theta(const EmpiricalSvd& svd, cplx z) {
  const cplx h = eval_H(svd, z);
  if (std::abs(1.0 + h) < kPoleTol)
    throw EvalError("eval_theta: pole, 1 + H vanishes");
  auto [a, b] = eval_A_B(svd, z);
  return z * z * a * b / (1.0 + h);
}

// L estimated from H, A, B (no assumption on the true covariances),
// evaluated as 1 - 1/(1 + H - Theta).
inline cplx eval_L_thm1(const EmpiricalSvd& svd, cplx z) {
  const cplx h = eval_H(svd, z);
  if (std::abs(1.0 + h) < kPoleTol)
    throw EvalError("eval_L_thm1: pole, 1 + H vanishes");
  auto [a, b] = eval_A_B(svd, z);
  const cplx theta = z * z * a * b / (1.0 + h);
  const cplx den = 1.0 + h - theta;
  if (std::abs(den) < kPoleTol)
    throw EvalError("eval_L_thm1: pole, 1 + H - Theta vanishes");
  return 1.0 - 1.0 / den;
}

// L under the hypothesis of identity true covariances, from the square-root
// formula. std::sqrt is the principal branch, cut on (-inf, 0] with value 1
// at 1, as required.
inline cplx eval_L_thm2(const EmpiricalSvd& svd, cplx z) {
  detail::require_off_axis(z);
  const cplx g = eval_G(svd, z);
  const cplx h = z * z * g - static_cast<double>(svd.n) / static_cast<double>(svd.T);
  const double pn = static_cast<double>(svd.p - svd.n) / static_cast<double>(svd.T);
  const cplx k = (pn + z * z * g) * g * (1.0 + h) * (1.0 + h);
  const cplx rad = 1.0 + 4.0 * k;
  if (rad.imag() == 0.0 && rad.real() <= 0.0)
    throw EvalError("eval_L_thm2: branch cut hit, 1 + 4K in (-inf, 0]");
  if (std::abs(1.0 + h) < kPoleTol)
    throw EvalError("eval_L_thm2: pole, 1 + H vanishes");
  return (1.0 + 2.0 * h - std::sqrt(rad)) / (2.0 * (1.0 + h));
}

struct SpectralPoint {
  cplx z;
  cplx g, h, a, b, theta, k;
  std::optional<cplx> l_thm1;  // absent on pole hit
  std::optional<cplx> l_thm2;  // absent on branch-cut/pole hit
};

inline SpectralPoint evaluate_point(const EmpiricalSvd& svd, cplx z) {
  SpectralPoint pt;
  pt.z = z;
  pt.g = eval_G(svd, z);
  pt.h = eval_H(svd, z);
  std::tie(pt.a, pt.b) = eval_A_B(svd, z);
  const double pn = static_cast<double>(svd.p - svd.n) / static_cast<double>(svd.T);
  pt.k = (pn + z * z * pt.g) * pt.g * (1.0 + pt.h) * (1.0 + pt.h);
  try {
    pt.l_thm1 = eval_L_thm1(svd, z);
  } catch (const EvalError&) {
  }
  try {
    pt.l_thm2 = eval_L_thm2(svd, z);
  } catch (const EvalError&) {
  }
  return pt;
}

struct DirectReference {
  cplx g, h, a, b;
  std::optional<cplx> l_true;  // present when the true C was supplied
};

// Dense complex-inversion reference, guarded to small sizes (n * p <= 1e4).
// When the true cross-covariance is supplied also computes
// L(z) = (1/T) Tr (z^2 - C_XY C_XY')^{-1} C_XY C'.
inline DirectReference eval_direct_reference(
    const SampleSet& sample, const Eigen::MatrixXd* truth, cplx z) {
  detail::require_off_axis(z);
  const Eigen::Index n = sample.n(), p = sample.p();
  if (n * p > 10000)
    throw std::invalid_argument("eval_direct_reference: size guard n*p <= 1e4");
  const double t = static_cast<double>(sample.T());

  const Eigen::MatrixXd cxy = cross_covariance(sample);
  auto [cx, cy] = empirical_covariances(sample);
  const Eigen::MatrixXd m = cxy * cxy.transpose();
  const Eigen::MatrixXd mt = cxy.transpose() * cxy;

  const cplx z2 = z * z;
  Eigen::MatrixXcd res_n =
      (z2 * Eigen::MatrixXcd::Identity(n, n) - m.cast<cplx>()).inverse();
  Eigen::MatrixXcd res_p =
      (z2 * Eigen::MatrixXcd::Identity(p, p) - mt.cast<cplx>()).inverse();

  DirectReference out;
  out.g = res_n.trace() / t;
  out.h = (res_n * m.cast<cplx>()).trace() / t;
  out.a = (res_n * cx.cast<cplx>()).trace() / t;
  out.b = (res_p * cy.cast<cplx>()).trace() / t;
  if (truth != nullptr) {
    if (truth->rows() != n || truth->cols() != p)
      throw std::invalid_argument("eval_direct_reference: truth dimensions");
    out.l_true =
        (res_n * cxy.cast<cplx>() * truth->transpose().cast<cplx>()).trace() / t;
  }
  return out;
}

}  // namespace xcov
