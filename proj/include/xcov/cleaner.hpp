#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "xcov/resolvent.hpp"

// Singular value cleaning: per-mode evaluation of the oracle-function
// estimators at z = s_k + i (npT)^{-1/6}, the cleaned value
// s_k * Im L / Im H, optional isotonic regression and optional rescaling to
// the unbiased Frobenius-norm estimate.
namespace xcov {

enum class Algorithm { Algo1, Algo2 };

struct CleanOptions {
  double eta_override = 0.0;  // 0 keeps the default (n p T)^{-1/6}
  bool isotonic = true;
  bool clip_negative = false;
  bool rescale = false;
};

struct CleaningResult {
  Eigen::VectorXd s_empirical;
  Eigen::VectorXd s_cleaned;
  double eta = 0.0;
  Algorithm algorithm = Algorithm::Algo1;
  bool isotonic_applied = false;
  bool rescaled = false;
  bool rescale_degenerate = false;  // sum s_cleaned^2 = 0 with positive target
  Eigen::VectorXd per_mode_ratio;   // s_cleaned / s_empirical, NaN at s_emp = 0
  std::vector<Eigen::Index> flagged_modes;  // degenerate Im H or pole hits
};

inline double default_eta(Eigen::Index n, Eigen::Index p, Eigen::Index T) {
  return std::pow(static_cast<double>(n) * static_cast<double>(p) *
                      static_cast<double>(T),
                  -1.0 / 6.0);
}

// L2 projection onto non-increasing sequences, pool-adjacent-violators with
// uniform weights.
inline Eigen::VectorXd isotonic_pava(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n == 0) return v;
  std::vector<double> value;
  std::vector<double> weight;
  value.reserve(n);
  weight.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    value.push_back(v(i));
    weight.push_back(1.0);
    // non-increasing: pool while a later block exceeds the one before it
    while (value.size() > 1 && value[value.size() - 2] < value.back()) {
      const double w = weight[weight.size() - 2] + weight.back();
      const double m = (value[value.size() - 2] * weight[weight.size() - 2] +
                        value.back() * weight.back()) /
                       w;
      value.pop_back();
      weight.pop_back();
      value.back() = m;
      weight.back() = w;
    }
  }
  Eigen::VectorXd out(n);
  Eigen::Index idx = 0;
  for (std::size_t b = 0; b < value.size(); ++b)
    for (double c = 0; c < weight[b]; c += 1.0) out(idx++) = value[b];
  return out;
}

namespace detail {

constexpr double kImHTol = 1e-30;

// Modes where Im H degenerated get the cleaned value of the nearest valid
// mode; a batch run must not abort on an isolated numerical pole.
inline void patch_flagged(Eigen::VectorXd& cleaned,
                          const std::vector<Eigen::Index>& flagged,
                          const std::vector<bool>& valid) {
  const Eigen::Index n = cleaned.size();
  for (Eigen::Index k : flagged) {
    double best = 0.0;
    Eigen::Index best_dist = std::numeric_limits<Eigen::Index>::max();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!valid[static_cast<std::size_t>(j)]) continue;
      const Eigen::Index d = std::abs(j - k);
      if (d < best_dist) {
        best_dist = d;
        best = cleaned(j);
      }
    }
    if (best_dist != std::numeric_limits<Eigen::Index>::max()) cleaned(k) = best;
  }
}

inline void finish_result(CleaningResult& r, const CleanOptions& opt,
                          double rescale_target, bool have_target) {
  if (opt.isotonic) {
    r.s_cleaned = isotonic_pava(r.s_cleaned);
    r.isotonic_applied = true;
  }
  if (opt.clip_negative) r.s_cleaned = r.s_cleaned.cwiseMax(0.0);
  if (opt.rescale && have_target) {
    const double cur = r.s_cleaned.squaredNorm();
    if (rescale_target <= 0.0) {
      r.s_cleaned.setZero();
      r.rescaled = true;
    } else if (cur > 0.0) {
      r.s_cleaned *= std::sqrt(rescale_target / cur);
      r.rescaled = true;
    } else {
      r.rescale_degenerate = true;
    }
  }
  const Eigen::Index n = r.s_empirical.size();
  r.per_mode_ratio.resize(n);
  for (Eigen::Index k = 0; k < n; ++k)
    r.per_mode_ratio(k) = r.s_empirical(k) > 0.0
                              ? r.s_cleaned(k) / r.s_empirical(k)
                              : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

// Positive part of the unbiased estimator of ||C||_F^2:
// (sum s_k^2 - Tr C_X Tr C_Y / T) / (1 + 1/T - 2/T^2).
inline double frobenius_target(const EmpiricalSvd& svd) {
  const double t = static_cast<double>(svd.T);
  const double raw = (svd.s.squaredNorm() - svd.trace_cx * svd.trace_cy / t) /
                     (1.0 + 1.0 / t - 2.0 / (t * t));
  return std::max(0.0, raw);
}

// Algorithm for general cross-covariance matrices: L estimated from H, A, B.
inline CleaningResult clean_algo1(const EmpiricalSvd& svd,
                                  const CleanOptions& opt = {}) {
  const Eigen::Index n = svd.n;
  CleaningResult r;
  r.algorithm = Algorithm::Algo1;
  r.s_empirical = svd.s;
  r.s_cleaned.resize(n);
  r.eta = opt.eta_override > 0.0 ? opt.eta_override
                                 : default_eta(svd.n, svd.p, svd.T);
  std::vector<bool> valid(static_cast<std::size_t>(n), false);
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx z(svd.s(k), r.eta);
    try {
      const cplx h = eval_H(svd, z);
      const cplx l = eval_L_thm1(svd, z);
      if (std::abs(h.imag()) < detail::kImHTol) throw EvalError("Im H ~ 0");
      r.s_cleaned(k) = svd.s(k) * l.imag() / h.imag();
      valid[static_cast<std::size_t>(k)] = true;
    } catch (const EvalError&) {
      r.s_cleaned(k) = 0.0;
      r.flagged_modes.push_back(k);
    }
  }
  detail::patch_flagged(r.s_cleaned, r.flagged_modes, valid);
  detail::finish_result(r, opt, frobenius_target(svd), true);
  return r;
}

// Algorithm for cross-correlation matrices (identity true covariances):
// needs only the singular values.
inline CleaningResult clean_algo2(const Eigen::VectorXd& s, Eigen::Index n,
                                  Eigen::Index p, Eigen::Index T,
                                  const CleanOptions& opt = {}) {
  CleaningResult r;
  r.algorithm = Algorithm::Algo2;
  r.s_empirical = s;
  r.s_cleaned.resize(n);
  r.eta = opt.eta_override > 0.0 ? opt.eta_override : default_eta(n, p, T);
  // thm-2 evaluation touches only s, n, p, T of the svd struct
  EmpiricalSvd shim;
  shim.s = s;
  shim.n = n;
  shim.p = p;
  shim.T = T;
  std::vector<bool> valid(static_cast<std::size_t>(n), false);
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx z(s(k), r.eta);
    try {
      const cplx g = eval_G(shim, z);
      const cplx h =
          z * z * g - static_cast<double>(n) / static_cast<double>(T);
      const cplx l = eval_L_thm2(shim, z);
      if (std::abs(h.imag()) < detail::kImHTol) throw EvalError("Im H ~ 0");
      r.s_cleaned(k) = s(k) * l.imag() / h.imag();
      valid[static_cast<std::size_t>(k)] = true;
    } catch (const EvalError&) {
      r.s_cleaned(k) = 0.0;
      r.flagged_modes.push_back(k);
    }
  }
  detail::patch_flagged(r.s_cleaned, r.flagged_modes, valid);
  detail::finish_result(r, opt, 0.0, false);
  return r;
}

// Rescale an existing result so that sum s_cleaned^2 matches the unbiased
// estimate of ||C||_F^2 (positive part).
inline CleaningResult rescale_frobenius(CleaningResult result,
                                        const EmpiricalSvd& svd) {
  const double target = frobenius_target(svd);
  const double cur = result.s_cleaned.squaredNorm();
  if (target <= 0.0) {
    result.s_cleaned.setZero();
    result.rescaled = true;
  } else if (cur > 0.0) {
    result.s_cleaned *= std::sqrt(target / cur);
    result.rescaled = true;
  } else {
    result.rescale_degenerate = true;
  }
  for (Eigen::Index k = 0; k < result.s_empirical.size(); ++k)
    result.per_mode_ratio(k) =
        result.s_empirical(k) > 0.0
            ? result.s_cleaned(k) / result.s_empirical(k)
            : std::numeric_limits<double>::quiet_NaN();
  return result;
}

// Predicted per-mode overfitting factor s_cleaned / s_empirical.
inline Eigen::VectorXd overfitting_predict(const CleaningResult& result) {
  return result.per_mode_ratio;
}

// Reconstructed RIE matrix U diag(s_cleaned) V'.
inline Eigen::MatrixXd reconstruct(const EmpiricalSvd& svd,
                                   const CleaningResult& result) {
  return svd.U * result.s_cleaned.asDiagonal() * svd.V.transpose();
}

}  // namespace xcov
