#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "xcov/rng.hpp"

// Ground-truth joint Gaussian models for the simulation harness: a joint
// covariance Sigma = [[A, C], [C', B]] for the stacked vector (X, Y), with
// builders for the factor, Wishart and bimodal families, plus Gaussian
// sampling.
namespace xcov {

struct JointGaussianModel {
  Eigen::Index n = 0;  // dimension of X
  Eigen::Index p = 0;  // dimension of Y, n <= p
  Eigen::MatrixXd block_A;  // n x n, Cov(X)
  Eigen::MatrixXd block_C;  // n x p, E[XY']
  Eigen::MatrixXd block_B;  // p x p, Cov(Y)
  Eigen::MatrixXd sqrt_sigma;  // (n+p) x (n+p) factor R with R R' = Sigma

  Eigen::MatrixXd sigma() const {
    Eigen::MatrixXd s(n + p, n + p);
    s.topLeftCorner(n, n) = block_A;
    s.topRightCorner(n, p) = block_C;
    s.bottomLeftCorner(p, n) = block_C.transpose();
    s.bottomRightCorner(p, p) = block_B;
    return s;
  }
};

enum class ModelVariant { Null, Bimodal, FactorModel, Wishart };

struct ModelSpec {
  ModelVariant variant = ModelVariant::Null;
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  Eigen::Index T = 0;
  std::uint64_t seed = 0;
  // FactorModel parameters
  double nonzero_fraction = 0.0;
  double sv_low = 0.0;
  double sv_high = 0.0;
  double noise_var = 0.0;
};

// Two-component uniform mixture for true singular values, support must stay
// strictly below 1 so that Sigma = [[I, C], [C', I]] remains PSD.
struct BimodalDensity {
  double a1 = 0.1, b1 = 0.25, w1 = 0.5;
  double a2 = 0.5, b2 = 0.65;
};

struct SampleSet {
  Eigen::MatrixXd X;  // n x T
  Eigen::MatrixXd Y;  // p x T
  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return Y.rows(); }
  Eigen::Index T() const { return X.cols(); }
};

namespace detail {

// Cholesky when positive definite, symmetric eigen square root (eigenvalues
// clipped at 0) otherwise. Handles the PSD-but-singular null cases.
inline Eigen::MatrixXd matrix_sqrt_factor(const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

}  // namespace detail

// Exact Haar sampler: QR of an i.i.d. Gaussian matrix with the R-diagonal
// sign correction.
inline Eigen::MatrixXd haar_orthogonal(Eigen::Index dim, std::mt19937_64& rng) {
  Eigen::MatrixXd g = gaussian_matrix(dim, dim, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd d = qr.matrixQR().diagonal();
  for (Eigen::Index j = 0; j < dim; ++j)
    if (d(j) < 0) q.col(j) = -q.col(j);
  return q;
}

struct FactorBuildReport {
  Eigen::Index nonzero_modes = 0;
  bool rounded_up = false;  // fraction > 0 but floor(fraction * n) == 0
};

// Sigma = [[I_n, C], [C', C'C + noise_var I_p]] with C having
// floor(fraction * n) nonzero singular values drawn uniformly from
// [sv_low, sv_high] and Haar singular vectors.
inline JointGaussianModel build_factor_model(const ModelSpec& spec,
                                             std::mt19937_64& rng,
                                             FactorBuildReport* report = nullptr) {
  if (spec.n > spec.p) throw std::invalid_argument("build_factor_model: n > p");
  if (spec.nonzero_fraction < 0.0 || spec.nonzero_fraction > 1.0)
    throw std::invalid_argument("build_factor_model: fraction outside [0,1]");
  if (spec.nonzero_fraction > 0.0 &&
      !(spec.sv_low > 0.0 && spec.sv_low <= spec.sv_high))
    throw std::invalid_argument("build_factor_model: need 0 < sv_low <= sv_high");
  const Eigen::Index n = spec.n, p = spec.p;

  Eigen::Index k = static_cast<Eigen::Index>(
      std::floor(spec.nonzero_fraction * static_cast<double>(n)));
  bool rounded_up = false;
  if (spec.nonzero_fraction > 0.0 && k == 0) {
    k = 1;
    rounded_up = true;
  }
  if (report != nullptr) *report = {k, rounded_up};

  JointGaussianModel m;
  m.n = n;
  m.p = p;
  m.block_C = Eigen::MatrixXd::Zero(n, p);
  if (k > 0) {
    std::uniform_real_distribution<double> unif(spec.sv_low, spec.sv_high);
    Eigen::VectorXd sv = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < k; ++i) sv(i) = unif(rng);
    Eigen::MatrixXd u = haar_orthogonal(n, rng);
    Eigen::MatrixXd v = haar_orthogonal(p, rng);
    m.block_C = u * sv.asDiagonal() * v.topRows(n);
  }
  m.block_A = Eigen::MatrixXd::Identity(n, n);
  m.block_B = m.block_C.transpose() * m.block_C +
              spec.noise_var * Eigen::MatrixXd::Identity(p, p);
  m.sqrt_sigma = detail::matrix_sqrt_factor(m.sigma());
  return m;
}

// Sigma = HH'/(2m) for H an m x 2m i.i.d. standard Gaussian matrix,
// m = n + p, partitioned at index n.
inline JointGaussianModel build_wishart_model(const ModelSpec& spec,
                                              std::mt19937_64& rng) {
  if (spec.n > spec.p) throw std::invalid_argument("build_wishart_model: n > p");
  const Eigen::Index n = spec.n, p = spec.p, m = n + p;
  Eigen::MatrixXd h = gaussian_matrix(m, 2 * m, rng);
  Eigen::MatrixXd sigma = (h * h.transpose()) / (2.0 * static_cast<double>(m));
  JointGaussianModel out;
  out.n = n;
  out.p = p;
  out.block_A = sigma.topLeftCorner(n, n);
  out.block_C = sigma.topRightCorner(n, p);
  out.block_B = sigma.bottomRightCorner(p, p);
  out.sqrt_sigma = detail::matrix_sqrt_factor(sigma);
  return out;
}

// Sigma = [[I_n, C], [C', I_p]] with the singular values of C drawn from a
// two-uniform mixture. Rejects densities whose support reaches 1 (Sigma
// would lose positive semi-definiteness).
inline JointGaussianModel build_bimodal_model(Eigen::Index n, Eigen::Index p,
                                              const BimodalDensity& density,
                                              std::mt19937_64& rng) {
  if (n > p) throw std::invalid_argument("build_bimodal_model: n > p");
  if (density.b1 >= 1.0 || density.b2 >= 1.0 || density.a1 < 0.0 ||
      density.a2 < 0.0)
    throw std::invalid_argument(
        "build_bimodal_model: singular value support must lie in [0, 1)");
  std::uniform_real_distribution<double> pick(0.0, 1.0);
  Eigen::VectorXd sv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pick(rng) < density.w1) {
      std::uniform_real_distribution<double> u(density.a1, density.b1);
      sv(i) = u(rng);
    } else {
      std::uniform_real_distribution<double> u(density.a2, density.b2);
      sv(i) = u(rng);
    }
  }
  JointGaussianModel m;
  m.n = n;
  m.p = p;
  Eigen::MatrixXd u = haar_orthogonal(n, rng);
  Eigen::MatrixXd v = haar_orthogonal(p, rng);
  m.block_C = u * sv.asDiagonal() * v.topRows(n);
  m.block_A = Eigen::MatrixXd::Identity(n, n);
  m.block_B = Eigen::MatrixXd::Identity(p, p);
  m.sqrt_sigma = detail::matrix_sqrt_factor(m.sigma());
  return m;
}

inline JointGaussianModel build_null_model(Eigen::Index n, Eigen::Index p) {
  if (n > p) throw std::invalid_argument("build_null_model: n > p");
  JointGaussianModel m;
  m.n = n;
  m.p = p;
  m.block_A = Eigen::MatrixXd::Identity(n, n);
  m.block_C = Eigen::MatrixXd::Zero(n, p);
  m.block_B = Eigen::MatrixXd::Identity(p, p);
  m.sqrt_sigma = Eigen::MatrixXd::Identity(n + p, n + p);
  return m;
}

// T i.i.d. columns of [X; Y] ~ N(0, Sigma), realized as sqrt_sigma * Z.
inline SampleSet sample(const JointGaussianModel& model, Eigen::Index T,
                        std::mt19937_64& rng) {
  if (T < 1) throw std::invalid_argument("sample: T must be >= 1");
  Eigen::MatrixXd z = gaussian_matrix(model.n + model.p, T, rng);
  Eigen::MatrixXd w = model.sqrt_sigma * z;
  SampleSet s;
  s.X = w.topRows(model.n);
  s.Y = w.bottomRows(model.p);
  return s;
}

}  // namespace xcov
