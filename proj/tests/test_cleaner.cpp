#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "xcov/cleaner.hpp"
#include "xcov/model.hpp"
#include "xcov/oracle.hpp"

using namespace xcov;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Exact projection onto non-increasing sequences by enumerating block
// partitions (the projection is piecewise constant on blocks with the block
// mean as value). Exponential, test sizes only.
Eigen::VectorXd brute_force_isotonic(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  double best_cost = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best = v;
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    // mask bit i set: a block boundary between i and i+1
    Eigen::VectorXd cand(n);
    int start = 0;
    bool feasible = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const bool boundary = i == n - 1 || (mask >> i) & 1u;
      if (!boundary) continue;
      const double mean = v.segment(start, i - start + 1).mean();
      if (mean > prev + 1e-15) {
        feasible = false;
        break;
      }
      for (int j = start; j <= i; ++j) cand(j) = mean;
      prev = mean;
      start = i + 1;
    }
    if (!feasible) continue;
    const double cost = (cand - v).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best = cand;
    }
  }
  return best;
}

ModelSpec factor_spec(Eigen::Index n, Eigen::Index p, double fraction,
                      double lo, double hi, double noise) {
  ModelSpec s;
  s.variant = ModelVariant::FactorModel;
  s.n = n;
  s.p = p;
  s.nonzero_fraction = fraction;
  s.sv_low = lo;
  s.sv_high = hi;
  s.noise_var = noise;
  return s;
}

}  // namespace

TEST(IsotonicPava, FixedPointsAndSmallCases) {
  const Eigen::VectorXd mono = vec({5, 4, 4, 1});
  EXPECT_EQ(isotonic_pava(mono), mono);
  EXPECT_EQ(isotonic_pava(vec({1, 3})), vec({2, 2}));
  EXPECT_EQ(isotonic_pava(vec({3, 1, 2})), vec({3, 1.5, 1.5}));
}

TEST(IsotonicPava, MatchesBruteForceProjection) {
  auto rng = make_rng(71);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd v(8);
    for (Eigen::Index i = 0; i < 8; ++i) v(i) = u(rng);
    const Eigen::VectorXd pava = isotonic_pava(v);
    const Eigen::VectorXd exact = brute_force_isotonic(v);
    EXPECT_LE((pava - exact).cwiseAbs().maxCoeff(), 1e-9);
    for (Eigen::Index i = 1; i < 8; ++i) EXPECT_LE(pava(i), pava(i - 1) + 1e-12);
  }
}

TEST(CleanAlgo1, NullModelShrinksToNearZero) {
  auto rng = trial_rng(314, 0);
  const auto model = build_null_model(200, 200);
  const auto svd = svd_with_coeffs(sample(model, 2000, rng));
  const CleaningResult r = clean_algo1(svd);
  EXPECT_LT(r.s_cleaned.mean(), 0.08 * svd.s.mean());
  EXPECT_TRUE(r.flagged_modes.empty());
}

TEST(CleanAlgo1, LargeTLeavesSpectrumAlmostUnchanged) {
  auto rng = make_rng(21);
  const auto model =
      build_factor_model(factor_spec(3, 3, 1.0, 0.5, 1.5, 0.1), rng);
  const auto svd = svd_with_coeffs(sample(model, 100000, rng));
  CleanOptions opt;
  opt.isotonic = false;
  const CleaningResult r = clean_algo1(svd, opt);
  for (Eigen::Index k = 0; k < 3; ++k)
    EXPECT_LE(std::abs(r.s_cleaned(k) - svd.s(k)) / svd.s(k), 0.05);
}

TEST(CleanAlgo1, OracleDistanceIsTheFloor) {
  auto rng = trial_rng(99, 3);
  const auto model =
      build_factor_model(factor_spec(200, 350, 0.2, 0.2, 0.5, 0.5), rng);
  const auto svd = svd_with_coeffs(sample(model, 500, rng));
  const Eigen::VectorXd oracle = oracle_singular_values(svd, model.block_C);
  const double truth_sq = model.block_C.squaredNorm();
  auto dist = [&](const Eigen::VectorXd& x) {
    return std::sqrt(truth_sq - 2.0 * x.dot(oracle) + x.squaredNorm());
  };
  const CleaningResult r = clean_algo1(svd);
  const double d_oracle = dist(oracle);
  const double d_cleaned = dist(r.s_cleaned);
  EXPECT_GE(d_cleaned, d_oracle - 1e-9);
  EXPECT_LE(d_cleaned, 1.05 * d_oracle);
}

TEST(CleanAlgo2, AgreesWithAlgo1OnNullModel) {
  auto rng = trial_rng(314, 1);
  const auto model = build_null_model(150, 220);
  const auto svd = svd_with_coeffs(sample(model, 1500, rng));
  const CleaningResult r1 = clean_algo1(svd);
  const CleaningResult r2 = clean_algo2(svd.s, svd.n, svd.p, svd.T);
  const double m1 = r1.s_cleaned.cwiseAbs().mean();
  const double m2 = r2.s_cleaned.cwiseAbs().mean();
  EXPECT_LE(std::abs(m1 - m2), 0.1 * std::max(m1, m2) + 1e-3 * svd.s.mean());
}

TEST(CleanAlgo2, SingleStrongModeShrinks) {
  auto rng = make_rng(17);
  Eigen::VectorXd sv(1);
  // strong signal through a 1x1 bimodal-style model: C = (0.8)
  BimodalDensity d;
  d.a1 = d.b1 = 0.8;
  d.w1 = 1.0;
  d.a2 = d.b2 = 0.8;
  const auto model = build_bimodal_model(1, 1, d, rng);
  const auto svd = svd_with_coeffs(sample(model, 10000, rng));
  const CleaningResult r = clean_algo2(svd.s, 1, 1, svd.T);
  EXPECT_LE(r.s_cleaned(0), svd.s(0));
}

TEST(CleanAlgo2, StableUnderEtaDoubling) {
  // single strong mode: the cleaned value barely reacts to the offset scale
  auto rng = make_rng(2718);
  BimodalDensity d;
  d.a1 = d.b1 = 0.8;
  d.w1 = 1.0;
  d.a2 = d.b2 = 0.8;
  const auto model = build_bimodal_model(1, 1, d, rng);
  const auto svd = svd_with_coeffs(sample(model, 10000, rng));
  const CleaningResult base = clean_algo2(svd.s, 1, 1, svd.T);
  CleanOptions opt;
  opt.eta_override = 2.0 * base.eta;
  const CleaningResult doubled = clean_algo2(svd.s, 1, 1, svd.T, opt);
  const double rel =
      std::abs(doubled.s_cleaned(0) - base.s_cleaned(0)) / base.s_cleaned(0);
  EXPECT_LT(rel, 0.02);
}

TEST(RescaleFrobenius, NegativeTargetZeroesOut) {
  EmpiricalSvd svd;
  svd.n = 2;
  svd.p = 2;
  svd.T = 10;
  svd.s = vec({0.1, 0.05});
  svd.trace_cx = 10.0;  // makes the unbiased estimate negative
  svd.trace_cy = 10.0;
  CleaningResult r;
  r.s_empirical = svd.s;
  r.s_cleaned = vec({0.08, 0.04});
  r.per_mode_ratio = vec({0.8, 0.8});
  const CleaningResult out = rescale_frobenius(r, svd);
  EXPECT_TRUE(out.rescaled);
  EXPECT_EQ(out.s_cleaned.norm(), 0.0);
}

TEST(RescaleFrobenius, TargetEqualToCurrentIsNoop) {
  EmpiricalSvd svd;
  svd.n = 1;
  svd.p = 1;
  svd.T = 1000;
  svd.s = vec({1.0});
  svd.trace_cx = 0.0;
  svd.trace_cy = 0.0;
  const double t = 1000.0;
  const double target = 1.0 / (1.0 + 1.0 / t - 2.0 / (t * t));
  CleaningResult r;
  r.s_empirical = svd.s;
  r.s_cleaned = vec({std::sqrt(target)});
  r.per_mode_ratio = vec({1.0});
  const CleaningResult out = rescale_frobenius(r, svd);
  EXPECT_NEAR(out.s_cleaned(0), std::sqrt(target), 1e-14);
}

TEST(OverfittingPredict, RatiosAndZeroFlag) {
  CleaningResult r;
  r.s_empirical = vec({2.0, 1.0, 0.0});
  r.s_cleaned = vec({2.0, 1.0, 0.0});
  r.per_mode_ratio.resize(3);
  for (Eigen::Index k = 0; k < 3; ++k)
    r.per_mode_ratio(k) = r.s_empirical(k) > 0.0
                              ? r.s_cleaned(k) / r.s_empirical(k)
                              : std::numeric_limits<double>::quiet_NaN();
  const Eigen::VectorXd ratios = overfitting_predict(r);
  EXPECT_EQ(ratios(0), 1.0);
  EXPECT_EQ(ratios(1), 1.0);
  EXPECT_TRUE(std::isnan(ratios(2)));
}

TEST(Cleaner, RotationalInvariance) {
  auto rng = make_rng(5150);
  const auto model =
      build_factor_model(factor_spec(20, 30, 0.5, 0.3, 0.7, 0.4), rng);
  const SampleSet smp = sample(model, 50, rng);
  const Eigen::MatrixXd v = haar_orthogonal(20, rng);
  const Eigen::MatrixXd w = haar_orthogonal(30, rng);
  const SampleSet rotated{v * smp.X, w * smp.Y};
  const CleaningResult a = clean_algo1(svd_with_coeffs(smp));
  const CleaningResult b = clean_algo1(svd_with_coeffs(rotated));
  EXPECT_LE((a.s_cleaned - b.s_cleaned).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Cleaner, MeanOrderingOverTrials) {
  auto model_rng = make_rng(31337);
  const auto model =
      build_factor_model(factor_spec(10, 15, 0.4, 0.3, 0.7, 0.5), model_rng);
  const double sum_strue2 = model.block_C.squaredNorm();
  const int trials = 300;
  std::vector<double> cross;
  double mean_emp2 = 0.0;
  for (int t = 0; t < trials; ++t) {
    auto rng = trial_rng(31337, t);
    const auto svd = svd_with_coeffs(sample(model, 30, rng));
    const Eigen::VectorXd oracle = oracle_singular_values(svd, model.block_C);
    cross.push_back(svd.s.dot(oracle));
    mean_emp2 += svd.s.squaredNorm();
  }
  mean_emp2 /= trials;
  double mean = 0.0, sq = 0.0;
  for (double c : cross) {
    mean += c;
    sq += c * c;
  }
  mean /= trials;
  const double se = std::sqrt((sq / trials - mean * mean) / trials);
  EXPECT_LE(std::abs(mean - sum_strue2), 4.0 * se);
  EXPECT_GT(mean_emp2, sum_strue2);
}
