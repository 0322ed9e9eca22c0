#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "xcov/cleaner.hpp"
#include "xcov/io.hpp"
#include "xcov/model.hpp"
#include "xcov/oracle.hpp"

// Monte-Carlo experiments: oracle-estimation validation, the six-model
// comparison table, the exact-identity checks and the overfitting
// experiment, with machine-readable JSON/CSV reports. Everything is
// deterministic given the seed; trial t always uses trial_rng(seed, t).
namespace xcov {

struct StatSummary {
  double mean = 0.0;
  double se = 0.0;          // standard error of the mean
  double halfwidth95 = 0.0; // 1.96 * se
  double median = 0.0;
  double p2_5 = 0.0;        // percentile CI, reported alongside the SE one
  double p97_5 = 0.0;
  int count = 0;
};

inline StatSummary summarize(std::vector<double> v) {
  StatSummary s;
  s.count = static_cast<int>(v.size());
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  s.halfwidth95 = 1.96 * s.se;
  std::sort(v.begin(), v.end());
  auto pct = [&](double q) {
    const double idx = q * (n - 1.0);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = idx - static_cast<double>(lo);
    return (1.0 - w) * v[lo] + w * v[hi];
  };
  s.median = pct(0.5);
  s.p2_5 = pct(0.025);
  s.p97_5 = pct(0.975);
  return s;
}

inline double pearson_correlation(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Comparison table (six models)

struct TrialReport {
  int model_id = 0;
  std::uint64_t seed = 0;
  Eigen::Index T = 0, n = 0, p = 0;
  double dist_empirical = 0.0;
  double dist_algo1 = 0.0;
  double dist_algo2 = 0.0;
  double dist_lp = 0.0;
  double quotient_emp = 0.0;  // 100 * dist_algo1 / dist_empirical
  double quotient_lp = 0.0;   // 100 * dist_algo1 / dist_lp
};

struct Table1Config {
  Eigen::Index n = 200, p = 350, T = 500;
  int trials = 100;
  std::uint64_t seed = 1;
  bool isotonic = true;
  bool redraw_per_trial = true;  // redraw the true C each trial
  double eta_override = 0.0;
};

struct Table1ModelResult {
  int model_id = 0;
  StatSummary quotient_emp;
  StatSummary quotient_lp;
  std::vector<TrialReport> trials;
};

// Models 1-5: factor models with 0/10/20/30/40% nonzero true singular
// values uniform in [0.2, 0.5] and noise variance 0.5. Model 6: Wishart
// with m = n + p.
inline JointGaussianModel build_table1_model(int model_id, Eigen::Index n,
                                             Eigen::Index p,
                                             std::mt19937_64& rng) {
  ModelSpec spec;
  spec.n = n;
  spec.p = p;
  if (model_id >= 1 && model_id <= 5) {
    spec.variant = ModelVariant::FactorModel;
    spec.nonzero_fraction = 0.1 * (model_id - 1);
    spec.sv_low = 0.2;
    spec.sv_high = 0.5;
    spec.noise_var = 0.5;
    return build_factor_model(spec, rng);
  }
  if (model_id == 6) {
    spec.variant = ModelVariant::Wishart;
    return build_wishart_model(spec, rng);
  }
  throw std::invalid_argument("build_table1_model: model_id in 1..6");
}

namespace detail {
// ||U diag(x) V' - C||_F via ||C||^2 - 2 x.t + ||x||^2 with t = u_k' C v_k.
inline double rie_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& t,
                           double truth_sq_norm) {
  return std::sqrt(std::max(
      0.0, truth_sq_norm - 2.0 * x.dot(t) + x.squaredNorm()));
}
}  // namespace detail

inline std::vector<Table1ModelResult> run_table1(const Table1Config& cfg) {
  std::vector<Table1ModelResult> results;
  for (int model_id = 1; model_id <= 6; ++model_id) {
    Table1ModelResult res;
    res.model_id = model_id;
    std::vector<double> q_emp, q_lp;
    JointGaussianModel frozen;
    if (!cfg.redraw_per_trial) {
      auto rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(model_id) << 32);
      frozen = build_table1_model(model_id, cfg.n, cfg.p, rng);
    }
    for (int t = 0; t < cfg.trials; ++t) {
      auto rng = trial_rng(cfg.seed, (static_cast<std::uint64_t>(model_id) << 32) |
                                         static_cast<std::uint64_t>(t));
      const JointGaussianModel model =
          cfg.redraw_per_trial ? build_table1_model(model_id, cfg.n, cfg.p, rng)
                               : frozen;
      const SampleSet smp = sample(model, cfg.T, rng);
      const EmpiricalSvd svd = svd_with_coeffs(smp);
      const Eigen::VectorXd oracle = oracle_singular_values(svd, model.block_C);
      const double truth_sq = model.block_C.squaredNorm();

      CleanOptions opt;
      opt.isotonic = cfg.isotonic;
      opt.eta_override = cfg.eta_override;
      const CleaningResult c1 = clean_algo1(svd, opt);
      const CleaningResult c2 = clean_algo2(svd.s, svd.n, svd.p, svd.T, opt);

      TrialReport tr;
      tr.model_id = model_id;
      tr.seed = cfg.seed;
      tr.T = cfg.T;
      tr.n = cfg.n;
      tr.p = cfg.p;
      tr.dist_empirical = detail::rie_distance(svd.s, oracle, truth_sq);
      tr.dist_algo1 = detail::rie_distance(c1.s_cleaned, oracle, truth_sq);
      tr.dist_algo2 = detail::rie_distance(c2.s_cleaned, oracle, truth_sq);
      tr.dist_lp = (ledoit_peche_projection(smp) - model.block_C).norm();
      tr.quotient_emp = 100.0 * tr.dist_algo1 / tr.dist_empirical;
      tr.quotient_lp = 100.0 * tr.dist_algo1 / tr.dist_lp;
      q_emp.push_back(tr.quotient_emp);
      q_lp.push_back(tr.quotient_lp);
      res.trials.push_back(tr);
    }
    res.quotient_emp = summarize(q_emp);
    res.quotient_lp = summarize(q_lp);
    results.push_back(res);
  }
  return results;
}

// ---------------------------------------------------------------------------
// Oracle-function estimation validation

struct OracleValidationConfig {
  std::vector<Eigen::Index> T_grid = {250, 500, 1000, 2000};
  double n_ratio = 0.4;
  double p_ratio = 0.7;
  cplx z = cplx(0.5, 1.0);
  int trials = 100;
  std::uint64_t seed = 1;
  BimodalDensity density;
};

struct OracleValidationPoint {
  Eigen::Index T = 0, n = 0, p = 0;
  StatSummary rel_diff_thm1;
  StatSummary rel_diff_thm2;
};

// Relative difference with an absolute-difference fallback when the
// denominator is degenerate.
inline double relative_difference(cplx truth, cplx estimate) {
  const double d = std::abs(truth - estimate);
  return std::abs(truth) < 1e-12 ? d : d / std::abs(truth);
}

inline std::vector<OracleValidationPoint> run_oracle_validation(
    const OracleValidationConfig& cfg) {
  std::vector<OracleValidationPoint> out;
  for (std::size_t ti = 0; ti < cfg.T_grid.size(); ++ti) {
    const Eigen::Index T = cfg.T_grid[ti];
    OracleValidationPoint pt;
    pt.T = T;
    pt.n = static_cast<Eigen::Index>(std::lround(cfg.n_ratio * T));
    pt.p = static_cast<Eigen::Index>(std::lround(cfg.p_ratio * T));
    std::vector<double> d1, d2;
    for (int t = 0; t < cfg.trials; ++t) {
      auto rng = trial_rng(cfg.seed, (static_cast<std::uint64_t>(ti) << 32) |
                                         static_cast<std::uint64_t>(t));
      const JointGaussianModel model =
          build_bimodal_model(pt.n, pt.p, cfg.density, rng);
      const SampleSet smp = sample(model, T, rng);
      const EmpiricalSvd svd = svd_with_coeffs(smp);
      const cplx l_true = oracle_L(svd, model.block_C, cfg.z);
      d1.push_back(relative_difference(l_true, eval_L_thm1(svd, cfg.z)));
      d2.push_back(relative_difference(l_true, eval_L_thm2(svd, cfg.z)));
    }
    pt.rel_diff_thm1 = summarize(d1);
    pt.rel_diff_thm2 = summarize(d2);
    out.push_back(pt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact-identity Monte-Carlo checks

struct IdentityReport {
  std::string name;
  double mc_mean = 0.0;
  double se = 0.0;
  double expected = 0.0;
  double sigma_distance = 0.0;  // |mc_mean - expected| / se
  bool pass = false;
};

struct Prop3Config {
  Eigen::Index n = 40, p = 70, T = 100;
  int trials = 2000;
  std::uint64_t seed = 1;
  int model_id = 3;  // table model used for the frozen truth
};

// The three mean identities relating empirical, oracle-cleaned and true
// singular values, checked on a frozen model (the identities are
// conditional on Sigma).
inline std::vector<IdentityReport> run_prop3_checks(const Prop3Config& cfg) {
  auto model_rng = trial_rng(cfg.seed, 0xfee1f00dULL);
  const JointGaussianModel model =
      build_table1_model(cfg.model_id, cfg.n, cfg.p, model_rng);
  const double sum_strue2 = model.block_C.squaredNorm();
  const double tr_ax = model.block_A.trace();
  const double tr_by = model.block_B.trace();
  const double t = static_cast<double>(cfg.T);

  std::vector<double> v_cross, v_emp2, v_unbiased;
  for (int k = 0; k < cfg.trials; ++k) {
    auto rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(k) + 1);
    const SampleSet smp = sample(model, cfg.T, rng);
    const EmpiricalSvd svd = svd_with_coeffs(smp);
    const Eigen::VectorXd oracle = oracle_singular_values(svd, model.block_C);
    v_cross.push_back(svd.s.dot(oracle));
    v_emp2.push_back(svd.s.squaredNorm());
    // raw estimator (no positive part): unbiasedness is the claim under test
    v_unbiased.push_back(
        (svd.s.squaredNorm() - svd.trace_cx * svd.trace_cy / t) /
        (1.0 + 1.0 / t - 2.0 / (t * t)));
  }

  auto make = [](const std::string& name, const StatSummary& s,
                 double expected) {
    IdentityReport r;
    r.name = name;
    r.mc_mean = s.mean;
    r.se = s.se;
    r.expected = expected;
    r.sigma_distance = s.se > 0.0 ? std::abs(s.mean - expected) / s.se : 0.0;
    r.pass = r.sigma_distance <= 4.0;
    return r;
  };
  std::vector<IdentityReport> out;
  out.push_back(make("mean sum s_k s_k_cleaned = sum s_true^2",
                     summarize(v_cross), sum_strue2));
  out.push_back(make(
      "mean sum s_k^2 = (1+1/T) sum s_true^2 + (1/T) Tr A Tr B",
      summarize(v_emp2),
      (1.0 + 1.0 / t) * sum_strue2 + tr_ax * tr_by / t));
  out.push_back(make("unbiased estimator mean = sum s_true^2",
                     summarize(v_unbiased), sum_strue2));
  return out;
}

// ---------------------------------------------------------------------------
// Overfitting experiment

struct OverfitConfig {
  Eigen::Index n = 200, p = 200, T = 2000, T_oos = 500;
  int trials = 3;
  std::uint64_t seed = 1;
  double sv_low = 0.2, sv_high = 1.0;  // spread of the true factor loadings
  double noise_var = 0.5;
};

struct OverfitResult {
  std::vector<double> predicted;  // s_cleaned / s_k, pooled over trials
  std::vector<double> observed;   // oos-overlap / in-sample-overlap
  double correlation = 0.0;
  double max_in_sample_identity_error = 0.0;  // |in-overlap - s_k^2| / s_k^2
};

// R = A F + noise with F standard Gaussian: the joint covariance of (R, F)
// has blocks [A A' + noise_var I, A; A', I].
inline JointGaussianModel build_overfit_model(const OverfitConfig& cfg,
                                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(cfg.sv_low, cfg.sv_high);
  Eigen::VectorXd sv(cfg.n);
  for (Eigen::Index i = 0; i < cfg.n; ++i) sv(i) = unif(rng);
  Eigen::MatrixXd u = haar_orthogonal(cfg.n, rng);
  Eigen::MatrixXd v = haar_orthogonal(cfg.p, rng);
  JointGaussianModel m;
  m.n = cfg.n;
  m.p = cfg.p;
  m.block_C = u * sv.asDiagonal() * v.topRows(cfg.n);
  m.block_A = m.block_C * m.block_C.transpose() +
              cfg.noise_var * Eigen::MatrixXd::Identity(cfg.n, cfg.n);
  m.block_B = Eigen::MatrixXd::Identity(cfg.p, cfg.p);
  m.sqrt_sigma = detail::matrix_sqrt_factor(m.sigma());
  return m;
}

inline OverfitResult run_overfitting(const OverfitConfig& cfg) {
  OverfitResult out;
  for (int t = 0; t < cfg.trials; ++t) {
    auto rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(t));
    const JointGaussianModel model = build_overfit_model(cfg, rng);
    const SampleSet in_sample = sample(model, cfg.T, rng);
    const SampleSet oos = sample(model, cfg.T_oos, rng);
    const EmpiricalSvd svd = svd_with_coeffs(in_sample);
    CleanOptions opt;
    opt.isotonic = false;  // per-mode prediction, no projection across modes
    const CleaningResult cleaned = clean_algo1(svd, opt);
    const Eigen::MatrixXd c_oos = cross_covariance(oos);
    const Eigen::VectorXd oos_proj =
        (svd.U.transpose() * (c_oos * svd.V)).diagonal();
    const Eigen::VectorXd in_proj =
        (svd.U.transpose() * (svd.cxy * svd.V)).diagonal();
    for (Eigen::Index k = 0; k < svd.n; ++k) {
      if (svd.s(k) <= 0.0) continue;
      const double in_overlap = svd.s(k) * in_proj(k);
      const double s2 = svd.s(k) * svd.s(k);
      out.max_in_sample_identity_error = std::max(
          out.max_in_sample_identity_error, std::abs(in_overlap - s2) / s2);
      out.predicted.push_back(cleaned.s_cleaned(k) / svd.s(k));
      out.observed.push_back(svd.s(k) * oos_proj(k) / in_overlap);
    }
  }
  out.correlation = pearson_correlation(out.predicted, out.observed);
  return out;
}

// ---------------------------------------------------------------------------
// Null-model cleaning

struct NullCleaningResult {
  double mean_empirical = 0.0;
  double mean_cleaned = 0.0;
};

inline NullCleaningResult run_null_cleaning(Eigen::Index n, Eigen::Index p,
                                            Eigen::Index T,
                                            std::uint64_t seed) {
  auto rng = trial_rng(seed, 0);
  const JointGaussianModel model = build_null_model(n, p);
  const SampleSet smp = sample(model, T, rng);
  const EmpiricalSvd svd = svd_with_coeffs(smp);
  const CleaningResult cleaned = clean_algo1(svd);
  NullCleaningResult out;
  out.mean_empirical = svd.s.mean();
  out.mean_cleaned = cleaned.s_cleaned.mean();
  return out;
}

// ---------------------------------------------------------------------------
// Report emission

inline nlohmann::json to_json(const StatSummary& s) {
  return {{"mean", s.mean},         {"se", s.se},
          {"halfwidth95", s.halfwidth95}, {"median", s.median},
          {"p2_5", s.p2_5},         {"p97_5", s.p97_5},
          {"count", s.count}};
}

inline nlohmann::json table1_report(const Table1Config& cfg,
                                    const std::vector<Table1ModelResult>& res) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : res)
    models.push_back({{"model_id", m.model_id},
                      {"quotient_algo_over_empirical", to_json(m.quotient_emp)},
                      {"quotient_algo_over_lp", to_json(m.quotient_lp)}});
  return {{"experiment", "table1"},
          {"n", cfg.n},
          {"p", cfg.p},
          {"T", cfg.T},
          {"trials", cfg.trials},
          {"seed", cfg.seed},
          {"isotonic", cfg.isotonic},
          {"models", models}};
}

inline nlohmann::json oracle_validation_report(
    const OracleValidationConfig& cfg,
    const std::vector<OracleValidationPoint>& pts) {
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& pt : pts)
    grid.push_back({{"T", pt.T},
                    {"n", pt.n},
                    {"p", pt.p},
                    {"rel_diff_thm1", to_json(pt.rel_diff_thm1)},
                    {"rel_diff_thm2", to_json(pt.rel_diff_thm2)}});
  return {{"experiment", "oracle_validation"},
          {"z_re", cfg.z.real()},
          {"z_im", cfg.z.imag()},
          {"trials", cfg.trials},
          {"seed", cfg.seed},
          {"grid", grid}};
}

inline nlohmann::json prop3_report(const Prop3Config& cfg,
                                   const std::vector<IdentityReport>& ids) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : ids)
    arr.push_back({{"name", r.name},
                   {"mc_mean", r.mc_mean},
                   {"se", r.se},
                   {"expected", r.expected},
                   {"sigma_distance", r.sigma_distance},
                   {"pass", r.pass}});
  return {{"experiment", "prop3"},
          {"n", cfg.n},
          {"p", cfg.p},
          {"T", cfg.T},
          {"trials", cfg.trials},
          {"seed", cfg.seed},
          {"identities", arr}};
}

inline nlohmann::json overfit_report(const OverfitConfig& cfg,
                                     const OverfitResult& res) {
  return {{"experiment", "overfit"},
          {"n", cfg.n},
          {"p", cfg.p},
          {"T", cfg.T},
          {"T_oos", cfg.T_oos},
          {"trials", cfg.trials},
          {"seed", cfg.seed},
          {"correlation", res.correlation},
          {"max_in_sample_identity_error", res.max_in_sample_identity_error},
          {"pairs", res.predicted.size()}};
}

inline void emit_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

inline void emit_table1_trials_csv(const std::vector<Table1ModelResult>& res,
                                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "model_id,trial,T,n,p,dist_empirical,dist_algo1,dist_algo2,dist_lp,"
         "quotient_emp,quotient_lp\n"
      << std::setprecision(17);
  for (const auto& m : res) {
    int t = 0;
    for (const auto& tr : m.trials)
      out << tr.model_id << "," << t++ << "," << tr.T << "," << tr.n << ","
          << tr.p << "," << tr.dist_empirical << "," << tr.dist_algo1 << ","
          << tr.dist_algo2 << "," << tr.dist_lp << "," << tr.quotient_emp
          << "," << tr.quotient_lp << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

inline void emit_scatter_csv(const std::vector<double>& x,
                             const std::vector<double>& y,
                             const std::string& header,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << header << "\n" << std::setprecision(17);
  for (std::size_t i = 0; i < x.size(); ++i)
    out << x[i] << "," << y[i] << "\n";
  if (!out) throw IoError("write failed: " + path);
}

// Histogram with fixed bin edges, emitted as (edge_lo, edge_hi, count) rows.
inline void emit_histogram_csv(const std::vector<double>& values, double lo,
                               double hi, int bins, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "edge_lo,edge_hi,count\n" << std::setprecision(17);
  const double w = (hi - lo) / bins;
  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    if (v < lo || v >= hi) continue;
    ++counts[static_cast<std::size_t>((v - lo) / w)];
  }
  for (int b = 0; b < bins; ++b)
    out << lo + b * w << "," << lo + (b + 1) * w << ","
        << counts[static_cast<std::size_t>(b)] << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace xcov
