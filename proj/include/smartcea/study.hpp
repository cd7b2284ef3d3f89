#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smartcea/analysis.hpp"
#include "smartcea/dgp.hpp"
#include "smartcea/execution.hpp"
#include "smartcea/inference.hpp"

namespace smartcea {

// One regime's ICER from one estimator on one simulated dataset.
struct RegimeOutcome {
  int regime_id = 0;
  bool computed = false;  // false: the ICER could not be formed
  std::optional<ErrorKind> failure;
  double icer = 0.0;
  Interval ci{};
  double cv_cost = 0.0, cv_eff = 0.0;
};

// Returns one RegimeOutcome per non-SOC regime.
using StudyEstimator = std::function<std::vector<RegimeOutcome>(const Dataset&, const std::vector<RegimeSpec>&,
                                                                int soc_id, double alpha)>;

struct StudyArm {
  std::string label;                           // e.g. "ipw", "tmle"
  EstimatorKind kind = EstimatorKind::IPW;     // used to pair arms for relative variance
  StudyEstimator estimator;
};

// Analysis-backed estimator arm.
StudyArm analysis_arm(EstimatorKind estimator, GKind g, QCovariates q = QCovariates::AppendixB);

// IPW with known g against TMLE with fitted g, both on the same datasets.
std::vector<StudyArm> default_arms();

struct StudyConfig {
  std::size_t reps = 200;
  std::size_t n = 1809;
  std::uint64_t seed = 1;
  std::vector<StudyArm> arms = default_arms();
  std::vector<RegimeSpec> regimes;  // empty: the eight Appendix-B regimes
  int soc_id = 1;
  double alpha = 0.05;
  double cv_threshold = kDefaultCvThreshold;
  // Keep reps whose ICER exists but is unreliable (a CV at or above the
  // threshold). Reps where the ICER cannot be computed are always excluded.
  bool retain_degenerate = false;
  DgpConfig dgp{};
  TruthTable truth;  // must cover every non-SOC regime
  std::function<void(std::size_t done, std::size_t total)> progress;

  void validate() const;
};

struct StudyMetrics {
  std::string estimator;
  int regime_id = 0;
  std::size_t reps_used = 0;
  double bias = 0.0;
  double variance = 0.0;  // 1/R divisor, so mse = bias^2 + variance
  double mse = 0.0;
  double mean_ci_width = 0.0;
  double coverage_pct = 0.0;
  double avg_cv_cost = 0.0;
  double avg_cv_eff = 0.0;
  std::optional<double> rel_var_tmle_over_ipw;  // TMLE rows only
  std::optional<double> rel_var_ipw_over_tmle;
  std::size_t degenerate_count = 0;  // reps where the ICER could not be computed
  std::size_t unreliable_count = 0;  // reps with a CV at or above the threshold
};

struct StudyResult {
  std::vector<StudyMetrics> metrics;  // arm-major, regimes in config order
  // outcomes[arm][rep] -> one entry per non-SOC regime
  std::vector<std::vector<std::vector<RegimeOutcome>>> outcomes;
};

StudyResult run_study(const StudyConfig& config, Execution exec = Execution::Parallel);

struct RelativeVariance {
  double tmle_over_ipw;
  double ipw_over_tmle;
};

// Per-rep estimates (nullopt = excluded rep). Both streams must exclude the
// same reps (MisalignedReps otherwise); ZeroVariance if either variance is 0.
RelativeVariance relative_variance(const std::vector<std::optional<double>>& tmle,
                                   const std::vector<std::optional<double>>& ipw);

// Dataset seed of study rep r.
std::uint64_t study_rep_seed(std::uint64_t master_seed, std::size_t rep);

}  // namespace smartcea
