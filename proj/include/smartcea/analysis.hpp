#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smartcea/error.hpp"
#include "smartcea/estimate.hpp"
#include "smartcea/inference.hpp"

namespace smartcea {

struct AnalysisSpec {
  std::vector<RegimeSpec> regimes;
  int soc_id = 1;
  EstimatorKind estimator = EstimatorKind::TMLE;
  GKind g_kind = GKind::Fitted;
  GCovariates g_covariates = GCovariates::Main;
  QCovariates q_covariates = QCovariates::AppendixB;
  double alpha = 0.05;
  double cv_threshold = kDefaultCvThreshold;
};

struct Failure {
  ErrorKind kind;
  std::string message;
};

struct RegimeAnalysis {
  RegimeSpec regime;
  std::optional<RegimeMeanResult> ey, ec;  // absent if the estimator failed
  std::optional<EstimateWithIC> rd_cost;   // vs SOC, currency
  std::optional<EstimateWithIC> rd_eff;    // vs SOC, percentage points
  std::optional<IcerResult> icer;          // non-SOC regimes only
  std::optional<Failure> failure;          // why ey/ec/icer is missing
};

struct Analysis {
  GModel g;
  int soc_id = 1;
  std::vector<RegimeAnalysis> rows;  // in spec order

  const RegimeAnalysis& row(int regime_id) const;
};

// Regime means of Y and C, risk differences against SOC (cost x1, effect x100)
// and ICERs for every regime of the spec. Per-regime estimator failures are
// recorded in the row; a failing g model throws.
Analysis analyze(const Dataset& data, const AnalysisSpec& spec);

}  // namespace smartcea
