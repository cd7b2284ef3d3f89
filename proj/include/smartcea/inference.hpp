#pragma once

#include <array>
#include <span>
#include <vector>

#include "smartcea/core.hpp"

namespace smartcea {

using Interval = std::array<double, 2>;

inline constexpr double kDefaultCvThreshold = 2.0;
inline constexpr double kDenominatorEpsilon = 1e-12;

// Standard normal quantile z_{1 - alpha/2}.
double normal_critical_value(double alpha);

// psi -/+ z_{1-alpha/2} sqrt(var(ic)/n).
Interval wald_ci(double psi, std::span<const double> ic, double alpha = 0.05);

// scale * (d - d0) for both the estimate and its influence curve. Use scale 100
// for effectiveness (percentage points) and 1 for cost.
EstimateWithIC risk_difference(const EstimateWithIC& d, const EstimateWithIC& d0, double scale = 1.0);

struct DeltaMethodIc {
  double icer;
  std::vector<double> ic;
};

// icer = a / b, IC = IC_a / b - a / b^2 IC_b. Throws DegenerateDenominator when
// |b| < epsilon.
DeltaMethodIc delta_method_ic(const EstimateWithIC& rd_cost, const EstimateWithIC& rd_eff,
                              double epsilon = kDenominatorEpsilon);

// Cost per additional person with the outcome: rd_cost in currency, rd_eff in
// percentage points, so icer is currency per percentage point.
struct IcerResult {
  int regime_id = 0;
  double icer = 0.0;
  EstimateWithIC rd_cost;
  EstimateWithIC rd_eff;
  std::vector<double> ic_icer;
  double se = 0.0;
  Interval ci{};
  double cv_cost = 0.0;  // se(rd_cost) / |rd_cost|
  double cv_eff = 0.0;
  bool reliable = false;  // both CVs below the threshold
};

IcerResult icer(const EstimateWithIC& rd_cost, const EstimateWithIC& rd_eff, double cv_threshold = kDefaultCvThreshold,
                double alpha = 0.05, double epsilon = kDenominatorEpsilon);

struct VarianceDecomposition {
  double term_a = 0.0;    // cv_cost^2
  double term_b = 0.0;    // cv_eff^2
  double cov_term = 0.0;  // 2 cov(IC_cost, IC_eff) / (n rd_eff rd_cost)
  double var_total = 0.0; // icer^2 (a + b - cov_term), or the direct variance
  bool decomposed = true; // false when rd_cost = 0 (the terms are undefined)
};

VarianceDecomposition icer_variance_decomposition(const IcerResult& result);

struct ContrastResult {
  int regime_i = 0, regime_j = 0;
  double diff = 0.0;
  std::vector<double> ic;
  double se = 0.0;
  Interval ci{};
};

ContrastResult contrast(const IcerResult& i, const IcerResult& j, double alpha = 0.05);

}  // namespace smartcea
