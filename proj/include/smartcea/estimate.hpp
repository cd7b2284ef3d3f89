#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smartcea/core.hpp"
#include "smartcea/glm.hpp"

namespace smartcea {

enum class Outcome { Effectiveness, Cost };
enum class EstimatorKind { IPW, TMLE };
enum class GKind { Known, Fitted };

// Covariates of the fitted treatment mechanism.
//  Main: stage 1 on X(1); stage 2 within each L(2) branch on (X(1), A(1), S(2)).
//  Saturated: empirical frequencies within each distinct covariate cell (for
//  discrete data).
enum class GCovariates { Main, Saturated };

// Covariates of the iterated outcome regressions.
//  Linear: intercept, X(1), and at stage 2 also S(2), L(2).
//  AppendixB: Linear plus X(1)^2, log(|X(1)| + .01) and, at stage 2,
//    |S(2) + X(1) + L(2) - 3 d1| and log of it plus .05 (first X(1) column only).
//  Saturated: cell means over distinct covariate values (the saturated
//    logistic MLE), for discrete data.
enum class QCovariates { Linear, AppendixB, Saturated };

std::string_view to_string(Outcome o);
std::string_view to_string(EstimatorKind e);
std::string_view to_string(GKind g);
std::string_view to_string(QCovariates q);
Outcome parse_outcome(std::string_view s);
EstimatorKind parse_estimator(std::string_view s);
GKind parse_g_kind(std::string_view s);
QCovariates parse_q_covariates(std::string_view s);

// Treatment mechanism evaluated at every record's observed treatments.
struct GModel {
  GKind kind = GKind::Known;
  GCovariates covariates = GCovariates::Main;
  double lower = 0.0, upper = 1.0;   // truncation bounds applied to each stage probability
  std::vector<double> g1;            // P(A(1) = a1_i | X(1)_i)
  std::vector<double> g2;            // P(A(2) = a2_i | history_i)
  std::vector<GlmFit> fits;          // fitted stage models (Fitted + Main only)
};

// Known: design probabilities, uniform over each stage's support. Fitted:
// sequential binary logistic models (or cell frequencies), truncated to
// [0.01, 0.99]. SeparationDetected is rethrown with stage/branch context.
GModel estimate_g(const Dataset& data, GKind kind, GCovariates covariates = GCovariates::Main);

std::vector<double> outcome_values(const Dataset& data, Outcome outcome);

// A Q-learner fits E[response | history] on the rows where `fit_weight` is
// positive and returns predictions in [0, 1] for every record, evaluated at the
// regime's treatments. Stage 2 regresses on (X(1), L(2), S(2)); stage 1 on X(1).
struct QProblem {
  const Dataset& data;
  const RegimeSpec& regime;
  int stage;  // 1 or 2
  std::span<const double> response;
  std::span<const double> fit_weight;
};
using QLearner = std::function<std::vector<double>(const QProblem&)>;

QLearner glm_learner(QCovariates covariates);

struct RegimeMeanRequest {
  RegimeSpec regime;
  Outcome outcome = Outcome::Effectiveness;
  EstimatorKind estimator = EstimatorKind::TMLE;
  QCovariates q_covariates = QCovariates::AppendixB;
  QLearner learner;  // overrides q_covariates when set
};

struct RegimeMeanResult {
  int regime_id = 0;
  Outcome outcome = Outcome::Effectiveness;
  EstimatorKind estimator = EstimatorKind::TMLE;
  EstimateWithIC estimate;
  double scale_min = 0.0, scale_max = 1.0;  // TMLE min-max bounds of the outcome
  double epsilon2 = 0.0, epsilon1 = 0.0;   // fitted fluctuation parameters
};

// psi = mean(I[consistent] / (g1 g2) * outcome); IC_i = weighted outcome_i - psi.
EstimateWithIC ipw_mean(const Dataset& data, const GModel& g, const RegimeSpec& regime, Outcome outcome);

RegimeMeanResult tmle_mean(const Dataset& data, const GModel& g, const RegimeMeanRequest& request);

RegimeMeanResult regime_mean(const Dataset& data, const GModel& g, const RegimeMeanRequest& request);

}  // namespace smartcea
