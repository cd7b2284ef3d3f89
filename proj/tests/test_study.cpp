#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "smartcea/error.hpp"
#include "smartcea/study.hpp"

using namespace smartcea;

namespace {

TruthTable quick_truth() {
  DgpConfig cfg;
  const auto regimes = cfg.index_map.numbered_regimes();
  return true_values(cfg, regimes, 1, 100000, 1);
}

}  // namespace

TEST_CASE("an estimator that returns the truth has no bias and full coverage") {
  StudyConfig cfg;
  cfg.reps = 5;
  cfg.n = 50;
  cfg.truth = quick_truth();
  const TruthTable truth = cfg.truth;
  StudyArm oracle{"oracle", EstimatorKind::IPW,
                  [truth](const Dataset&, const std::vector<RegimeSpec>& regimes, int soc, double) {
                    std::vector<RegimeOutcome> out;
                    for (const auto& d : regimes) {
                      if (d.id == soc) continue;
                      const double v = truth.row(d.id).icer;
                      RegimeOutcome o{d.id, std::isfinite(v), std::nullopt, v, {v - 1, v + 1}, 0.1, 0.1};
                      if (!o.computed) o.failure = ErrorKind::DegenerateDenominator;
                      out.push_back(o);
                    }
                    return out;
                  }};
  cfg.arms = {oracle};
  const StudyResult r = run_study(cfg);
  for (const auto& m : r.metrics) {
    if (m.regime_id == 3) {
      CHECK(m.reps_used == 0);
      CHECK(m.degenerate_count == 5);
      continue;
    }
    CHECK(m.bias == doctest::Approx(0.0));
    CHECK(m.variance == doctest::Approx(0.0));
    CHECK(m.coverage_pct == 100.0);
    CHECK(m.mean_ci_width == doctest::Approx(2.0));
    CHECK(m.reps_used == 5);
  }
}

TEST_CASE("study runs are deterministic, thread independent and order free") {
  StudyConfig cfg;
  cfg.reps = 6;
  cfg.n = 600;
  cfg.seed = 77;
  cfg.truth = quick_truth();
  cfg.retain_degenerate = true;
  const StudyResult a = run_study(cfg, Execution::Parallel);
  const StudyResult b = run_study(cfg, Execution::Serial);
  REQUIRE(a.metrics.size() == 14);
  for (std::size_t k = 0; k < a.metrics.size(); ++k) {
    CHECK(a.metrics[k].estimator == b.metrics[k].estimator);
    CHECK((a.metrics[k].variance == b.metrics[k].variance ||
           (std::isnan(a.metrics[k].variance) && std::isnan(b.metrics[k].variance))));
    CHECK(a.metrics[k].coverage_pct == b.metrics[k].coverage_pct);
  }
  auto regimes = cfg.dgp.index_map.numbered_regimes();
  cfg.regimes.assign(regimes.rbegin(), regimes.rend());
  const StudyResult c = run_study(cfg);
  for (const auto& m : a.metrics) {
    const auto it = std::find_if(c.metrics.begin(), c.metrics.end(), [&](const StudyMetrics& x) {
      return x.estimator == m.estimator && x.regime_id == m.regime_id;
    });
    REQUIRE(it != c.metrics.end());
    CHECK(it->coverage_pct == m.coverage_pct);
    CHECK((it->mse == m.mse || (std::isnan(it->mse) && std::isnan(m.mse))));
  }
}

TEST_CASE("wider alpha lowers coverage") {
  StudyConfig cfg;
  cfg.reps = 40;
  cfg.n = 800;
  cfg.seed = 5;
  cfg.truth = quick_truth();
  cfg.arms = {analysis_arm(EstimatorKind::IPW, GKind::Known)};
  const StudyResult narrow = run_study(cfg);
  cfg.alpha = 0.20;
  const StudyResult wide = run_study(cfg);
  double lower = 0;
  for (std::size_t k = 0; k < narrow.metrics.size(); ++k) {
    if (narrow.metrics[k].reps_used == 0) continue;
    CHECK(wide.metrics[k].coverage_pct <= narrow.metrics[k].coverage_pct);
    lower += narrow.metrics[k].coverage_pct - wide.metrics[k].coverage_pct;
  }
  CHECK(lower > 0);
}

TEST_CASE("relative variance") {
  using V = std::vector<std::optional<double>>;
  const V a{1.0, 2.0, 4.0, std::nullopt};
  const auto same = relative_variance(a, a);
  CHECK(same.tmle_over_ipw == 1.0);
  CHECK(same.ipw_over_tmle == 1.0);
  const auto half = relative_variance(V{0.5, 1.0, 2.0, std::nullopt}, a);
  CHECK(half.tmle_over_ipw == doctest::Approx(0.25));
  CHECK(half.ipw_over_tmle == doctest::Approx(4.0));
  try {
    relative_variance(a, V{1.0, 2.0, std::nullopt, 3.0});
    FAIL("expected MisalignedReps");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MisalignedReps);
  }
  try {
    relative_variance(V{1.0, 1.0}, V{1.0, 2.0});
    FAIL("expected ZeroVariance");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroVariance);
  }
}

TEST_CASE("config validation and rep seeds") {
  StudyConfig cfg;
  cfg.reps = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK(study_rep_seed(1, 0) != study_rep_seed(1, 1));
  CHECK(study_rep_seed(1, 0) != study_rep_seed(2, 0));
}
