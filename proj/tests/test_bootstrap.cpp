#include <doctest.h>

#include <atomic>
#include <cmath>

#include "smartcea/analysis.hpp"
#include "smartcea/bootstrap.hpp"
#include "smartcea/dgp.hpp"
#include "smartcea/error.hpp"

using namespace smartcea;

namespace {

Dataset small(std::size_t n) {
  DgpConfig cfg;
  cfg.n = n;
  cfg.seed = 31;
  return simulate_smart(cfg);
}

double mean_cost(const Dataset& d) {
  double s = 0;
  for (const auto& r : d.records()) s += r.c;
  return s / d.size();
}

}  // namespace

TEST_CASE("type-7 quantile") {
  const std::vector<double> v{4, 1, 3, 2};
  CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), Error);
}

TEST_CASE("resamples are addressable") {
  const auto a = resample_rows(50, 9, 3), b = resample_rows(50, 9, 3), c = resample_rows(50, 9, 4);
  CHECK(a == b);
  CHECK(a != c);
  for (auto i : a) CHECK(i < 50);
}

TEST_CASE("percentile interval of a mean") {
  const Dataset d = small(400);
  const BootstrapResult p = bootstrap_ci(d, mean_cost, 400, 5);
  const BootstrapResult s = bootstrap_ci(d, mean_cost, 400, 5, 0.05, Execution::Serial);
  CHECK(p.ci == s.ci);
  CHECK(p.replicates == s.replicates);
  CHECK(p.ci[0] < mean_cost(d));
  CHECK(p.ci[1] > mean_cost(d));
  CHECK(p.failures.empty());
  CHECK_THROWS_AS(bootstrap_ci(d, mean_cost, 99, 5), Error);
}

TEST_CASE("failed replicates are counted and bounded") {
  const Dataset d = small(200);
  const Statistic sometimes = [](const Dataset& x) {
    if (x[0].id.size() == 1) throw Error(ErrorKind::ZeroSupport, "synthetic");
    return mean_cost(x);
  };
  const BootstrapResult r = bootstrap_ci(d, sometimes, 200, 2);
  CHECK(r.failures.size() + r.replicates.size() == 200);
  const Statistic never = [](const Dataset&) -> double { throw Error(ErrorKind::ZeroSupport, "synthetic"); };
  try {
    bootstrap_ci(d, never, 100, 2);
    FAIL("expected TooManyDegenerate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooManyDegenerate);
  }
}

TEST_CASE("ICER statistic reruns the pipeline") {
  const Dataset d = small(1809);
  AnalysisSpec spec;
  const auto r = RegimeIndexMap::calibrated().numbered_regimes();
  spec.regimes = {r[0], r[1]};
  spec.estimator = EstimatorKind::IPW;
  spec.g_kind = GKind::Known;
  const Statistic stat = icer_statistic(spec, 2);
  CHECK(stat(d) == doctest::Approx(analyze(d, spec).row(2).icer->icer).epsilon(1e-12));
  CHECK_THROWS_AS(icer_statistic(spec, 1), Error);
}
