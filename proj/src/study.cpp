#include "smartcea/study.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <set>
#include <string>

#include "smartcea/random.hpp"

namespace smartcea {

std::uint64_t study_rep_seed(std::uint64_t master_seed, std::size_t rep) {
  return mix_seed(mix_seed(master_seed, static_cast<std::uint64_t>(StreamTag::StudyRep)), rep);
}

StudyArm analysis_arm(EstimatorKind estimator, GKind g, QCovariates q) {
  StudyArm arm;
  arm.label = std::string(to_string(estimator));
  arm.kind = estimator;
  arm.estimator = [estimator, g, q](const Dataset& data, const std::vector<RegimeSpec>& regimes, int soc_id,
                                    double alpha) {
    AnalysisSpec spec;
    spec.regimes = regimes;
    spec.soc_id = soc_id;
    spec.estimator = estimator;
    spec.g_kind = g;
    spec.q_covariates = q;
    spec.alpha = alpha;
    std::vector<RegimeOutcome> out;
    std::optional<Analysis> a;
    std::optional<ErrorKind> g_failure;
    try {
      a = analyze(data, spec);
    } catch (const Error& e) {
      g_failure = e.kind();
    }
    for (const auto& d : regimes) {
      if (d.id == soc_id) continue;
      RegimeOutcome o;
      o.regime_id = d.id;
      if (g_failure) {
        o.failure = g_failure;
      } else if (const auto& row = a->row(d.id); row.icer) {
        o.computed = true;
        o.icer = row.icer->icer;
        o.ci = row.icer->ci;
        o.cv_cost = row.icer->cv_cost;
        o.cv_eff = row.icer->cv_eff;
      } else {
        o.failure = row.failure->kind;
      }
      out.push_back(o);
    }
    return out;
  };
  return arm;
}

std::vector<StudyArm> default_arms() {
  return {analysis_arm(EstimatorKind::IPW, GKind::Known), analysis_arm(EstimatorKind::TMLE, GKind::Fitted)};
}

void StudyConfig::validate() const {
  if (reps < 1) throw Error(ErrorKind::InvalidInput, "reps must be at least 1");
  if (n < 2) throw Error(ErrorKind::InvalidInput, "n must be at least 2");
  if (arms.empty()) throw Error(ErrorKind::InvalidInput, "at least one estimator arm is required");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidInput, "alpha must lie in (0, 1)");
  if (!(cv_threshold > 0.0)) throw Error(ErrorKind::InvalidInput, "cv_threshold must be positive");
  dgp.validate();
}

RelativeVariance relative_variance(const std::vector<std::optional<double>>& tmle,
                                   const std::vector<std::optional<double>>& ipw) {
  if (tmle.size() != ipw.size()) throw Error(ErrorKind::MisalignedReps, "estimate streams differ in rep count");
  std::vector<double> a, b;
  for (std::size_t r = 0; r < tmle.size(); ++r) {
    if (tmle[r].has_value() != ipw[r].has_value()) {
      throw Error(ErrorKind::MisalignedReps, "rep " + std::to_string(r + 1) + " is excluded for one estimator only");
    }
    if (tmle[r]) {
      a.push_back(*tmle[r]);
      b.push_back(*ipw[r]);
    }
  }
  auto pop_var = [](const std::vector<double>& v) {
    long double m = 0.0L, s = 0.0L;
    for (double x : v) m += x;
    m /= static_cast<long double>(v.size());
    for (double x : v) s += (x - m) * (x - m);
    return static_cast<double>(s / static_cast<long double>(v.size()));
  };
  if (a.empty()) throw Error(ErrorKind::ZeroVariance, "no reps shared by both estimators");
  const double va = pop_var(a), vb = pop_var(b);
  if (va == 0.0 || vb == 0.0) throw Error(ErrorKind::ZeroVariance, "an estimator has zero variance across reps");
  return {va / vb, vb / va};
}

namespace {

bool included(const RegimeOutcome& o, const StudyConfig& cfg) {
  if (!o.computed) return false;
  if (cfg.retain_degenerate) return true;
  return o.cv_cost < cfg.cv_threshold && o.cv_eff < cfg.cv_threshold;
}

}  // namespace

StudyResult run_study(const StudyConfig& cfg, Execution exec) {
  cfg.validate();
  std::vector<RegimeSpec> regimes = cfg.regimes;
  if (regimes.empty()) {
    const auto numbered = cfg.dgp.index_map.numbered_regimes();
    regimes.assign(numbered.begin(), numbered.end());
  }
  std::vector<int> targets;
  for (const auto& d : regimes)
    if (d.id != cfg.soc_id) targets.push_back(d.id);
  for (int id : targets) (void)cfg.truth.row(id);

  const std::size_t A = cfg.arms.size(), R = cfg.reps;
  StudyResult res;
  res.outcomes.assign(A, std::vector<std::vector<RegimeOutcome>>(R));
  std::vector<std::exception_ptr> fatal(R);
  std::atomic<std::size_t> done{0};

  auto run_rep = [&](std::size_t r) {
    try {
      DgpConfig dgp = cfg.dgp;
      dgp.n = cfg.n;
      dgp.seed = study_rep_seed(cfg.seed, r);
      const Dataset data = simulate_smart(dgp, Execution::Serial);
      for (std::size_t a = 0; a < A; ++a) {
        auto out = cfg.arms[a].estimator(data, regimes, cfg.soc_id, cfg.alpha);
        if (out.size() != targets.size()) {
          throw Error(ErrorKind::InvalidInput, "estimator arm '" + cfg.arms[a].label + "' returned " +
                                                   std::to_string(out.size()) + " regimes, expected " +
                                                   std::to_string(targets.size()));
        }
        res.outcomes[a][r] = std::move(out);
      }
    } catch (...) {
      fatal[r] = std::current_exception();
    }
    const std::size_t k = ++done;
    if (cfg.progress) {
#pragma omp critical(study_progress)
      cfg.progress(k, R);
    }
  };
  if (exec == Execution::Serial) {
    for (std::size_t r = 0; r < R; ++r) run_rep(r);
  } else {
    const auto count = static_cast<std::ptrdiff_t>(R);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t r = 0; r < count; ++r) run_rep(static_cast<std::size_t>(r));
  }
  for (const auto& f : fatal)
    if (f) std::rethrow_exception(f);

  // Locate the IPW and TMLE arms for the relative-variance columns.
  std::optional<std::size_t> ipw_arm, tmle_arm;
  for (std::size_t a = 0; a < A; ++a) {
    if (cfg.arms[a].kind == EstimatorKind::IPW && !ipw_arm) ipw_arm = a;
    if (cfg.arms[a].kind == EstimatorKind::TMLE && !tmle_arm) tmle_arm = a;
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const double truth = cfg.truth.row(targets[t]).icer;
      StudyMetrics m;
      m.estimator = cfg.arms[a].label;
      m.regime_id = targets[t];
      long double sum = 0, width = 0, cvc = 0, cve = 0, sq_err = 0;
      std::size_t covered = 0;
      std::vector<double> est;
      for (std::size_t r = 0; r < R; ++r) {
        const auto& o = res.outcomes[a][r][t];
        if (!o.computed) ++m.degenerate_count;
        if (o.computed && !(o.cv_cost < cfg.cv_threshold && o.cv_eff < cfg.cv_threshold)) ++m.unreliable_count;
        if (!included(o, cfg)) continue;
        est.push_back(o.icer);
        sum += o.icer;
        width += o.ci[1] - o.ci[0];
        cvc += o.cv_cost;
        cve += o.cv_eff;
        sq_err += (o.icer - truth) * (o.icer - truth);
        // An undefined true ICER is never covered.
        if (std::isfinite(truth) && o.ci[0] <= truth && truth <= o.ci[1]) ++covered;
      }
      m.reps_used = est.size();
      if (est.empty()) {
        m.bias = m.variance = m.mse = m.mean_ci_width = m.coverage_pct = m.avg_cv_cost = m.avg_cv_eff = nan;
      } else {
        const auto k = static_cast<long double>(est.size());
        const long double mean = sum / k;
        long double var = 0;
        for (double x : est) var += (x - mean) * (x - mean);
        m.bias = static_cast<double>(mean - truth);
        m.variance = static_cast<double>(var / k);
        m.mse = static_cast<double>(sq_err / k);
        m.mean_ci_width = static_cast<double>(width / k);
        m.coverage_pct = 100.0 * static_cast<double>(covered) / static_cast<double>(est.size());
        m.avg_cv_cost = static_cast<double>(cvc / k);
        m.avg_cv_eff = static_cast<double>(cve / k);
      }
      if (tmle_arm && ipw_arm && a == *tmle_arm) {
        // Paired comparison on the reps both estimators kept.
        std::vector<std::optional<double>> tm(R), ip(R);
        for (std::size_t r = 0; r < R; ++r) {
          const auto& ot = res.outcomes[*tmle_arm][r][t];
          const auto& oi = res.outcomes[*ipw_arm][r][t];
          if (included(ot, cfg) && included(oi, cfg)) {
            tm[r] = ot.icer;
            ip[r] = oi.icer;
          }
        }
        try {
          const auto rv = relative_variance(tm, ip);
          m.rel_var_tmle_over_ipw = rv.tmle_over_ipw;
          m.rel_var_ipw_over_tmle = rv.ipw_over_tmle;
        } catch (const Error&) {
          // left empty: no shared reps or zero variance
        }
      }
      res.metrics.push_back(std::move(m));
    }
  }
  return res;
}

}  // namespace smartcea
