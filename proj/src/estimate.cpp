#include "smartcea/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "smartcea/dgp.hpp"
#include "smartcea/error.hpp"

namespace smartcea {

std::string_view to_string(Outcome o) { return o == Outcome::Effectiveness ? "y" : "c"; }
std::string_view to_string(EstimatorKind e) { return e == EstimatorKind::IPW ? "ipw" : "tmle"; }
std::string_view to_string(GKind g) { return g == GKind::Known ? "known" : "fitted"; }
std::string_view to_string(QCovariates q) {
  switch (q) {
    case QCovariates::Linear: return "linear";
    case QCovariates::AppendixB: return "appendix-b";
    case QCovariates::Saturated: return "saturated";
  }
  return "?";
}

Outcome parse_outcome(std::string_view s) {
  if (s == "y") return Outcome::Effectiveness;
  if (s == "c") return Outcome::Cost;
  throw Error(ErrorKind::InvalidInput, "unknown outcome '" + std::string(s) + "' (expected y or c)");
}
EstimatorKind parse_estimator(std::string_view s) {
  if (s == "ipw") return EstimatorKind::IPW;
  if (s == "tmle") return EstimatorKind::TMLE;
  throw Error(ErrorKind::InvalidInput, "unknown estimator '" + std::string(s) + "' (expected ipw or tmle)");
}
GKind parse_g_kind(std::string_view s) {
  if (s == "known") return GKind::Known;
  if (s == "fitted") return GKind::Fitted;
  throw Error(ErrorKind::InvalidInput, "unknown g model '" + std::string(s) + "' (expected known or fitted)");
}
QCovariates parse_q_covariates(std::string_view s) {
  if (s == "linear") return QCovariates::Linear;
  if (s == "appendix-b") return QCovariates::AppendixB;
  if (s == "saturated") return QCovariates::Saturated;
  throw Error(ErrorKind::InvalidInput,
              "unknown q covariates '" + std::string(s) + "' (expected linear, appendix-b or saturated)");
}

namespace {

constexpr double kGLower = 0.01, kGUpper = 0.99;

double clamp_prob(double p) { return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor); }

[[noreturn]] void rethrow_with_context(const Error& e, const std::string& where) {
  throw Error(e.kind(), where + ": " + e.what());
}

// P(A = code of each row) under a sequential-binary model: h_j = P(A = codes[j] | A not in codes[<j]).
// `design` rows correspond to `rows`.
std::vector<double> sequential_binary(const DesignMatrix& design, const std::vector<TreatmentCode>& codes,
                                      const std::vector<TreatmentCode>& observed, std::vector<GlmFit>& fits_out) {
  const std::size_t n = observed.size();
  std::vector<double> prob(n, 1.0);
  std::vector<double> remaining(n, 1.0);  // prod of (1 - h_m) over earlier codes
  std::vector<bool> done(n, false);
  for (std::size_t j = 0; j + 1 < codes.size(); ++j) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(n)), w(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto pos = std::find(codes.begin(), codes.end(), observed[i]) - codes.begin();
      w[static_cast<Eigen::Index>(i)] = static_cast<std::size_t>(pos) >= j ? 1.0 : 0.0;
      y[static_cast<Eigen::Index>(i)] = observed[i] == codes[j] ? 1.0 : 0.0;
    }
    GlmFit fit = fit_logistic(design, y, w);
    const Eigen::VectorXd h = predict(fit, design);
    fits_out.push_back(std::move(fit));
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      if (observed[i] == codes[j]) {
        prob[i] = remaining[i] * h[static_cast<Eigen::Index>(i)];
        done[i] = true;
      } else {
        remaining[i] *= 1.0 - h[static_cast<Eigen::Index>(i)];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!done[i]) prob[i] = remaining[i];
  return prob;
}

// Cell-frequency estimate of P(A = observed | cell).
template <class Key>
std::vector<double> cell_frequencies(const std::vector<Key>& keys, const std::vector<TreatmentCode>& observed) {
  std::map<Key, std::map<TreatmentCode, double>> counts;
  std::map<Key, double> totals;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    counts[keys[i]][observed[i]] += 1.0;
    totals[keys[i]] += 1.0;
  }
  std::vector<double> p(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) p[i] = counts[keys[i]][observed[i]] / totals[keys[i]];
  return p;
}

}  // namespace

GModel estimate_g(const Dataset& data, GKind kind, GCovariates covariates) {
  const std::size_t n = data.size();
  const auto& sup = data.supports();
  GModel g;
  g.kind = kind;
  g.covariates = covariates;
  g.g1.resize(n);
  g.g2.resize(n);
  if (kind == GKind::Known) {
    for (std::size_t i = 0; i < n; ++i) {
      g.g1[i] = 1.0 / static_cast<double>(sup.stage1.size());
      g.g2[i] = 1.0 / static_cast<double>(sup.stage2(data[i].l2).size());
    }
    return g;
  }
  g.lower = kGLower;
  g.upper = kGUpper;
  const std::size_t p = data.covariate_count();

  // Stage 1.
  {
    std::vector<TreatmentCode> a1(n);
    for (std::size_t i = 0; i < n; ++i) a1[i] = data[i].a1;
    if (sup.stage1.size() == 1) {
      std::fill(g.g1.begin(), g.g1.end(), 1.0);
    } else if (covariates == GCovariates::Saturated) {
      std::vector<std::vector<double>> keys(n);
      for (std::size_t i = 0; i < n; ++i) keys[i] = data[i].x1;
      g.g1 = cell_frequencies(keys, a1);
    } else {
      DesignMatrix X;
      X.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(1 + p));
      X.column_labels.push_back("(intercept)");
      for (const auto& name : data.covariate_names()) X.column_labels.push_back(name);
      for (std::size_t i = 0; i < n; ++i) {
        X.values(static_cast<Eigen::Index>(i), 0) = 1.0;
        for (std::size_t j = 0; j < p; ++j) X.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(1 + j)) = data[i].x1[j];
      }
      try {
        g.g1 = sequential_binary(X, sup.stage1, a1, g.fits);
      } catch (const Error& e) {
        rethrow_with_context(e, "g model stage 1");
      }
    }
  }

  // Stage 2, separately within each lapse branch.
  for (const auto& [l2, codes] : sup.stage2_by_l2) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i)
      if (data[i].l2 == l2) rows.push_back(i);
    if (rows.empty()) continue;
    std::vector<TreatmentCode> a2(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) a2[r] = data[rows[r]].a2;
    std::vector<double> prob;
    if (codes.size() == 1) {
      prob.assign(rows.size(), 1.0);
    } else if (covariates == GCovariates::Saturated) {
      std::vector<std::vector<double>> keys(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& rec = data[rows[r]];
        keys[r] = rec.x1;
        keys[r].push_back(rec.a1);
        keys[r].push_back(rec.s2);
      }
      prob = cell_frequencies(keys, a2);
    } else {
      const std::size_t a1_dummies = sup.stage1.size() - 1;
      DesignMatrix X;
      X.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(2 + p + a1_dummies));
      X.column_labels.push_back("(intercept)");
      for (const auto& name : data.covariate_names()) X.column_labels.push_back(name);
      for (std::size_t k = 1; k < sup.stage1.size(); ++k) X.column_labels.push_back("a1=" + std::to_string(sup.stage1[k]));
      X.column_labels.push_back("s2");
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& rec = data[rows[r]];
        const auto i = static_cast<Eigen::Index>(r);
        Eigen::Index col = 0;
        X.values(i, col++) = 1.0;
        for (double x : rec.x1) X.values(i, col++) = x;
        for (std::size_t k = 1; k < sup.stage1.size(); ++k) X.values(i, col++) = rec.a1 == sup.stage1[k] ? 1.0 : 0.0;
        X.values(i, col++) = rec.s2;
      }
      try {
        prob = sequential_binary(X, codes, a2, g.fits);
      } catch (const Error& e) {
        rethrow_with_context(e, "g model stage 2 (l2=" + std::to_string(l2) + ")");
      }
    }
    for (std::size_t r = 0; r < rows.size(); ++r) g.g2[rows[r]] = prob[r];
  }

  for (std::size_t i = 0; i < n; ++i) {
    g.g1[i] = std::clamp(g.g1[i], g.lower, g.upper);
    g.g2[i] = std::clamp(g.g2[i], g.lower, g.upper);
  }
  return g;
}

std::vector<double> outcome_values(const Dataset& data, Outcome outcome) {
  std::vector<double> v(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    v[i] = outcome == Outcome::Effectiveness ? static_cast<double>(data[i].y) : data[i].c;
  }
  return v;
}

namespace {

// Regression features of record r for the given stage (intercept included).
std::vector<double> q_features(const TrajectoryRecord& r, const RegimeSpec& d, int stage, QCovariates cov) {
  std::vector<double> f{1.0};
  f.insert(f.end(), r.x1.begin(), r.x1.end());
  if (stage == 2) {
    f.push_back(r.s2);
    f.push_back(r.l2);
  }
  if (cov == QCovariates::AppendixB) {
    const double x = r.x1.front();
    f.push_back(x * x);
    f.push_back(std::log(std::abs(x) + 0.01));
    if (stage == 2) {
      const double w = std::abs(r.s2 + x + r.l2 - 3.0 * d.d1);
      f.push_back(w);
      f.push_back(std::log(w + 0.05));
    }
  }
  return f;
}

std::vector<double> weighted_mean_fallback(const QProblem& q) {
  long double num = 0.0L, den = 0.0L;
  for (std::size_t i = 0; i < q.response.size(); ++i) {
    num += static_cast<long double>(q.fit_weight[i]) * q.response[i];
    den += q.fit_weight[i];
  }
  return std::vector<double>(q.response.size(), clamp_prob(static_cast<double>(num / den)));
}

std::vector<double> saturated_learner(const QProblem& q) {
  std::map<std::vector<double>, std::pair<long double, long double>> cells;
  auto key = [&](const TrajectoryRecord& r) {
    std::vector<double> k = r.x1;
    if (q.stage == 2) {
      k.push_back(r.l2);
      k.push_back(r.s2);
    }
    return k;
  };
  for (std::size_t i = 0; i < q.data.size(); ++i) {
    if (q.fit_weight[i] <= 0.0) continue;
    auto& c = cells[key(q.data[i])];
    c.first += static_cast<long double>(q.fit_weight[i]) * q.response[i];
    c.second += q.fit_weight[i];
  }
  const auto fallback = weighted_mean_fallback(q);
  std::vector<double> out(q.data.size());
  for (std::size_t i = 0; i < q.data.size(); ++i) {
    auto it = cells.find(key(q.data[i]));
    out[i] = it == cells.end() ? fallback[i] : clamp_prob(static_cast<double>(it->second.first / it->second.second));
  }
  return out;
}

std::vector<double> glm_fit_predict(const QProblem& q, QCovariates cov) {
  const std::size_t n = q.data.size();
  std::vector<std::vector<double>> feats(n);
  for (std::size_t i = 0; i < n; ++i) feats[i] = q_features(q.data[i], q.regime, q.stage, cov);
  const std::size_t p = feats.front().size();

  std::vector<std::size_t> fit_rows;
  for (std::size_t i = 0; i < n; ++i)
    if (q.fit_weight[i] > 0.0) fit_rows.push_back(i);
  if (fit_rows.empty()) throw Error(ErrorKind::ZeroSupport, "no rows to fit the outcome regression on");

  // Keep the intercept plus every column that varies on the fitting rows.
  std::vector<std::size_t> cols{0};
  for (std::size_t j = 1; j < p; ++j) {
    const double first = feats[fit_rows.front()][j];
    for (std::size_t i : fit_rows) {
      if (feats[i][j] != first) {
        cols.push_back(j);
        break;
      }
    }
  }
  auto build = [&](const std::vector<std::size_t>& rows) {
    DesignMatrix X;
    X.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < cols.size(); ++c)
        X.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = feats[rows[r]][cols[c]];
    return X;
  };
  const DesignMatrix Xfit = build(fit_rows);
  Eigen::VectorXd y(static_cast<Eigen::Index>(fit_rows.size())), w(static_cast<Eigen::Index>(fit_rows.size()));
  for (std::size_t r = 0; r < fit_rows.size(); ++r) {
    y[static_cast<Eigen::Index>(r)] = q.response[fit_rows[r]];
    w[static_cast<Eigen::Index>(r)] = q.fit_weight[fit_rows[r]];
  }
  GlmFit fit;
  try {
    fit = fit_logistic(Xfit, y, w);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SeparationDetected) return weighted_mean_fallback(q);
    throw;
  }
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const Eigen::VectorXd pred = predict(fit, build(all));
  return std::vector<double>(pred.data(), pred.data() + pred.size());
}

// Intercept-only weighted logistic fluctuation with offset logit(q); returns epsilon.
double fluctuate(std::span<const double> response, std::span<const double> q, std::span<const double> weight,
                 const char* stage) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < weight.size(); ++i)
    if (weight[i] > 0.0) rows.push_back(i);
  const auto m = static_cast<Eigen::Index>(rows.size());
  DesignMatrix X{Eigen::MatrixXd::Ones(m, 1), {"epsilon"}};
  Eigen::VectorXd y(m), w(m), off(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const std::size_t i = rows[static_cast<std::size_t>(r)];
    y[r] = response[i];
    w[r] = weight[i];
    off[r] = logit(q[i]);
  }
  GlmFit fit;
  try {
    fit = fit_logistic(X, y, w, off);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SeparationDetected) {
      throw Error(ErrorKind::FluctuationDiverged, std::string(stage) + " fluctuation diverged: " + e.what());
    }
    throw;
  }
  if (!fit.converged) {
    throw Error(ErrorKind::FluctuationDiverged, std::string(stage) + " fluctuation did not converge (max |score| " +
                                                    std::to_string(fit.max_abs_score) + ")");
  }
  return fit.coefficients[0];
}

void check_g(const Dataset& data, const GModel& g) {
  if (g.g1.size() != data.size() || g.g2.size() != data.size()) {
    throw Error(ErrorKind::LengthMismatch, "g model was estimated on a different dataset");
  }
}

}  // namespace

QLearner glm_learner(QCovariates covariates) {
  if (covariates == QCovariates::Saturated) return saturated_learner;
  return [covariates](const QProblem& q) { return glm_fit_predict(q, covariates); };
}

EstimateWithIC ipw_mean(const Dataset& data, const GModel& g, const RegimeSpec& regime, Outcome outcome) {
  check_g(data, g);
  const std::size_t n = data.size();
  const auto y = outcome_values(data, outcome);
  std::vector<double> weighted(n, 0.0);
  long double sum = 0.0L;
  std::size_t consistent = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_consistent(data[i], regime)) continue;
    ++consistent;
    weighted[i] = y[i] / (g.g1[i] * g.g2[i]);
    sum += weighted[i];
  }
  if (consistent == 0) {
    throw Error(ErrorKind::ZeroSupport, "no record is consistent with regime " + std::to_string(regime.id));
  }
  EstimateWithIC est;
  est.psi = static_cast<double>(sum / static_cast<long double>(n));
  est.ic.resize(n);
  for (std::size_t i = 0; i < n; ++i) est.ic[i] = weighted[i] - est.psi;
  return est;
}

RegimeMeanResult tmle_mean(const Dataset& data, const GModel& g, const RegimeMeanRequest& req) {
  check_g(data, g);
  const std::size_t n = data.size();
  const auto& d = req.regime;
  RegimeMeanResult res;
  res.regime_id = d.id;
  res.outcome = req.outcome;
  res.estimator = EstimatorKind::TMLE;

  const auto y = outcome_values(data, req.outcome);
  std::vector<double> h2(n, 0.0), h1(n, 0.0), fit2(n, 0.0), fit1(n, 0.0);
  std::size_t consistent = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (data[i].a1 == d.d1) {
      h1[i] = 1.0 / g.g1[i];
      fit1[i] = 1.0;
    }
    if (is_consistent(data[i], d)) {
      h2[i] = 1.0 / (g.g1[i] * g.g2[i]);
      fit2[i] = 1.0;
      ++consistent;
    }
  }
  if (consistent == 0) throw Error(ErrorKind::ZeroSupport, "no record is consistent with regime " + std::to_string(d.id));

  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  res.scale_min = *lo_it;
  res.scale_max = *hi_it;
  const double range = res.scale_max - res.scale_min;
  if (range == 0.0) {
    res.estimate.psi = res.scale_min;
    res.estimate.ic.assign(n, 0.0);
    return res;
  }
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = (y[i] - res.scale_min) / range;

  const QLearner learner = req.learner ? req.learner : glm_learner(req.q_covariates);

  std::vector<double> q2 = learner(QProblem{data, d, 2, ys, fit2});
  for (double& v : q2) v = clamp_prob(v);
  res.epsilon2 = fluctuate(ys, q2, h2, "stage 2");
  std::vector<double> q2s(n);
  for (std::size_t i = 0; i < n; ++i) q2s[i] = clamp_prob(expit(logit(q2[i]) + res.epsilon2));

  std::vector<double> q1 = learner(QProblem{data, d, 1, q2s, fit1});
  for (double& v : q1) v = clamp_prob(v);
  res.epsilon1 = fluctuate(q2s, q1, h1, "stage 1");
  std::vector<double> q1s(n);
  for (std::size_t i = 0; i < n; ++i) q1s[i] = clamp_prob(expit(logit(q1[i]) + res.epsilon1));

  long double total = 0.0L;
  for (double v : q1s) total += v;
  const double psi_s = static_cast<double>(total / static_cast<long double>(n));

  res.estimate.psi = res.scale_min + range * psi_s;
  res.estimate.ic.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ic_s = h2[i] * (ys[i] - q2s[i]) + h1[i] * (q2s[i] - q1s[i]) + (q1s[i] - psi_s);
    res.estimate.ic[i] = range * ic_s;
  }
  return res;
}

RegimeMeanResult regime_mean(const Dataset& data, const GModel& g, const RegimeMeanRequest& req) {
  if (req.estimator == EstimatorKind::TMLE) return tmle_mean(data, g, req);
  RegimeMeanResult res;
  res.regime_id = req.regime.id;
  res.outcome = req.outcome;
  res.estimator = EstimatorKind::IPW;
  res.estimate = ipw_mean(data, g, req.regime, req.outcome);
  return res;
}

}  // namespace smartcea
