#include "smartcea/analysis.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace smartcea {

const RegimeAnalysis& Analysis::row(int regime_id) const {
  for (const auto& r : rows)
    if (r.regime.id == regime_id) return r;
  throw Error(ErrorKind::InvalidInput, "regime " + std::to_string(regime_id) + " is not part of the analysis");
}

Analysis analyze(const Dataset& data, const AnalysisSpec& spec) {
  std::set<int> ids;
  for (const auto& d : spec.regimes) {
    validate_regime(d, data.supports());
    if (!ids.insert(d.id).second) throw Error(ErrorKind::DuplicateRegime, "regime id " + std::to_string(d.id) + " repeated");
  }
  if (!ids.contains(spec.soc_id)) {
    throw Error(ErrorKind::InvalidInput, "SOC regime " + std::to_string(spec.soc_id) + " is not in the regime list");
  }

  Analysis a;
  a.soc_id = spec.soc_id;
  a.g = estimate_g(data, spec.g_kind, spec.g_covariates);
  a.rows.reserve(spec.regimes.size());
  for (const auto& d : spec.regimes) {
    RegimeAnalysis row;
    row.regime = d;
    try {
      RegimeMeanRequest req{d, Outcome::Effectiveness, spec.estimator, spec.q_covariates, {}};
      row.ey = regime_mean(data, a.g, req);
      req.outcome = Outcome::Cost;
      row.ec = regime_mean(data, a.g, req);
    } catch (const Error& e) {
      row.ey.reset();
      row.ec.reset();
      row.failure = Failure{e.kind(), e.what()};
    }
    a.rows.push_back(std::move(row));
  }

  const auto& soc = a.row(spec.soc_id);
  for (auto& row : a.rows) {
    if (row.regime.id == spec.soc_id || row.failure) continue;
    if (soc.failure) {
      row.failure = Failure{soc.failure->kind, "SOC regime: " + soc.failure->message};
      continue;
    }
    row.rd_cost = risk_difference(row.ec->estimate, soc.ec->estimate, 1.0);
    row.rd_eff = risk_difference(row.ey->estimate, soc.ey->estimate, 100.0);
    try {
      row.icer = icer(*row.rd_cost, *row.rd_eff, spec.cv_threshold, spec.alpha);
      row.icer->regime_id = row.regime.id;
    } catch (const Error& e) {
      row.failure = Failure{e.kind(), e.what()};
    }
  }
  return a;
}

}  // namespace smartcea
