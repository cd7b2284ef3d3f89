#include "smartcea/inference.hpp"

#include <cmath>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "smartcea/error.hpp"

namespace smartcea {

double normal_critical_value(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidInput, "alpha must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha / 2.0);
}

namespace {

double se_of(std::span<const double> ic) {
  return std::sqrt(empirical_variance(ic) / static_cast<double>(ic.size()));
}

}  // namespace

Interval wald_ci(double psi, std::span<const double> ic, double alpha) {
  for (double v : ic)
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "influence curve has non-finite entries");
  const double half = normal_critical_value(alpha) * se_of(ic);
  return {psi - half, psi + half};
}

EstimateWithIC risk_difference(const EstimateWithIC& d, const EstimateWithIC& d0, double scale) {
  if (d.n() != d0.n()) {
    throw Error(ErrorKind::LengthMismatch, "influence curves have lengths " + std::to_string(d.n()) + " and " +
                                               std::to_string(d0.n()));
  }
  EstimateWithIC out;
  out.psi = scale * (d.psi - d0.psi);
  out.ic.resize(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) out.ic[i] = scale * (d.ic[i] - d0.ic[i]);
  return out;
}

DeltaMethodIc delta_method_ic(const EstimateWithIC& rd_cost, const EstimateWithIC& rd_eff, double epsilon) {
  if (rd_cost.n() != rd_eff.n()) throw Error(ErrorKind::LengthMismatch, "cost and effect ICs differ in length");
  const double a = rd_cost.psi, b = rd_eff.psi;
  if (!(std::abs(b) >= epsilon)) {
    throw Error(ErrorKind::DegenerateDenominator, "effect risk difference " + std::to_string(b) + " is below " +
                                                      std::to_string(epsilon) + " in magnitude; ICER undefined");
  }
  DeltaMethodIc out{a / b, std::vector<double>(rd_cost.n())};
  const double ga = 1.0 / b, gb = -a / (b * b);
  for (std::size_t i = 0; i < rd_cost.n(); ++i) out.ic[i] = ga * rd_cost.ic[i] + gb * rd_eff.ic[i];
  return out;
}

IcerResult icer(const EstimateWithIC& rd_cost, const EstimateWithIC& rd_eff, double cv_threshold, double alpha,
                double epsilon) {
  auto dm = delta_method_ic(rd_cost, rd_eff, epsilon);
  IcerResult r;
  r.icer = dm.icer;
  r.rd_cost = rd_cost;
  r.rd_eff = rd_eff;
  r.ic_icer = std::move(dm.ic);
  r.se = se_of(r.ic_icer);
  const double z = normal_critical_value(alpha);
  r.ci = {r.icer - z * r.se, r.icer + z * r.se};
  r.cv_cost = rd_cost.se() / std::abs(rd_cost.psi);  // +inf when rd_cost = 0
  r.cv_eff = rd_eff.se() / std::abs(rd_eff.psi);
  r.reliable = r.cv_cost < cv_threshold && r.cv_eff < cv_threshold;
  return r;
}

VarianceDecomposition icer_variance_decomposition(const IcerResult& r) {
  VarianceDecomposition v;
  const double n = static_cast<double>(r.ic_icer.size());
  if (r.rd_cost.psi == 0.0) {
    v.decomposed = false;
    v.var_total = empirical_variance(r.ic_icer) / n;
    return v;
  }
  const double a = r.rd_cost.psi, b = r.rd_eff.psi;
  v.term_a = empirical_variance(r.rd_cost.ic) / (n * a * a);
  v.term_b = empirical_variance(r.rd_eff.ic) / (n * b * b);
  v.cov_term = 2.0 * empirical_covariance(r.rd_cost.ic, r.rd_eff.ic) / (n * a * b);
  v.var_total = r.icer * r.icer * (v.term_a + v.term_b - v.cov_term);
  return v;
}

ContrastResult contrast(const IcerResult& i, const IcerResult& j, double alpha) {
  if (i.ic_icer.size() != j.ic_icer.size()) throw Error(ErrorKind::LengthMismatch, "ICER influence curves differ in length");
  ContrastResult c;
  c.regime_i = i.regime_id;
  c.regime_j = j.regime_id;
  c.diff = i.icer - j.icer;
  c.ic.resize(i.ic_icer.size());
  for (std::size_t k = 0; k < c.ic.size(); ++k) c.ic[k] = i.ic_icer[k] - j.ic_icer[k];
  c.se = se_of(c.ic);
  const double z = normal_critical_value(alpha);
  c.ci = {c.diff - z * c.se, c.diff + z * c.se};
  return c;
}

}  // namespace smartcea
