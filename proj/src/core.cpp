#include "smartcea/core.hpp"

#include <algorithm>
#include <cmath>
#include <omp.h>
#include <sstream>

#include "smartcea/error.hpp"
#include "smartcea/execution.hpp"

namespace smartcea {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SeparationDetected: return "SeparationDetected";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::ZeroSupport: return "ZeroSupport";
    case ErrorKind::FluctuationDiverged: return "FluctuationDiverged";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::TooManyDegenerate: return "TooManyDegenerate";
    case ErrorKind::NoConsistentIndexing: return "NoConsistentIndexing";
    case ErrorKind::EmptyFrontier: return "EmptyFrontier";
    case ErrorKind::DuplicateRegime: return "DuplicateRegime";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::MisalignedReps: return "MisalignedReps";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

namespace {
int g_thread_limit = 0;

bool contains(const std::vector<TreatmentCode>& v, TreatmentCode x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}
}  // namespace

void set_thread_limit(int n) {
  g_thread_limit = n > 0 ? n : 0;
  omp_set_num_threads(n > 0 ? n : omp_get_num_procs());
}

int thread_limit() { return g_thread_limit > 0 ? g_thread_limit : omp_get_max_threads(); }

bool Supports::admits_stage1(TreatmentCode a1) const { return contains(stage1, a1); }

bool Supports::admits_stage2(int l2, TreatmentCode a2) const {
  auto it = stage2_by_l2.find(l2);
  return it != stage2_by_l2.end() && contains(it->second, a2);
}

const std::vector<TreatmentCode>& Supports::stage2(int l2) const {
  auto it = stage2_by_l2.find(l2);
  if (it == stage2_by_l2.end()) {
    throw Error(ErrorKind::InvalidInput, "no stage-2 support declared for l2=" + std::to_string(l2));
  }
  return it->second;
}

Supports Supports::appendix_b() { return Supports{{0, 1}, {{1, {1, 2}}, {0, {3, 4}}}}; }

void validate_record(const TrajectoryRecord& r, const Supports& supports, std::size_t covariates) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::InvalidInput, "record '" + r.id + "': " + what);
  };
  if (r.x1.size() != covariates) fail("expected " + std::to_string(covariates) + " baseline covariates");
  for (double v : r.x1)
    if (!std::isfinite(v)) fail("non-finite baseline covariate");
  if (!std::isfinite(r.s2)) fail("non-finite s2");
  if (r.l2 != 0 && r.l2 != 1) fail("l2 must be 0 or 1");
  if (r.y != 0 && r.y != 1) fail("y must be 0 or 1");
  if (!std::isfinite(r.c) || r.c < 0.0) fail("cost must be finite and non-negative");
  if (!supports.admits_stage1(r.a1)) fail("a1=" + std::to_string(r.a1) + " outside stage-1 support");
  if (!supports.admits_stage2(r.l2, r.a2)) {
    fail("a2=" + std::to_string(r.a2) + " outside stage-2 support for l2=" + std::to_string(r.l2));
  }
}

Dataset::Dataset(std::vector<TrajectoryRecord> records, Supports supports,
                 std::vector<std::string> covariate_names)
    : records_(std::move(records)),
      supports_(std::move(supports)),
      covariate_names_(std::move(covariate_names)) {
  if (records_.empty()) throw Error(ErrorKind::InvalidInput, "dataset must contain at least one record");
  if (covariate_names_.empty()) throw Error(ErrorKind::InvalidInput, "at least one baseline covariate required");
  if (supports_.stage1.empty()) throw Error(ErrorKind::InvalidInput, "empty stage-1 support");
  for (const auto& r : records_) validate_record(r, supports_, covariate_names_.size());
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<TrajectoryRecord> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(records_.at(i));
  return Dataset(std::move(out), supports_, covariate_names_);
}

void validate_regime(const RegimeSpec& d, const Supports& supports) {
  std::ostringstream msg;
  msg << "regime " << d.id << ": ";
  if (!supports.admits_stage1(d.d1)) {
    msg << "d1=" << d.d1 << " outside stage-1 support";
  } else if (!supports.admits_stage2(1, d.d2_if_lapse)) {
    msg << "d2_if_lapse=" << d.d2_if_lapse << " outside stage-2 support for l2=1";
  } else if (!supports.admits_stage2(0, d.d2_if_no_lapse)) {
    msg << "d2_if_no_lapse=" << d.d2_if_no_lapse << " outside stage-2 support for l2=0";
  } else {
    return;
  }
  throw Error(ErrorKind::InvalidInput, msg.str());
}

std::vector<RegimeSpec> regime_grid(const Supports& supports, const RegimeFilter& keep) {
  auto sorted = [](std::vector<TreatmentCode> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto s1 = sorted(supports.stage1);
  const auto lapse = sorted(supports.stage2(1));
  const auto no_lapse = sorted(supports.stage2(0));
  std::vector<RegimeSpec> out;
  for (TreatmentCode d1 : s1)
    for (TreatmentCode dl : lapse)
      for (TreatmentCode dn : no_lapse) {
        RegimeSpec d{0, d1, dl, dn};
        if (keep && !keep(d)) continue;
        d.id = static_cast<int>(out.size()) + 1;
        out.push_back(d);
      }
  return out;
}

Supports adapt_r_supports() { return Supports{{0, 1, 2}, {{1, {1, 2, 3}}, {0, {4, 5}}}}; }

std::vector<RegimeSpec> adapt_r_regimes() {
  // SOC participants without a lapse stay on SOC, so "discontinue" duplicates
  // "continue" for them.
  return regime_grid(adapt_r_supports(),
                     [](const RegimeSpec& d) { return !(d.d1 == 0 && d.d2_if_no_lapse == 5); });
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  long double s = 0.0L;
  for (double x : v) s += x;
  return static_cast<double>(s / static_cast<long double>(v.size()));
}

double empirical_covariance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::LengthMismatch, "covariance of unequal-length vectors");
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  const double ma = mean(a), mb = mean(b);
  long double s = 0.0L;
  for (std::size_t i = 0; i < n; ++i) s += (static_cast<long double>(a[i]) - ma) * (b[i] - mb);
  return static_cast<double>(s / static_cast<long double>(n - 1));
}

double empirical_variance(std::span<const double> v) { return empirical_covariance(v, v); }

double EstimateWithIC::se() const {
  if (ic.empty()) return 0.0;
  return std::sqrt(empirical_variance(ic) / static_cast<double>(ic.size()));
}

}  // namespace smartcea
