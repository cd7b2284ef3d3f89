#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace smartcea {

// Treatment arms are small integer codes; string labels exist only at I/O
// boundaries (see adapt_r_labels() for one labelling table).
using TreatmentCode = int;

// One participant's observed two-stage path O = (X(1), A(1), L(2), S(2), A(2), Y, C).
struct TrajectoryRecord {
  std::string id;
  std::vector<double> x1;  // baseline covariates X(1); Appendix-B data has one column
  TreatmentCode a1 = 0;
  int l2 = 0;              // lapse indicator L(2)
  double s2 = 0.0;         // time-varying covariate S(2)
  TreatmentCode a2 = 0;
  int y = 0;               // effectiveness outcome
  double c = 0.0;          // cost, currency units

  bool operator==(const TrajectoryRecord&) const = default;
};

// Admissible treatment codes at each stage. The stage-2 set depends on the
// lapse branch.
struct Supports {
  std::vector<TreatmentCode> stage1;
  std::map<int, std::vector<TreatmentCode>> stage2_by_l2;

  bool admits_stage1(TreatmentCode a1) const;
  bool admits_stage2(int l2, TreatmentCode a2) const;
  const std::vector<TreatmentCode>& stage2(int l2) const;

  // {0,1} at stage 1; {1,2} after a lapse, {3,4} otherwise.
  static Supports appendix_b();

  bool operator==(const Supports&) const = default;
};

// Immutable after construction; validated against its supports.
class Dataset {
 public:
  Dataset(std::vector<TrajectoryRecord> records, Supports supports,
          std::vector<std::string> covariate_names);

  std::size_t size() const { return records_.size(); }
  std::size_t covariate_count() const { return covariate_names_.size(); }
  const TrajectoryRecord& operator[](std::size_t i) const { return records_[i]; }
  std::span<const TrajectoryRecord> records() const { return records_; }
  const Supports& supports() const { return supports_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }

  // Dataset made of the given rows (with repeats), e.g. a bootstrap resample.
  Dataset subset(std::span<const std::size_t> rows) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<TrajectoryRecord> records_;
  Supports supports_;
  std::vector<std::string> covariate_names_;
};

// Validates a single record; throws Error(InvalidInput) naming the violation.
void validate_record(const TrajectoryRecord& r, const Supports& supports, std::size_t covariates);

// An embedded regime: a constant stage-1 arm and a stage-2 rule on the
// tailoring variables (A(1), L(2)).
struct RegimeSpec {
  int id = 0;
  TreatmentCode d1 = 0;
  TreatmentCode d2_if_lapse = 0;
  TreatmentCode d2_if_no_lapse = 0;

  TreatmentCode d2(int l2) const { return l2 == 1 ? d2_if_lapse : d2_if_no_lapse; }
  bool operator==(const RegimeSpec&) const = default;
};

void validate_regime(const RegimeSpec& regime, const Supports& supports);

inline bool is_consistent(const TrajectoryRecord& r, const RegimeSpec& d) {
  return r.a1 == d.d1 && r.a2 == d.d2(r.l2);
}

using RegimeFilter = std::function<bool(const RegimeSpec&)>;

// Cartesian product d1 x d2_if_lapse x d2_if_no_lapse in lexicographic order
// (d1 slowest, then d2_if_lapse, then d2_if_no_lapse; each ascending). Regimes
// rejected by `keep` are dropped and ids 1..K assigned to the survivors.
std::vector<RegimeSpec> regime_grid(const Supports& supports, const RegimeFilter& keep = {});

// ADAPT-R coding: stage 1 {0 SOC, 1 SMS, 2 CCT}; after a lapse {1 SOC outreach,
// 2 SMS+CCT, 3 navigator}; no lapse {4 continue, 5 discontinue}.
Supports adapt_r_supports();
// The 15 embedded regimes (SOC stage 1 cannot be discontinued).
std::vector<RegimeSpec> adapt_r_regimes();

// Point estimate with its per-observation influence-curve values.
struct EstimateWithIC {
  double psi = 0.0;
  std::vector<double> ic;

  std::size_t n() const { return ic.size(); }
  // sqrt(var(ic) / n)
  double se() const;
};

// Sample variance with the 1/(n-1) divisor.
double empirical_variance(std::span<const double> v);
double empirical_covariance(std::span<const double> a, std::span<const double> b);
double mean(std::span<const double> v);

}  // namespace smartcea
