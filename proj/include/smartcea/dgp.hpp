#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "smartcea/core.hpp"
#include "smartcea/error.hpp"
#include "smartcea/execution.hpp"
#include "smartcea/random.hpp"

namespace smartcea {

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Which digit of a two-level mixed-radix code occupies each position
// (position 0 varies fastest) and which digits are counted in reverse.
struct DigitLayout {
  std::array<int, 3> order{0, 1, 2};
  unsigned flips = 0;

  int encode(std::array<int, 3> digits) const;
  bool operator==(const DigitLayout&) const = default;
};

// Ties the Appendix-B constant vectors and regime numbering to concrete codes.
//  * cell_layout encodes an observed cell (a1, within-branch a2 level, branch)
//    as the 0-based index of the (y, c) constant it uses;
//  * regime_layout encodes (d1, lapse level, no-lapse level) as the 0-based
//    Appendix-B regime number.
struct RegimeIndexMap {
  DigitLayout cell_layout;
  DigitLayout regime_layout;

  // Constant index for an observed (a1, a2) pair on Appendix-B supports.
  int constant_for(TreatmentCode a1, TreatmentCode a2) const;
  // Appendix-B regimes 1..8 with ids set to their Appendix-B numbers; SOC is id 1.
  std::array<RegimeSpec, 8> numbered_regimes() const;

  // The indexing selected by calibrate_regime_indexing at 2e6 draws.
  static RegimeIndexMap calibrated() { return {}; }

  bool operator==(const RegimeIndexMap&) const = default;
};

struct DgpConfig {
  std::size_t n = 1809;
  std::uint64_t seed = 1;
  std::array<double, 8> y_constants{1 - .28, 1 - .26, 1 - .28, 1 - .30, 1 - .29, 1 - .30, 1 - .21, 1 - .20};
  std::array<double, 8> c_constants{2, .03, .035, .044, .06, .05, .058, .025};
  double cost_scale = 5.0;
  RegimeIndexMap index_map = RegimeIndexMap::calibrated();

  void validate() const;
};

// Structural equations of the Appendix-B SMART.
struct AppendixBModel {
  const DgpConfig& config;

  static double lapse_probability(double x1, int a1) { return expit(x1 + a1); }
  static double s2_mean(double x1, int a1) { return x1 + 2.0 * a1; }
  double outcome_probability(int k, double x1, double s2) const {
    return expit(logit(config.y_constants[k]) + s2 + 0.5 * x1 * x1 + std::log(std::abs(x1) + 0.01));
  }
  // Exponential rate; |.| closes after the full sum.
  double cost_rate(int k, double x1, double s2, int l2, int a1) const {
    return config.c_constants[k] + std::abs(s2 + x1 + l2 - 3.0 * a1);
  }
  double expected_cost(int k, double x1, double s2, int l2, int a1) const {
    return config.cost_scale / cost_rate(k, x1, s2, l2, a1);
  }

  TrajectoryRecord draw_record(std::size_t index) const;

  // Exogenous inputs shared by all counterfactual worlds (common random numbers).
  struct Exogenous {
    double x1;
    double u_lapse;
    double z_s2;
  };
  Exogenous draw_exogenous(RandomStream& s) const;
  struct Means {
    double ey;
    double ec;
  };
  Means counterfactual_means(const Exogenous& u, const RegimeSpec& d) const;
};

Dataset simulate_smart(const DgpConfig& config, Execution exec = Execution::Parallel);

struct TruthRow {
  int regime_id = 0;
  double ey = 0.0;
  double ec = 0.0;
  double rd_cost = 0.0;
  double rd_eff = 0.0;  // 100 x risk difference
  double icer = std::numeric_limits<double>::quiet_NaN();
  std::size_t mc_draws = 0;
  double mc_se_ey = 0.0;
  double mc_se_ec = 0.0;
};

struct TruthTable {
  int soc_id = 1;
  std::vector<TruthRow> rows;

  const TruthRow& row(int regime_id) const;
};

// Model exposes draw_exogenous(RandomStream&) and counterfactual_means(u, regime),
// the latter returning E[Y_d | exogenous path] and E[C_d | exogenous path].
template <class Model>
concept CounterfactualModel = requires(const Model& m, RandomStream& s, const RegimeSpec& d) {
  typename Model::Exogenous;
  { m.draw_exogenous(s) } -> std::same_as<typename Model::Exogenous>;
  { m.counterfactual_means(m.draw_exogenous(s), d).ey } -> std::convertible_to<double>;
  { m.counterfactual_means(m.draw_exogenous(s), d).ec } -> std::convertible_to<double>;
};

namespace detail {

struct MomentSums {
  long double sy = 0, syy = 0, sc = 0, scc = 0;
  void add(double y, double c) {
    sy += y;
    syy += static_cast<long double>(y) * y;
    sc += c;
    scc += static_cast<long double>(c) * c;
  }
  void merge(const MomentSums& o) {
    sy += o.sy;
    syy += o.syy;
    sc += o.sc;
    scc += o.scc;
  }
};

TruthTable finish_truth(std::span<const RegimeSpec> regimes, int soc_id, std::size_t draws,
                        const std::vector<MomentSums>& sums);

inline constexpr std::size_t kTruthBlock = 8192;

}  // namespace detail

// Monte-Carlo counterfactual means for every regime from one shared set of
// exogenous draws. The parallel path sums fixed-size blocks and merges them in
// block order, so its result does not depend on the thread count.
template <CounterfactualModel Model>
TruthTable monte_carlo_truth(const Model& model, std::span<const RegimeSpec> regimes, int soc_id,
                             std::size_t draws, std::uint64_t seed, Execution exec = Execution::Parallel) {
  if (draws < 2) throw Error(ErrorKind::InvalidInput, "mc_draws must be at least 2");
  const std::size_t R = regimes.size();
  std::vector<detail::MomentSums> total(R);
  const std::size_t blocks = (draws + detail::kTruthBlock - 1) / detail::kTruthBlock;
  std::vector<detail::MomentSums> partial(blocks * R);
  const auto nblocks = static_cast<std::ptrdiff_t>(blocks);
  // Serial runs the same blocks in order, so both paths agree bit for bit.
#pragma omp parallel for schedule(dynamic, 4) if (exec == Execution::Parallel)
  for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * detail::kTruthBlock;
    const std::size_t end = std::min(draws, begin + detail::kTruthBlock);
    auto* acc = &partial[static_cast<std::size_t>(b) * R];
    for (std::size_t j = begin; j < end; ++j) {
      RandomStream s(seed, StreamTag::Truth, j);
      const auto u = model.draw_exogenous(s);
      for (std::size_t r = 0; r < R; ++r) {
        const auto m = model.counterfactual_means(u, regimes[r]);
        acc[r].add(m.ey, m.ec);
      }
    }
  }
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t r = 0; r < R; ++r) total[r].merge(partial[b * R + r]);
  return detail::finish_truth(regimes, soc_id, draws, total);
}

// Appendix-B truth for the given regimes (ids are carried through).
TruthTable true_values(const DgpConfig& config, std::span<const RegimeSpec> regimes, int soc_id,
                       std::size_t mc_draws, std::uint64_t seed, Execution exec = Execution::Parallel);

// Published truth for Appendix-B regimes 1..8.
struct PublishedTruth {
  double ey, ec, rd_cost, rd_eff, icer;
};
extern const std::array<PublishedTruth, 8> kPublishedTruth;

struct CalibrationResult {
  RegimeIndexMap map;
  TruthTable truth;                  // oracle under `map`, ids = Appendix-B numbers
  std::array<double, 8> ey_residual{};  // oracle - published
  std::array<double, 8> ec_residual{};
  double max_abs_ey_residual = 0.0;
  double max_abs_ec_residual = 0.0;
  std::array<bool, 8> ey_within{};  // |residual| <= max(5 * mc_se, 0.005)
  std::array<bool, 8> ec_within{};
  std::size_t candidates_searched = 0;
};

// Residuals of the oracle under `map` against the published table, checked
// against max(5 * mc_se, 0.005).
CalibrationResult indexing_residuals(const DgpConfig& config, const RegimeIndexMap& map, std::size_t mc_draws,
                                     std::uint64_t seed, Execution exec = Execution::Parallel);

// Searches every digit layout for the cell constants and the regime numbering
// (48 x 48 candidates) for the one whose oracle means best match the published
// table (max of |dEY|/0.005 and |dEC|/0.05). No tolerance check.
CalibrationResult search_regime_indexing(const DgpConfig& config, std::size_t mc_draws, std::uint64_t seed,
                                         Execution exec = Execution::Parallel);

// search_regime_indexing, then throws NoConsistentIndexing if any residual of
// the winner exceeds max(5 * mc_se, 0.005).
CalibrationResult calibrate_regime_indexing(const DgpConfig& config, std::size_t mc_draws, std::uint64_t seed,
                                            Execution exec = Execution::Parallel);

}  // namespace smartcea
