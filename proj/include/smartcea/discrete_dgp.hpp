#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "smartcea/core.hpp"
#include "smartcea/execution.hpp"
#include "smartcea/random.hpp"

namespace smartcea {

// Fully discrete two-stage SMART on the Appendix-B supports: binary X(1),
// binary S(2), binary Y and cost on {0,1,2}. All conditionals are explicit, so
// the outcome space (192 paths) can be enumerated with exact probabilities.
//
// Cells are indexed by cell(x1, a1, l2, s2, level) where level is the
// position of A(2) within its branch (a2 - 1 after a lapse, a2 - 3 otherwise).
struct DiscreteTable {
  double p_x1 = 0.4;                                   // P(X1 = 1)
  double p_a1 = 0.5;                                   // P(A1 = 1)
  double p_level = 0.5;                                // P(level = 1) within a branch
  std::array<std::array<double, 2>, 2> p_lapse{};     // [x1][a1] -> P(L2 = 1)
  std::array<double, 8> p_s2{};                        // [x1 + 2 a1 + 4 l2] -> P(S2 = 1)
  std::array<double, 32> p_y{};                        // [cell] -> P(Y = 1)
  std::array<std::array<double, 3>, 32> p_cost{};      // [cell] -> P(C = 0, 1, 2)

  static int cell(int x1, int a1, int l2, int s2, int level) { return x1 + 2 * a1 + 4 * l2 + 8 * s2 + 16 * level; }
  static int level_of(int l2, TreatmentCode a2) { return a2 - (l2 == 1 ? 1 : 3); }
  static TreatmentCode code_of(int l2, int level) { return (l2 == 1 ? 1 : 3) + level; }

  double expected_cost(int cell_index) const {
    return p_cost[cell_index][1] + 2.0 * p_cost[cell_index][2];
  }
  void validate() const;
};

DiscreteTable default_discrete_table();

struct DiscretePath {
  TrajectoryRecord record;
  double probability;
};

// Every (x1, a1, l2, s2, a2, y, c) path with its exact probability.
std::vector<DiscretePath> enumerate_paths(const DiscreteTable& table);

Dataset sample_discrete(const DiscreteTable& table, std::size_t n, std::uint64_t seed,
                        Execution exec = Execution::Parallel);

struct RegimeMeans {
  double ey;
  double ec;
};

// Exact G-computation: sum over (x1, l2, s2) of
// E[outcome | history, A = d] * P(x1) * P(l2, s2 | x1, A(1) = d1).
RegimeMeans gcomp_discrete(const DiscreteTable& table, const RegimeSpec& regime);

// Table of empirical conditionals of a dataset drawn from the discrete design;
// gcomp_discrete on it is the nonparametric plug-in estimator. Cells never
// observed keep probability 0.
DiscreteTable empirical_table(const Dataset& data);

// Counterfactual sampler for monte_carlo_truth.
struct DiscreteModel {
  const DiscreteTable& table;

  struct Exogenous {
    double u_x1, u_lapse, u_s2;
  };
  Exogenous draw_exogenous(RandomStream& s) const { return {s.uniform(), s.uniform(), s.uniform()}; }
  RegimeMeans counterfactual_means(const Exogenous& u, const RegimeSpec& d) const;
};

}  // namespace smartcea
