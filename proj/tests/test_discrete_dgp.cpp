#include <doctest.h>

#include <cmath>

#include "smartcea/dgp.hpp"
#include "smartcea/discrete_dgp.hpp"

using namespace smartcea;

namespace {

// E[outcome_d] via the exact IPW identity over enumerated paths.
RegimeMeans ipw_exact(const std::vector<DiscretePath>& paths, const RegimeSpec& d) {
  RegimeMeans m{0, 0};
  for (const auto& p : paths) {
    if (!is_consistent(p.record, d)) continue;
    m.ey += p.probability / 0.25 * p.record.y;
    m.ec += p.probability / 0.25 * p.record.c;
  }
  return m;
}

}  // namespace

TEST_CASE("enumerated paths form a distribution") {
  const DiscreteTable t = default_discrete_table();
  const auto paths = enumerate_paths(t);
  CHECK(paths.size() == 192);
  double total = 0;
  for (const auto& p : paths) total += p.probability;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("g-computation equals the exact weighted path sum") {
  const DiscreteTable t = default_discrete_table();
  const auto paths = enumerate_paths(t);
  for (const auto& d : regime_grid(Supports::appendix_b())) {
    const RegimeMeans g = gcomp_discrete(t, d);
    const RegimeMeans w = ipw_exact(paths, d);
    CHECK(g.ey == doctest::Approx(w.ey).epsilon(1e-12));
    CHECK(g.ec == doctest::Approx(w.ec).epsilon(1e-12));
  }
}

TEST_CASE("Monte-Carlo truth agrees with g-computation") {
  const DiscreteTable t = default_discrete_table();
  const auto grid = regime_grid(Supports::appendix_b());
  const TruthTable mc = monte_carlo_truth(DiscreteModel{t}, grid, 1, 400000, 3);
  for (const auto& d : grid) {
    const RegimeMeans g = gcomp_discrete(t, d);
    CHECK(std::abs(mc.row(d.id).ey - g.ey) < 4 * mc.row(d.id).mc_se_ey + 1e-12);
    CHECK(std::abs(mc.row(d.id).ec - g.ec) < 4 * mc.row(d.id).mc_se_ec + 1e-12);
  }
}

TEST_CASE("empirical table of a large sample approaches the truth") {
  const DiscreteTable t = default_discrete_table();
  const Dataset data = sample_discrete(t, 200000, 9);
  CHECK(data == sample_discrete(t, 200000, 9, Execution::Serial));
  const DiscreteTable e = empirical_table(data);
  for (const auto& d : regime_grid(data.supports())) {
    CHECK(gcomp_discrete(e, d).ey == doctest::Approx(gcomp_discrete(t, d).ey).epsilon(0.03));
    CHECK(gcomp_discrete(e, d).ec == doctest::Approx(gcomp_discrete(t, d).ec).epsilon(0.03));
  }
}
