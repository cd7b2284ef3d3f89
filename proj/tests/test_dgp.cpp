#include <doctest.h>

#include <cmath>

#include "smartcea/dgp.hpp"
#include "smartcea/error.hpp"

using namespace smartcea;

TEST_CASE("calibrated indexing") {
  const RegimeIndexMap m = RegimeIndexMap::calibrated();
  // constant k (1-based) = 2 (a2 - 1) + a1 + 1 on the within-branch level
  CHECK(m.constant_for(0, 1) == 0);
  CHECK(m.constant_for(1, 1) == 1);
  CHECK(m.constant_for(0, 2) == 2);
  CHECK(m.constant_for(1, 2) == 3);
  CHECK(m.constant_for(0, 3) == 4);
  CHECK(m.constant_for(1, 4) == 7);
  const auto r = m.numbered_regimes();
  CHECK(r[0] == RegimeSpec{1, 0, 1, 3});
  CHECK(r[1] == RegimeSpec{2, 1, 1, 3});
  CHECK(r[2] == RegimeSpec{3, 0, 2, 3});
  CHECK(r[4] == RegimeSpec{5, 0, 1, 4});
  CHECK(r[7] == RegimeSpec{8, 1, 2, 4});
}

TEST_CASE("simulation is deterministic and thread independent") {
  DgpConfig cfg;
  cfg.n = 5000;
  cfg.seed = 42;
  const Dataset a = simulate_smart(cfg, Execution::Parallel);
  const Dataset b = simulate_smart(cfg, Execution::Serial);
  CHECK(a == b);
  cfg.seed = 43;
  CHECK(!(simulate_smart(cfg) == a));
  double a1 = 0, l2 = 0;
  for (const auto& r : a.records()) {
    a1 += r.a1;
    l2 += r.l2;
    CHECK(r.c > 0.0);
    CHECK(a.supports().admits_stage2(r.l2, r.a2));
  }
  CHECK(a1 / a.size() == doctest::Approx(0.5).epsilon(0.06));
  CHECK(l2 / a.size() > 0.5);
}

TEST_CASE("config validation") {
  DgpConfig cfg;
  cfg.n = 0;
  CHECK_THROWS_AS(simulate_smart(cfg), Error);
  cfg = DgpConfig{};
  cfg.y_constants[0] = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = DgpConfig{};
  cfg.index_map.cell_layout.order = {0, 0, 2};
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("truth oracle: serial equals parallel, moderate draws near the long run") {
  DgpConfig cfg;
  const auto regimes = cfg.index_map.numbered_regimes();
  const TruthTable s = true_values(cfg, regimes, 1, 200000, 1, Execution::Serial);
  const TruthTable p = true_values(cfg, regimes, 1, 200000, 1, Execution::Parallel);
  for (int r = 0; r < 8; ++r) {
    CHECK(s.rows[r].ey == p.rows[r].ey);
    CHECK(s.rows[r].ec == p.rows[r].ec);
  }
  // 2e6-draw oracle values, seed 1
  const double ey[8] = {.60643, .86361, .60643, .85190, .64228, .87798, .64228, .86626};
  const double ec[8] = {3.97627, 7.09260, 6.31255, 6.60931, 4.00557, 7.31772, 6.34185, 6.83443};
  for (int r = 0; r < 8; ++r) {
    CHECK(std::abs(s.rows[r].ey - ey[r]) < 5 * s.rows[r].mc_se_ey);
    CHECK(std::abs(s.rows[r].ec - ec[r]) < 5 * s.rows[r].mc_se_ec);
  }
  // y_1 = y_3: regime 3 has no effect on Y against SOC
  CHECK(s.rows[2].rd_eff == 0.0);
  CHECK(std::isnan(s.rows[2].icer));
  CHECK(s.row(2).icer == doctest::Approx(s.row(2).rd_cost / s.row(2).rd_eff));
  CHECK_THROWS_AS(true_values(cfg, regimes, 1, 100, 1), Error);
}

TEST_CASE("indexing search recovers the calibrated map") {
  DgpConfig cfg;
  const auto res = search_regime_indexing(cfg, 200000, 1);
  CHECK(res.map == RegimeIndexMap::calibrated());
  CHECK(res.candidates_searched == 48u * 48u);
  CHECK(res.max_abs_ey_residual < 0.01);
  // at 2e5 draws 5 MC SE covers the published noise
  CHECK_NOTHROW(calibrate_regime_indexing(cfg, 200000, 1));
}
