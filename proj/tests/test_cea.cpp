#include <doctest.h>

#include <algorithm>
#include <random>

#include "smartcea/cea.hpp"
#include "smartcea/error.hpp"

using namespace smartcea;

TEST_CASE("cost ranking") {
  const std::vector<double> ic{0.1, -0.1};
  const auto rows = cost_ranking({{3, {5.0, ic}}, {1, {4.0, ic}}, {2, {5.0, ic}}});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].regime_id == 1);
  CHECK(rows[1].regime_id == 2);
  CHECK(rows[2].regime_id == 3);
  CHECK_THROWS_AS(cost_ranking({{1, {4.0, ic}}, {1, {5.0, ic}}}), Error);
}

TEST_CASE("frontier on a worked example") {
  // 3 and 5 are dominated by 2; 7 is in quadrant IV
  const std::vector<PlanePoint> pts{{2, 30, 2.5}, {3, 28, 2.9}, {4, 26, 1.8}, {5, 25, 3.0}, {6, 32, 3.2},
                                    {7, 5, -0.1}};
  const Frontier f = efficient_frontier(pts);
  CHECK(f.regime_ids == std::vector<int>{4, 2, 6});
  REQUIRE(f.slopes.size() == 3);
  CHECK(f.slopes[0] == doctest::Approx(1.8 / 26));
  CHECK(f.slopes[1] == doctest::Approx(0.7 / 4));
  CHECK(f.slopes[2] == doctest::Approx(0.7 / 2));
  CHECK(f.path.front() == std::pair<double, double>{0.0, 0.0});
}

TEST_CASE("frontier ties and collinear points") {
  const Frontier same = efficient_frontier({{5, 10, 1}, {3, 10, 1}});
  CHECK(same.regime_ids == std::vector<int>{3});
  const Frontier line = efficient_frontier({{1, 10, 1}, {2, 20, 2}, {3, 30, 3}});
  CHECK(line.regime_ids == std::vector<int>{3});
  CHECK_THROWS_AS(efficient_frontier({{1, -1, 1}, {2, 1, -1}}), Error);
}

TEST_CASE("slopes never decrease on random inputs") {
  std::mt19937 gen(4);
  std::uniform_int_distribution<int> coord(-3, 12);
  for (int t = 0; t < 500; ++t) {
    std::vector<PlanePoint> pts;
    const int n = 1 + t % 8;
    for (int k = 0; k < n; ++k) pts.push_back({k + 1, double(coord(gen)), double(coord(gen))});
    try {
      const Frontier f = efficient_frontier(pts);
      CHECK(std::is_sorted(f.slopes.begin(), f.slopes.end()));
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptyFrontier);
    }
  }
}

TEST_CASE("plane points and SVG") {
  const std::vector<double> ic(10, 0.0);
  IcerResult a;
  a.regime_id = 2;
  a.rd_cost = {2.0, ic};
  a.rd_eff = {20.0, ic};
  a.icer = 0.1;
  a.cv_cost = 0.5;
  a.cv_eff = 0.1;
  IcerResult b = a;
  b.regime_id = 5;
  b.rd_eff = {3.0, ic};
  b.cv_eff = 2.5;
  const auto pts = plane_points({a, b});
  CHECK(pts[0].reliable);
  CHECK(!pts[1].reliable);
  const Frontier f = efficient_frontier(pts);
  const std::string svg = plane_svg(pts, &f);
  CHECK(svg.find("Incremental effectiveness (percentage points)") != std::string::npos);
  CHECK(svg.find("Incremental cost ($)") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("fill=\"white\" stroke=\"black\"") != std::string::npos);
  CHECK(svg == plane_svg(pts, &f));
}
