#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "smartcea/dataset_io.hpp"
#include "smartcea/dgp.hpp"
#include "smartcea/error.hpp"

using namespace smartcea;

TEST_CASE("dataset csv round trip is exact") {
  DgpConfig cfg;
  cfg.n = 300;
  cfg.seed = 5;
  const Dataset data = simulate_smart(cfg);
  std::stringstream s;
  write_dataset_csv(s, data, {"# hello"});
  const Dataset back = read_dataset_csv(s, data.supports());
  CHECK(back == data);
}

TEST_CASE("dataset csv errors") {
  const Supports sup = Supports::appendix_b();
  auto parse = [&](const std::string& text) {
    std::istringstream in(text);
    return read_dataset_csv(in, sup);
  };
  CHECK_NOTHROW(parse("id,x1,a1,l2,s2,a2,y,c\n1,0.5,0,1,0.1,2,1,3.5\n"));
  CHECK_THROWS_AS(parse("id,x,a1,l2,s2,a2,y,c\n1,0.5,0,1,0.1,2,1,3.5\n"), Error);
  CHECK_THROWS_AS(parse("id,x1,a1,l2,s2,a2,y,c\n1,0.5,0,1,abc,2,1,3.5\n"), Error);
  CHECK_THROWS_AS(parse("id,x1,a1,l2,s2,a2,y,c\n1,0.5,0,1,0.1,3,1,3.5\n"), Error);
  CHECK_THROWS_AS(parse("id,x1,a1,l2,s2,a2,y,c\n1,0.5,0,1,0.1,2\n"), Error);
  const Dataset two = parse("id,x1_1,x1_2,a1,l2,s2,a2,y,c\n1,0.5,1,0,1,0.1,2,1,3.5\n");
  CHECK(two.covariate_count() == 2);
}

TEST_CASE("regime specs and supports round trip") {
  const Supports sup = Supports::appendix_b();
  CHECK(parse_supports(format_supports(sup)) == sup);
  CHECK(parse_supports("a1=0,1;l2=1:1,2;l2=0:3,4") == sup);
  CHECK_THROWS_AS(parse_supports("a1=0,1"), Error);
  const auto grid = regime_grid(sup);
  std::stringstream s;
  write_regime_specs(s, grid);
  CHECK(read_regime_specs(s, sup) == grid);
  std::istringstream bad("id,d1,d2_if_lapse,d2_if_no_lapse\n1,0,3,3\n");
  CHECK_THROWS_AS(read_regime_specs(bad, sup), Error);
}

TEST_CASE("number formatting") {
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(std::numeric_limits<double>::quiet_NaN()) == "NA");
  CHECK(format_real(-2.0) == "-2");
  const double x = 0.1 + 0.2;
  CHECK(std::stod(format_real(x)) == x);
  CHECK(split_csv_line("a,,b") == std::vector<std::string>{"a", "", "b"});
}
