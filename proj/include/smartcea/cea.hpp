#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "smartcea/core.hpp"
#include "smartcea/inference.hpp"

namespace smartcea {

struct CostRankRow {
  int regime_id = 0;
  double psi = 0.0;
  double se = 0.0;
  Interval ci{};
};

// Expected cost per regime, least to most costly; ties keep ascending regime id.
std::vector<CostRankRow> cost_ranking(const std::vector<std::pair<int, EstimateWithIC>>& estimates,
                                      double alpha = 0.05);

// A regime on the cost-effectiveness plane relative to SOC.
struct PlanePoint {
  int regime_id = 0;
  double rd_eff = 0.0;   // x: percentage points
  double rd_cost = 0.0;  // y: currency
  double icer = std::numeric_limits<double>::quiet_NaN();
  bool reliable = true;
};

std::vector<PlanePoint> plane_points(const std::vector<IcerResult>& results,
                                     double cv_threshold = kDefaultCvThreshold);

struct Frontier {
  std::vector<int> regime_ids;                  // frontier members by increasing effect
  std::vector<std::pair<double, double>> path;  // (effect, cost), starting at the (0, 0) anchor
  std::vector<double> slopes;                   // incremental ICER of each segment
};

// Lower convex hull of the undominated first-quadrant points (rd_eff > 0,
// rd_cost >= 0) anchored at SOC = (0, 0). Strongly dominated points are dropped
// first; of identical points the lower regime id is kept; collinear interior
// points are not frontier members. Throws EmptyFrontier if no point qualifies.
Frontier efficient_frontier(const std::vector<PlanePoint>& points);

// Standalone SVG of the plane: numbered markers (hollow when unreliable) and
// the frontier polyline. Deterministic for fixed input.
std::string plane_svg(const std::vector<PlanePoint>& points, const Frontier* frontier);

}  // namespace smartcea
