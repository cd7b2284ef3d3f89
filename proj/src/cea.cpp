#include "smartcea/cea.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>

#include "smartcea/error.hpp"

namespace smartcea {

std::vector<CostRankRow> cost_ranking(const std::vector<std::pair<int, EstimateWithIC>>& estimates, double alpha) {
  std::set<int> ids;
  std::vector<CostRankRow> rows;
  for (const auto& [id, est] : estimates) {
    if (!ids.insert(id).second) throw Error(ErrorKind::DuplicateRegime, "regime " + std::to_string(id) + " repeated");
    rows.push_back({id, est.psi, est.se(), wald_ci(est.psi, est.ic, alpha)});
  }
  std::sort(rows.begin(), rows.end(), [](const CostRankRow& a, const CostRankRow& b) {
    return a.psi != b.psi ? a.psi < b.psi : a.regime_id < b.regime_id;
  });
  return rows;
}

std::vector<PlanePoint> plane_points(const std::vector<IcerResult>& results, double cv_threshold) {
  std::vector<PlanePoint> out;
  out.reserve(results.size());
  for (const auto& r : results) {
    out.push_back({r.regime_id, r.rd_eff.psi, r.rd_cost.psi, r.icer,
                   r.cv_cost < cv_threshold && r.cv_eff < cv_threshold});
  }
  return out;
}

namespace {

// > 0 when o -> a -> b turns counter-clockwise.
double cross(std::pair<double, double> o, std::pair<double, double> a, std::pair<double, double> b) {
  return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
}

}  // namespace

Frontier efficient_frontier(const std::vector<PlanePoint>& points) {
  for (const auto& p : points) {
    if (!std::isfinite(p.rd_eff) || !std::isfinite(p.rd_cost)) {
      throw Error(ErrorKind::InvalidInput, "plane point " + std::to_string(p.regime_id) + " has non-finite coordinates");
    }
  }
  std::vector<PlanePoint> q;
  for (const auto& p : points)
    if (p.rd_eff > 0.0 && p.rd_cost >= 0.0) q.push_back(p);
  if (q.empty()) throw Error(ErrorKind::EmptyFrontier, "no point is more effective than SOC at non-negative cost");

  std::vector<PlanePoint> kept;
  for (const auto& p : q) {
    bool drop = false;
    for (const auto& o : q) {
      if (&o == &p) continue;
      const bool same = o.rd_eff == p.rd_eff && o.rd_cost == p.rd_cost;
      if (same ? o.regime_id < p.regime_id
               : (o.rd_eff >= p.rd_eff && o.rd_cost <= p.rd_cost)) {
        drop = true;
        break;
      }
    }
    if (!drop) kept.push_back(p);
  }
  std::sort(kept.begin(), kept.end(), [](const PlanePoint& a, const PlanePoint& b) {
    return a.rd_eff != b.rd_eff ? a.rd_eff < b.rd_eff : a.rd_cost < b.rd_cost;
  });

  std::vector<std::pair<double, double>> hull{{0.0, 0.0}};
  std::vector<int> ids{0};
  for (const auto& p : kept) {
    const std::pair<double, double> xy{p.rd_eff, p.rd_cost};
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), xy) <= 0.0) {
      hull.pop_back();
      ids.pop_back();
    }
    hull.push_back(xy);
    ids.push_back(p.regime_id);
  }
  Frontier f;
  f.path = hull;
  f.regime_ids.assign(ids.begin() + 1, ids.end());
  for (std::size_t k = 1; k < hull.size(); ++k) {
    f.slopes.push_back((hull[k].second - hull[k - 1].second) / (hull[k].first - hull[k - 1].first));
  }
  return f;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Round tick step (1, 2 or 5 times a power of ten) giving about 5 intervals.
double tick_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

std::string tick_label(double v, double step) {
  char buf[32];
  const int decimals = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step)));
  std::snprintf(buf, sizeof buf, "%.*f", decimals, std::abs(v) < step * 1e-9 ? 0.0 : v);
  return buf;
}

}  // namespace

std::string plane_svg(const std::vector<PlanePoint>& points, const Frontier* frontier) {
  const double W = 640, H = 480, left = 80, right = 30, top = 30, bottom = 70;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  for (const auto& p : points) {
    xmin = std::min(xmin, p.rd_eff);
    xmax = std::max(xmax, p.rd_eff);
    ymin = std::min(ymin, p.rd_cost);
    ymax = std::max(ymax, p.rd_cost);
  }
  auto pad = [](double& lo, double& hi) {
    const double span = hi - lo > 0 ? hi - lo : 1.0;
    lo -= 0.08 * span;
    hi += 0.08 * span;
  };
  pad(xmin, xmax);
  pad(ymin, ymax);
  const double pw = W - left - right, ph = H - top - bottom;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  const double xs = tick_step(xmax - xmin), ys = tick_step(ymax - ymin);
  for (double t = std::ceil(xmin / xs) * xs; t <= xmax; t += xs) {
    s << "<line x1=\"" << fmt(sx(t)) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(sx(t)) << "\" y2=\""
      << fmt(top + ph + 5) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << fmt(sx(t)) << "\" y=\"" << fmt(top + ph + 18) << "\" text-anchor=\"middle\">"
      << tick_label(t, xs) << "</text>\n";
  }
  for (double t = std::ceil(ymin / ys) * ys; t <= ymax; t += ys) {
    s << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(sy(t)) << "\" x2=\"" << fmt(left) << "\" y2=\""
      << fmt(sy(t)) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(sy(t) + 4) << "\" text-anchor=\"end\">"
      << tick_label(t, ys) << "</text>\n";
  }
  // Axes through SOC.
  s << "<line x1=\"" << fmt(sx(0)) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(sx(0)) << "\" y2=\"" << fmt(top + ph)
    << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  s << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(sy(0)) << "\" x2=\"" << fmt(left + pw) << "\" y2=\""
    << fmt(sy(0)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  s << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(H - 20)
    << "\" text-anchor=\"middle\">Incremental effectiveness (percentage points)</text>\n";
  s << "<text x=\"20\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
    << fmt(top + ph / 2) << ")\">Incremental cost ($)</text>\n";

  if (frontier && !frontier->path.empty()) {
    s << "<polyline fill=\"none\" stroke=\"blue\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < frontier->path.size(); ++k) {
      s << (k ? " " : "") << fmt(sx(frontier->path[k].first)) << ',' << fmt(sy(frontier->path[k].second));
    }
    s << "\"/>\n";
  }
  s << "<circle cx=\"" << fmt(sx(0)) << "\" cy=\"" << fmt(sy(0)) << "\" r=\"4\" fill=\"black\"/>\n";
  s << "<text x=\"" << fmt(sx(0) + 6) << "\" y=\"" << fmt(sy(0) + 14) << "\">SOC</text>\n";
  for (const auto& p : points) {
    s << "<circle cx=\"" << fmt(sx(p.rd_eff)) << "\" cy=\"" << fmt(sy(p.rd_cost)) << "\" r=\"4\" "
      << (p.reliable ? "fill=\"black\"" : "fill=\"white\" stroke=\"black\"") << "/>\n";
    s << "<text x=\"" << fmt(sx(p.rd_eff) + 6) << "\" y=\"" << fmt(sy(p.rd_cost) - 6) << "\">" << p.regime_id
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace smartcea
