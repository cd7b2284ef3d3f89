#include "smartcea/discrete_dgp.hpp"

#include <cmath>
#include <string>

#include "smartcea/dgp.hpp"
#include "smartcea/error.hpp"

namespace smartcea {

void DiscreteTable::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidInput, std::string("discrete table: bad ") + what);
  };
  prob(p_x1, "p_x1");
  prob(p_a1, "p_a1");
  prob(p_level, "p_level");
  for (const auto& row : p_lapse)
    for (double p : row) prob(p, "p_lapse");
  for (double p : p_s2) prob(p, "p_s2");
  for (double p : p_y) prob(p, "p_y");
  for (const auto& dist : p_cost) {
    for (double p : dist) prob(p, "p_cost");
    if (std::abs(dist[0] + dist[1] + dist[2] - 1.0) > 1e-12) {
      throw Error(ErrorKind::InvalidInput, "discrete table: cost distribution does not sum to 1");
    }
  }
}

DiscreteTable default_discrete_table() {
  DiscreteTable t;
  t.p_lapse = {{{0.30, 0.50}, {0.45, 0.65}}};
  for (int x1 = 0; x1 < 2; ++x1)
    for (int a1 = 0; a1 < 2; ++a1)
      for (int l2 = 0; l2 < 2; ++l2) t.p_s2[x1 + 2 * a1 + 4 * l2] = 0.2 + 0.3 * x1 + 0.2 * a1 + 0.15 * l2;
  for (int x1 = 0; x1 < 2; ++x1)
    for (int a1 = 0; a1 < 2; ++a1)
      for (int l2 = 0; l2 < 2; ++l2)
        for (int s2 = 0; s2 < 2; ++s2)
          for (int level = 0; level < 2; ++level) {
            const int c = DiscreteTable::cell(x1, a1, l2, s2, level);
            t.p_y[c] = expit(-0.5 + 0.8 * x1 + 0.5 * a1 - 0.4 * l2 + 0.6 * s2 + 0.3 * level - 0.2 * a1 * level);
            const double p2 = 0.10 + 0.15 * a1 + 0.10 * level + 0.05 * l2;
            const double p1 = 0.30 + 0.10 * x1 + 0.05 * s2;
            t.p_cost[c] = {1.0 - p1 - p2, p1, p2};
          }
  return t;
}

std::vector<DiscretePath> enumerate_paths(const DiscreteTable& t) {
  t.validate();
  std::vector<DiscretePath> out;
  out.reserve(384);
  for (int x1 = 0; x1 < 2; ++x1)
    for (int a1 = 0; a1 < 2; ++a1)
      for (int l2 = 0; l2 < 2; ++l2)
        for (int s2 = 0; s2 < 2; ++s2)
          for (int level = 0; level < 2; ++level)
            for (int y = 0; y < 2; ++y)
              for (int c = 0; c < 3; ++c) {
                const int cell = DiscreteTable::cell(x1, a1, l2, s2, level);
                const double px = x1 ? t.p_x1 : 1 - t.p_x1;
                const double pa1 = a1 ? t.p_a1 : 1 - t.p_a1;
                const double pl = l2 ? t.p_lapse[x1][a1] : 1 - t.p_lapse[x1][a1];
                const double ps = s2 ? t.p_s2[x1 + 2 * a1 + 4 * l2] : 1 - t.p_s2[x1 + 2 * a1 + 4 * l2];
                const double pa2 = level ? t.p_level : 1 - t.p_level;
                const double py = y ? t.p_y[cell] : 1 - t.p_y[cell];
                TrajectoryRecord r;
                r.id = std::to_string(out.size() + 1);
                r.x1 = {static_cast<double>(x1)};
                r.a1 = a1;
                r.l2 = l2;
                r.s2 = s2;
                r.a2 = DiscreteTable::code_of(l2, level);
                r.y = y;
                r.c = c;
                out.push_back({std::move(r), px * pa1 * pl * ps * pa2 * py * t.p_cost[cell][c]});
              }
  return out;
}

namespace {

TrajectoryRecord draw_discrete(const DiscreteTable& t, std::uint64_t seed, std::size_t i) {
  RandomStream s(seed, StreamTag::Discrete, i);
  TrajectoryRecord r;
  r.id = std::to_string(i + 1);
  const int x1 = s.bernoulli(t.p_x1) ? 1 : 0;
  r.x1 = {static_cast<double>(x1)};
  r.a1 = s.bernoulli(t.p_a1) ? 1 : 0;
  r.l2 = s.bernoulli(t.p_lapse[x1][r.a1]) ? 1 : 0;
  const int s2 = s.bernoulli(t.p_s2[x1 + 2 * r.a1 + 4 * r.l2]) ? 1 : 0;
  r.s2 = s2;
  const int level = s.bernoulli(t.p_level) ? 1 : 0;
  r.a2 = DiscreteTable::code_of(r.l2, level);
  const int cell = DiscreteTable::cell(x1, r.a1, r.l2, s2, level);
  r.y = s.bernoulli(t.p_y[cell]) ? 1 : 0;
  const double u = s.uniform();
  r.c = u < t.p_cost[cell][0] ? 0.0 : (u < t.p_cost[cell][0] + t.p_cost[cell][1] ? 1.0 : 2.0);
  return r;
}

}  // namespace

Dataset sample_discrete(const DiscreteTable& t, std::size_t n, std::uint64_t seed, Execution exec) {
  t.validate();
  if (n < 1) throw Error(ErrorKind::InvalidInput, "n must be at least 1");
  std::vector<TrajectoryRecord> records(n);
  if (exec == Execution::Serial) {
    for (std::size_t i = 0; i < n; ++i) records[i] = draw_discrete(t, seed, i);
  } else {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) records[i] = draw_discrete(t, seed, static_cast<std::size_t>(i));
  }
  return Dataset(std::move(records), Supports::appendix_b(), {"x1"});
}

RegimeMeans gcomp_discrete(const DiscreteTable& t, const RegimeSpec& d) {
  long double ey = 0.0L, ec = 0.0L;
  const int a1 = d.d1;
  for (int x1 = 0; x1 < 2; ++x1) {
    const double px = x1 ? t.p_x1 : 1 - t.p_x1;
    for (int l2 = 0; l2 < 2; ++l2) {
      const double pl = l2 ? t.p_lapse[x1][a1] : 1 - t.p_lapse[x1][a1];
      for (int s2 = 0; s2 < 2; ++s2) {
        const double p = t.p_s2[x1 + 2 * a1 + 4 * l2];
        const double ps = s2 ? p : 1 - p;
        const int cell = DiscreteTable::cell(x1, a1, l2, s2, DiscreteTable::level_of(l2, d.d2(l2)));
        const long double w = static_cast<long double>(px) * pl * ps;
        ey += w * t.p_y[cell];
        ec += w * t.expected_cost(cell);
      }
    }
  }
  return {static_cast<double>(ey), static_cast<double>(ec)};
}

DiscreteTable empirical_table(const Dataset& data) {
  DiscreteTable t;
  std::array<double, 2> n_x{};
  std::array<double, 4> n_xa{}, n_xa_lapse{};
  std::array<double, 8> n_s_den{}, n_s_num{};
  std::array<double, 32> n_cell{}, n_y{};
  std::array<std::array<double, 3>, 32> n_cost{};
  double n_a1 = 0, n_level = 0;
  for (const auto& r : data.records()) {
    const int x1 = r.x1.at(0) != 0.0 ? 1 : 0;
    const int s2 = r.s2 != 0.0 ? 1 : 0;
    const int level = DiscreteTable::level_of(r.l2, r.a2);
    n_x[x1] += 1;
    n_a1 += r.a1;
    n_level += level;
    n_xa[x1 + 2 * r.a1] += 1;
    n_xa_lapse[x1 + 2 * r.a1] += r.l2;
    n_s_den[x1 + 2 * r.a1 + 4 * r.l2] += 1;
    n_s_num[x1 + 2 * r.a1 + 4 * r.l2] += s2;
    const int cell = DiscreteTable::cell(x1, r.a1, r.l2, s2, level);
    n_cell[cell] += 1;
    n_y[cell] += r.y;
    n_cost[cell][static_cast<int>(r.c)] += 1;
  }
  auto ratio = [](double num, double den) { return den > 0 ? num / den : 0.0; };
  const double n = static_cast<double>(data.size());
  t.p_x1 = n_x[1] / n;
  t.p_a1 = n_a1 / n;
  t.p_level = n_level / n;
  for (int x1 = 0; x1 < 2; ++x1)
    for (int a1 = 0; a1 < 2; ++a1) t.p_lapse[x1][a1] = ratio(n_xa_lapse[x1 + 2 * a1], n_xa[x1 + 2 * a1]);
  for (int k = 0; k < 8; ++k) t.p_s2[k] = ratio(n_s_num[k], n_s_den[k]);
  for (int c = 0; c < 32; ++c) {
    t.p_y[c] = ratio(n_y[c], n_cell[c]);
    if (n_cell[c] > 0) {
      for (int v = 0; v < 3; ++v) t.p_cost[c][v] = n_cost[c][v] / n_cell[c];
    } else {
      t.p_cost[c] = {1.0, 0.0, 0.0};
    }
  }
  return t;
}

RegimeMeans DiscreteModel::counterfactual_means(const Exogenous& u, const RegimeSpec& d) const {
  const int x1 = u.u_x1 < table.p_x1 ? 1 : 0;
  const int l2 = u.u_lapse < table.p_lapse[x1][d.d1] ? 1 : 0;
  const int s2 = u.u_s2 < table.p_s2[x1 + 2 * d.d1 + 4 * l2] ? 1 : 0;
  const int cell = DiscreteTable::cell(x1, d.d1, l2, s2, DiscreteTable::level_of(l2, d.d2(l2)));
  return {table.p_y[cell], table.expected_cost(cell)};
}

}  // namespace smartcea
