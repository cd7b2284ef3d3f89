#include "smartcea/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <string>

#include "smartcea/random.hpp"

namespace smartcea {

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::InvalidInput, "quantile of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<std::size_t> resample_rows(std::size_t n, std::uint64_t seed, std::size_t b) {
  RandomStream s(seed, StreamTag::Bootstrap, b);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = static_cast<std::size_t>(s.below(n));
  return rows;
}

BootstrapResult bootstrap_ci(const Dataset& data, const Statistic& statistic, std::size_t B, std::uint64_t seed,
                             double alpha, Execution exec) {
  if (B < 100) throw Error(ErrorKind::InvalidInput, "bootstrap needs B >= 100 replicates");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidInput, "alpha must lie in (0, 1)");

  std::vector<double> value(B);
  std::vector<std::optional<ErrorKind>> failed(B);
  std::vector<std::exception_ptr> fatal(B);
  auto run = [&](std::size_t b) {
    try {
      const auto rows = resample_rows(data.size(), seed, b);
      value[b] = statistic(data.subset(rows));
    } catch (const Error& e) {
      failed[b] = e.kind();
    } catch (...) {
      fatal[b] = std::current_exception();
    }
  };
  if (exec == Execution::Serial) {
    for (std::size_t b = 0; b < B; ++b) run(b);
  } else {
    const auto count = static_cast<std::ptrdiff_t>(B);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t b = 0; b < count; ++b) run(static_cast<std::size_t>(b));
  }
  for (const auto& f : fatal)
    if (f) std::rethrow_exception(f);

  BootstrapResult res;
  res.requested = B;
  for (std::size_t b = 0; b < B; ++b) {
    if (failed[b]) {
      res.failures.push_back({b, *failed[b]});
    } else {
      res.replicates.push_back(value[b]);
    }
  }
  if (10 * res.failures.size() > B) {
    throw Error(ErrorKind::TooManyDegenerate, std::to_string(res.failures.size()) + " of " + std::to_string(B) +
                                                  " bootstrap replicates failed (limit 10%)");
  }
  res.ci = {quantile(res.replicates, alpha / 2.0), quantile(res.replicates, 1.0 - alpha / 2.0)};
  return res;
}

Statistic icer_statistic(AnalysisSpec spec, int regime_id) {
  std::vector<RegimeSpec> keep;
  for (const auto& d : spec.regimes)
    if (d.id == spec.soc_id || d.id == regime_id) keep.push_back(d);
  if (keep.size() != 2) {
    throw Error(ErrorKind::InvalidInput, "regime " + std::to_string(regime_id) + " must differ from SOC and be listed");
  }
  spec.regimes = std::move(keep);
  return [spec, regime_id](const Dataset& data) {
    const auto a = analyze(data, spec);
    const auto& row = a.row(regime_id);
    if (row.failure) throw Error(row.failure->kind, row.failure->message);
    return row.icer->icer;
  };
}

}  // namespace smartcea
