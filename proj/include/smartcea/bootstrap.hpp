#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "smartcea/analysis.hpp"
#include "smartcea/core.hpp"
#include "smartcea/error.hpp"
#include "smartcea/execution.hpp"
#include "smartcea/inference.hpp"

namespace smartcea {

// Statistic re-computed on each resample. Throwing an Error marks the
// replicate as failed (it is excluded and counted); other exceptions abort.
using Statistic = std::function<double(const Dataset&)>;

struct BootstrapFailure {
  std::size_t replicate;
  ErrorKind kind;
};

struct BootstrapResult {
  Interval ci{};
  std::vector<double> replicates;  // successful replicate values, in replicate order
  std::vector<BootstrapFailure> failures;
  std::size_t requested = 0;
};

// Type-7 (linear interpolation) sample quantile.
double quantile(std::span<const double> values, double p);

// Row indices of bootstrap resample b: n draws with replacement from the
// stream (seed, Bootstrap, b).
std::vector<std::size_t> resample_rows(std::size_t n, std::uint64_t seed, std::size_t b);

// Percentile interval [q(alpha/2), q(1 - alpha/2)] over B >= 100 resamples.
// Throws TooManyDegenerate if more than 10% of replicates fail.
BootstrapResult bootstrap_ci(const Dataset& data, const Statistic& statistic, std::size_t B, std::uint64_t seed,
                             double alpha = 0.05, Execution exec = Execution::Parallel);

// ICER of `regime_id` against the spec's SOC regime, re-running the full
// pipeline (g model, both regime means, delta method).
Statistic icer_statistic(AnalysisSpec spec, int regime_id);

}  // namespace smartcea
