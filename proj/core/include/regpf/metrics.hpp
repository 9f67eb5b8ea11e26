#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "regpf/sv_model.hpp"

namespace regpf {

/// A point of the augmented state: log-volatility plus natural parameters.
struct AugmentedPoint {
  double x = 0.0;
  double alpha = 0.0;
  double phi = 0.0;
  double sigma2 = 0.0;
};

/// Cumulated RMSE_t = sqrt((1/t) sum_{u<=t} err_u^2) for each component, plus `total`,
/// which sums the squared errors of all four components before averaging.
struct ComponentRmse {
  std::vector<double> x;
  std::vector<double> alpha;
  std::vector<double> phi;
  std::vector<double> sigma2;
  std::vector<double> total;
};

/// Scalar cumulated RMSE trace. Throws DomainError on length mismatch.
std::vector<double> rmse_trace(std::span<const double> estimates, std::span<const double> truths);

ComponentRmse rmse_trace(std::span<const AugmentedPoint> estimates, std::span<const AugmentedPoint> truths);

/// Running form of the aggregated cumulated RMSE.
class CumulativeRmse {
 public:
  void add(const AugmentedPoint& estimate, const AugmentedPoint& truth);
  double value() const;
  double state_value() const;
  std::size_t count() const { return count_; }

 private:
  double total_sq_ = 0.0;
  double state_sq_ = 0.0;
  std::size_t count_ = 0;
};

/// Final outcome of one filter run, as listed in summary.csv.
struct RunSummary {
  std::string algo;
  std::size_t run = 0;
  SVParams estimate;
  double final_rmse = 0.0;
  /// Run aborted without usable estimates.
  bool degenerate = false;
};

struct ParamMse {
  double alpha = 0.0;
  double phi = 0.0;
  double sigma2 = 0.0;
  std::size_t runs_used = 0;
  std::size_t runs_excluded = 0;
};

/// (1/R) sum_r (estimate_r - truth)^2 per parameter over non-degenerate runs.
/// Throws DomainError when no run is usable.
ParamMse param_mse(std::span<const RunSummary> runs, const SVParams& truth);

/// Median over non-degenerate runs of the per-run squared error.
ParamMse param_median_squared_error(std::span<const RunSummary> runs, const SVParams& truth);

/// Marker for a missing trace value (padding after an aborted run).
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct Envelope {
  std::vector<double> mean;
  std::vector<double> min;
  std::vector<double> max;
  std::vector<std::size_t> count;
};

/// Pointwise mean/min/max across runs, skipping missing markers. Shorter traces are
/// treated as padded with missing markers up to the longest one.
Envelope aggregate_across_runs(std::span<const std::vector<double>> traces);

}  // namespace regpf
