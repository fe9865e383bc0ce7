#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "plume/graph.hpp"
#include "plume/tensor.hpp"

namespace plume::metrics {

/// Predicted and true fields in physical units, one row per step.
struct RolloutResult {
  ad::Matrix predicted;  // [n_T, n_C]
  ad::Matrix truth;      // [n_T, n_C]
  graph::Variable variable = graph::Variable::saturation;

  std::size_t n_steps() const { return static_cast<std::size_t>(truth.rows()); }
  /// First n steps.
  RolloutResult head(std::size_t n) const;
};

inline constexpr double kPlumeThreshold = 0.01;

/// Mean |s - s^| over cells where truth or |prediction| exceeds the
/// threshold; 0 when no cell qualifies.
double plume_saturation_error(const RolloutResult& r);
/// Mean |p - p^| / p_init over all cells and steps.
double pressure_relative_error(const RolloutResult& r, double p_init);

struct Summary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Five-number summary; quartiles by linear interpolation between order
/// statistics at position q*(n-1).
Summary ensemble_summary(std::vector<double> values);

struct SampleMetric {
  std::size_t sample_id = 0;
  graph::Variable variable = graph::Variable::saturation;
  std::size_t n_steps = 0;
  double delta = 0.0;
};

/// CSV: sample_id,variable,n_T,delta
void write_metrics_csv(std::ostream& out, const std::vector<SampleMetric>& rows);

}  // namespace plume::metrics
