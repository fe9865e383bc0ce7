#include "plume/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "plume/error.hpp"

namespace plume::metrics {

namespace {

void check_shapes(const RolloutResult& r) {
  if (r.predicted.rows() != r.truth.rows() || r.predicted.cols() != r.truth.cols()) {
    throw ShapeMismatch("metrics: predicted and true fields differ in shape");
  }
  if (r.truth.rows() < 1) throw InvalidArgument("metrics: need at least one step");
}

}  // namespace

RolloutResult RolloutResult::head(std::size_t n) const {
  if (n < 1 || n > n_steps()) throw InvalidArgument("RolloutResult::head: step count out of range");
  RolloutResult out;
  out.predicted = predicted.topRows(static_cast<Eigen::Index>(n));
  out.truth = truth.topRows(static_cast<Eigen::Index>(n));
  out.variable = variable;
  return out;
}

double plume_saturation_error(const RolloutResult& r) {
  check_shapes(r);
  if (r.variable != graph::Variable::saturation) throw InvalidArgument("plume_saturation_error: variable is not s_g");
  double sum = 0.0;
  double count = 0.0;
  for (Eigen::Index k = 0; k < r.truth.size(); ++k) {
    const double s = r.truth.data()[k];
    const double p = r.predicted.data()[k];
    if (s > kPlumeThreshold || std::abs(p) > kPlumeThreshold) {
      sum += std::abs(s - p);
      count += 1.0;
    }
  }
  return count > 0.0 ? sum / count : 0.0;
}

double pressure_relative_error(const RolloutResult& r, double p_init) {
  check_shapes(r);
  if (r.variable != graph::Variable::pressure) throw InvalidArgument("pressure_relative_error: variable is not p_g");
  if (!(p_init > 0.0)) throw InvalidArgument("pressure_relative_error: p_init must be > 0");
  const double sum = (r.truth - r.predicted).cwiseAbs().sum();
  return sum / (static_cast<double>(r.truth.size()) * p_init);
}

Summary ensemble_summary(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("ensemble_summary: empty list");
  std::sort(values.begin(), values.end());
  auto q = [&](double f) {
    const double pos = f * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {values.front(), q(0.25), q(0.5), q(0.75), values.back()};
}

void write_metrics_csv(std::ostream& out, const std::vector<SampleMetric>& rows) {
  const auto prec = out.precision();
  out << std::setprecision(17) << "sample_id,variable,n_T,delta\n";
  for (const SampleMetric& m : rows) {
    out << m.sample_id << ',' << (m.variable == graph::Variable::saturation ? "s_g" : "p_g") << ',' << m.n_steps
        << ',' << m.delta << '\n';
  }
  out.precision(prec);
}

}  // namespace plume::metrics
