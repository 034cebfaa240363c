#include "xpar/metrics.hpp"

#include <algorithm>
#include <vector>

namespace xpar {

namespace {

double checked_sum(std::span<const double> t) {
  double sum = 0;
  for (const double x : t) {
    if (!(x >= 0)) throw MetricError("timings must be non-negative");
    sum += x;
  }
  return sum;
}

}  // namespace

double load_balance(std::span<const double> t) {
  if (t.empty()) throw MetricError("load balance of no timings");
  checked_sum(t);
  const double max = *std::max_element(t.begin(), t.end());
  if (max <= 0) throw MetricError("load balance undefined for all-zero timings");
  // Summing the ratios keeps equal timings at exactly p.
  double lb = 0;
  for (double x : t) lb += x / max;
  return lb;
}

double increase_of_work(std::span<const double> t, double t11) {
  if (!(t11 > 0)) throw MetricError("increase of work needs a positive single-worker baseline");
  return checked_sum(t) / t11;
}

double median(std::span<const double> values) {
  if (values.empty()) throw MetricError("median of no values");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

double speedup(double t_o, double t_p) {
  if (!(t_p > 0)) throw MetricError("speedup needs a positive parallel time");
  return t_o / t_p;
}

}  // namespace xpar
