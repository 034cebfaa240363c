#pragma once

// Derived figures over per-worker suffix times.

#include <span>
#include <stdexcept>

namespace xpar {

/// A metric whose inputs leave it undefined (empty or all-zero timings, no baseline).
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// sum(t) / max(t), in [1, p]. Throws MetricError for empty, negative or all-zero input.
double load_balance(std::span<const double> t);

/// sum(t) / t11, where t11 is the single-worker suffix time. Throws MetricError when t11 <= 0.
double increase_of_work(std::span<const double> t, double t11);

/// Median; mean of the middle pair for even sizes. Throws MetricError when empty.
double median(std::span<const double> values);

/// t_o / t_p. Throws MetricError when t_p <= 0.
double speedup(double t_o, double t_p);

}  // namespace xpar
