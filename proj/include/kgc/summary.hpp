#pragma once

#include <cstddef>
#include <span>

namespace kgc {

struct Summary {
  double mean = 0.0;
  /// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
  double stddev = 0.0;
};

Summary summarize(std::span<const double> values);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval for a binomial proportion at the given z (1.96 ~ 95%).
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

/// F1 as the harmonic mean of precision and recall; 0 when both are 0.
double f1_score(double precision, double recall);

/// Percentage true/total rounded half-up to 2 decimals, computed on integers.
double percent_half_up(std::size_t numerator, std::size_t denominator);

}  // namespace kgc
