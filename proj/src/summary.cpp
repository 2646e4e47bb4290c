#include "kgc/summary.hpp"

#include <cmath>

namespace kgc {

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return s;
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double f1_score(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double percent_half_up(std::size_t numerator, std::size_t denominator) {
  if (denominator == 0) return 0.0;
  // hundredths of a percent = round(numerator * 10000 / denominator), half up
  const unsigned long long num = static_cast<unsigned long long>(numerator) * 20000ULL + denominator;
  const unsigned long long hundredths = num / (2ULL * denominator);
  return static_cast<double>(hundredths) / 100.0;
}

}  // namespace kgc
