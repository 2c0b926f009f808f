#pragma once

#include <cmath>
#include <span>

namespace rsdrl {

struct SqrtFit {
  double coefficient = 0.0;
  double r_squared = 1.0;
};

/// Least-squares fit of cumulative[k-1] ~ c sqrt(k), k = 1..n.
/// R^2 = 1 - SS_res / SS_tot with SS_tot centered on the mean. A constant
/// series (SS_tot == 0) reports R^2 = 1 when the fit is exact, else 0.
inline SqrtFit sqrt_fit(std::span<const double> cumulative) {
  double xy = 0.0, xx = 0.0, mean = 0.0;
  const double n = static_cast<double>(cumulative.size());
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    const double x = std::sqrt(static_cast<double>(i + 1));
    xy += x * cumulative[i];
    xx += x * x;
    mean += cumulative[i];
  }
  if (cumulative.empty()) return {};
  mean /= n;
  SqrtFit fit;
  fit.coefficient = xy / xx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    const double pred = fit.coefficient * std::sqrt(static_cast<double>(i + 1));
    ss_res += (cumulative[i] - pred) * (cumulative[i] - pred);
    ss_tot += (cumulative[i] - mean) * (cumulative[i] - mean);
  }
  if (ss_tot == 0.0)
    fit.r_squared = ss_res == 0.0 ? 1.0 : 0.0;
  else
    fit.r_squared = 1.0 - ss_res / ss_tot;
  return fit;
}

} // namespace rsdrl
