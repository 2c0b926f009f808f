#pragma once

// Discrete return distributions on uniform value grids and the static
// Lipschitz risk functionals evaluated on them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rsdrl/error.hpp"

namespace rsdrl {

inline constexpr double kGridTolerance = 1e-9;
inline constexpr double kMassRepairTolerance = 1e-10;

/// Uniform grid origin + i * spacing, i = 0 .. count-1.
class ValueGrid {
public:
  ValueGrid() = default;
  ValueGrid(double origin, double spacing, std::size_t count)
      : origin_(origin), spacing_(spacing), count_(count) {
    if (!(spacing > 0.0) || !std::isfinite(spacing))
      throw ParameterError("ValueGrid: spacing must be positive and finite");
    if (count == 0) throw ParameterError("ValueGrid: count must be >= 1");
  }

  double origin() const noexcept { return origin_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return count_; }
  double value(std::size_t i) const noexcept { return origin_ + static_cast<double>(i) * spacing_; }
  double front() const noexcept { return origin_; }
  double back() const noexcept { return value(count_ - 1); }

  // Index of x when x is a grid point (within kGridTolerance * spacing).
  std::ptrdiff_t index_of(double x) const {
    const double t = (x - origin_) / spacing_;
    const double r = std::round(t);
    if (std::abs(t - r) > kGridTolerance * std::max(1.0, std::abs(t)) || r < 0.0 ||
        r > static_cast<double>(count_ - 1))
      return -1;
    return static_cast<std::ptrdiff_t>(r);
  }

  friend bool operator==(const ValueGrid& a, const ValueGrid& b) noexcept {
    return a.origin_ == b.origin_ && a.spacing_ == b.spacing_ && a.count_ == b.count_;
  }

private:
  double origin_ = 0.0;
  double spacing_ = 1.0;
  std::size_t count_ = 1;
};

/// Probability mass on a ValueGrid. Masses within kMassRepairTolerance of a
/// valid pmf are renormalized; anything further off is rejected.
class DiscreteDistribution {
public:
  DiscreteDistribution() : mass_{1.0} {}
  DiscreteDistribution(ValueGrid grid, std::vector<double> mass) : grid_(grid), mass_(std::move(mass)) {
    if (mass_.size() != grid_.size())
      throw ParameterError("DiscreteDistribution: mass length " + std::to_string(mass_.size()) +
                           " != grid size " + std::to_string(grid_.size()));
    double total = 0.0;
    for (double& m : mass_) {
      if (!std::isfinite(m) || m < -kMassRepairTolerance)
        throw ParameterError("DiscreteDistribution: negative or non-finite mass");
      if (m < 0.0) m = 0.0;
      total += m;
    }
    if (std::abs(total - 1.0) > kMassRepairTolerance)
      throw ParameterError("DiscreteDistribution: masses sum to " + std::to_string(total));
    if (total != 1.0)
      for (double& m : mass_) m /= total;
  }

  static DiscreteDistribution point_mass(ValueGrid grid, std::size_t index) {
    std::vector<double> mass(grid.size(), 0.0);
    mass.at(index) = 1.0;
    return {grid, std::move(mass)};
  }

  const ValueGrid& grid() const noexcept { return grid_; }
  std::span<const double> mass() const noexcept { return mass_; }
  double mass(std::size_t i) const { return mass_[i]; }
  std::size_t size() const noexcept { return mass_.size(); }

  double mean() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < mass_.size(); ++i) acc += mass_[i] * grid_.value(i);
    return acc;
  }

  // Same distribution with every value shifted by c.
  DiscreteDistribution shifted(double c) const {
    return {ValueGrid(grid_.origin() + c, grid_.spacing(), grid_.size()), mass_};
  }

private:
  ValueGrid grid_;
  std::vector<double> mass_;
};

inline std::vector<double> cdf(const DiscreteDistribution& d) {
  std::vector<double> out(d.size());
  double run = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    run += d.mass(i);
    out[i] = std::clamp(run, 0.0, 1.0);
  }
  out.back() = 1.0;
  return out;
}

/// Smallest grid (by spacing) on which every point of both inputs lies.
/// Spacing ratios are matched against rationals p/q with q <= 1000.
inline ValueGrid common_refinement(const ValueGrid& a, const ValueGrid& b) {
  const double ratio = a.spacing() / b.spacing();
  double spacing = 0.0;
  for (long q = 1; q <= 1000; ++q) {
    const double p = std::round(ratio * static_cast<double>(q));
    if (p >= 1.0 && std::abs(ratio * static_cast<double>(q) - p) <= kGridTolerance * p) {
      spacing = b.spacing() / static_cast<double>(q);
      break;
    }
  }
  if (spacing == 0.0) throw AlignmentError("grids have incommensurate spacings");
  const double shift = (a.origin() - b.origin()) / spacing;
  if (std::abs(shift - std::round(shift)) > kGridTolerance * std::max(1.0, std::abs(shift)))
    throw AlignmentError("grid origins are not aligned on a common refinement");
  const double lo = std::min(a.front(), b.front());
  const double hi = std::max(a.back(), b.back());
  const auto count = static_cast<std::size_t>(std::llround((hi - lo) / spacing)) + 1;
  return {lo, spacing, count};
}

/// Re-expresses d on a finer (or wider) grid containing all its points.
inline DiscreteDistribution embed(const DiscreteDistribution& d, const ValueGrid& target) {
  std::vector<double> mass(target.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.mass(i) == 0.0) continue;
    const auto j = target.index_of(d.grid().value(i));
    if (j < 0) throw AlignmentError("value " + std::to_string(d.grid().value(i)) + " not on target grid");
    mass[static_cast<std::size_t>(j)] += d.mass(i);
  }
  return {target, std::move(mass)};
}

/// sup_x |F_a(x) - F_b(x)| after aligning both onto their common refinement.
inline double cdf_sup_distance(const DiscreteDistribution& a, const DiscreteDistribution& b) {
  const ValueGrid grid = a.grid() == b.grid() ? a.grid() : common_refinement(a.grid(), b.grid());
  const auto fa = cdf(a.grid() == grid ? a : embed(a, grid));
  const auto fb = cdf(b.grid() == grid ? b : embed(b, grid));
  double sup = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) sup = std::max(sup, std::abs(fa[i] - fb[i]));
  return sup;
}

inline void check_tau(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ParameterError("CVaR level tau must lie in (0,1], got " + std::to_string(tau));
}

/// max_b { b - E[(b - Z)^+] / tau } with b ranging over the grid values.
/// The objective is concave piecewise-linear with kinks on the support, so
/// this is the exact CVaR.
inline double cvar(const DiscreteDistribution& d, double tau) {
  check_tau(tau);
  double best = -std::numeric_limits<double>::infinity();
  double below_mass = 0.0;
  double below_first_moment = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double b = d.grid().value(i);
    below_mass += d.mass(i);
    below_first_moment += d.mass(i) * b;
    const double shortfall = std::max(0.0, b * below_mass - below_first_moment);
    best = std::max(best, b - shortfall / tau);
  }
  return best;
}

/// Entropic risk (1/gamma) log E[exp(gamma Z)], evaluated with a max shift.
inline double erm(const DiscreteDistribution& d, double gamma) {
  if (gamma == 0.0 || !std::isfinite(gamma)) throw ParameterError("ERM gamma must be nonzero and finite");
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.mass(i) > 0.0) shift = std::max(shift, gamma * d.grid().value(i));
  double acc = 0.0; // E[exp(gamma z - shift)] - 1
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.mass(i) > 0.0) acc += d.mass(i) * std::expm1(gamma * d.grid().value(i) - shift);
  return (std::log1p(acc) + shift) / gamma;
}

enum class RiskKind { CVaR, ERM, Expectation };

struct RiskSpec {
  RiskKind kind = RiskKind::Expectation;
  double parameter = 0.0;     // tau for CVaR, gamma for ERM
  double horizon_width = 1.0; // width W of the support interval

  static RiskSpec make_cvar(double tau, double width) {
    check_tau(tau);
    return validated({RiskKind::CVaR, tau, width});
  }
  static RiskSpec make_erm(double gamma, double width) {
    if (gamma == 0.0) throw ParameterError("ERM gamma must be nonzero");
    return validated({RiskKind::ERM, gamma, width});
  }
  static RiskSpec make_expectation(double width) { return validated({RiskKind::Expectation, 0.0, width}); }

private:
  static RiskSpec validated(RiskSpec s) {
    if (!(s.horizon_width > 0.0)) throw ParameterError("RiskSpec: horizon width must be positive");
    return s;
  }
};

inline double evaluate(const RiskSpec& spec, const DiscreteDistribution& d) {
  switch (spec.kind) {
  case RiskKind::CVaR: return cvar(d, spec.parameter);
  case RiskKind::ERM: return erm(d, spec.parameter);
  case RiskKind::Expectation: return d.mean();
  }
  return d.mean();
}

/// Sup-norm Lipschitz modulus for supports of width W.
inline double lipschitz_constant(const RiskSpec& spec) {
  const double w = spec.horizon_width;
  switch (spec.kind) {
  case RiskKind::CVaR: return w / spec.parameter;
  case RiskKind::ERM: {
    const double g = std::abs(spec.parameter);
    return std::expm1(g * w) / g;
  }
  case RiskKind::Expectation: return w;
  }
  return w;
}

} // namespace rsdrl
