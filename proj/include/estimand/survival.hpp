#pragma once

#include <functional>
#include <span>
#include <vector>

#include "estimand/integrate.hpp"
#include "estimand/model.hpp"

namespace estimand {

/// Weibull proportional hazards model sharing one shape across treatments:
///
///   h_k(t | x) = nu t^(nu-1) exp(eta_k(x)),  S_k(t | x) = exp(-t^nu exp(eta_k(x))),
///
/// where eta_k is the linear predictor of `base` read on the log-hazard scale.
class WeibullPHModel {
 public:
  WeibullPHModel(double shape, OutcomeModel base);

  double shape() const noexcept { return shape_; }
  const OutcomeModel& base() const noexcept { return base_; }

  WeibullPHModel with_shape(double shape) const { return {shape, base_}; }
  WeibullPHModel with_intercept(double mu) const { return {shape_, base_.with_intercept(mu)}; }

 private:
  double shape_;
  OutcomeModel base_;
};

/// Strictly increasing, positive, finite evaluation times (at least two).
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> times);

  static TimeGrid log_spaced(double lo, double hi, std::size_t points);
  static TimeGrid linear(double lo, double hi, std::size_t points);
  /// 200 log-spaced points on [0.01, 3].
  static TimeGrid default_grid() { return log_spaced(0.01, 3.0, 200); }

  std::span<const double> times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  double operator[](std::size_t i) const noexcept { return times_[i]; }

 private:
  std::vector<double> times_;
};

double conditional_survival(const WeibullPHModel& model, const TreatmentId& k, std::span<const double> x, double t);
double conditional_hazard(const WeibullPHModel& model, const TreatmentId& k, std::span<const double> x, double t);

/// Population-average survival, E_P[S_k(t | x)], using the population intercept.
double marginal_survival(const WeibullPHModel& model, const Population& pop, const TreatmentId& k, double t,
                         const IntegrationScheme& scheme);

/// Survival-weighted average hazard E_P[S h] / E_P[S]. Singular at t = 0
/// when the shape is below one.
double marginal_hazard(const WeibullPHModel& model, const Population& pop, const TreatmentId& k, double t,
                       const IntegrationScheme& scheme);

/// Marginal survival of treatment k at every grid time.
std::vector<double> marginal_survival_curve(const WeibullPHModel& model, const Population& pop,
                                            const TreatmentId& k, const TimeGrid& grid,
                                            const IntegrationScheme& scheme);

/// Delta_ab(t) = hbar_b(t) / hbar_a(t) at every grid time.
std::vector<double> marginal_hazard_ratio_curve(const WeibullPHModel& model, const Population& pop,
                                                const TreatmentId& a, const TreatmentId& b, const TimeGrid& grid,
                                                const IntegrationScheme& scheme);

/// Time-invariant population-average conditional log hazard ratio.
double conditional_log_hr(const WeibullPHModel& model, const Population& pop, const TreatmentId& a,
                          const TreatmentId& b, const IntegrationScheme& scheme);

/// A maximal time interval on which two curves are ordered opposite to their
/// order at the first grid point. `end` is the last grid time when the
/// reversal persists to the end of the grid (`closed` false).
struct CrossingInterval {
  double start = 0.0;
  double end = 0.0;
  bool closed = false;
};

inline constexpr double kCrossingTimeTolerance = 1e-6;

/// Crossings of two curves sampled on the grid, located on their piecewise
/// linear interpolants by bisection to kCrossingTimeTolerance.
std::vector<CrossingInterval> detect_hr_crossings(std::span<const double> first, std::span<const double> second,
                                                  const TimeGrid& grid);

/// Crossings of a continuous difference function sign-sampled on the grid and
/// refined by bisection on the function itself.
std::vector<CrossingInterval> detect_hr_crossings(const std::function<double(double)>& difference,
                                                  const TimeGrid& grid);

/// Model-backed crossing search between the curves Delta_{ref,b}(t) and
/// Delta_{ref,c}(t), equivalently between hbar_b and hbar_c.
std::vector<CrossingInterval> hazard_ratio_crossings(const WeibullPHModel& model, const Population& pop,
                                                     const TreatmentId& b, const TreatmentId& c,
                                                     const TimeGrid& grid, const IntegrationScheme& scheme);

struct HazardRatioCurve {
  TreatmentId a;
  TreatmentId b;
  std::vector<double> marginal;     // Delta_ab(t)
  double conditional_log_hr = 0.0;  // d_ab
};

struct CurveCrossing {
  TreatmentId b;
  TreatmentId c;
  std::vector<CrossingInterval> intervals;
};

/// Curves for every treatment against the reference, plus crossings between
/// each pair of those curves.
struct SurvivalGrid {
  TimeGrid grid;
  IntegrationScheme scheme;
  TreatmentId reference;
  std::vector<TreatmentId> treatments;
  std::vector<std::vector<double>> marginal_survival;  // parallel to treatments
  std::vector<std::vector<double>> marginal_hazard;
  std::vector<HazardRatioCurve> hazard_ratios;          // reference vs each other treatment
  std::vector<CurveCrossing> crossings;
};

SurvivalGrid survival_grid(const WeibullPHModel& model, const Population& pop,
                           const std::vector<TreatmentId>& treatments, const TimeGrid& grid,
                           const IntegrationScheme& scheme);

}  // namespace estimand
