#include "estimand/survival.hpp"

#include <algorithm>
#include <limits>
#include <cmath>

#include "estimand/binary.hpp"
#include "estimand/error.hpp"
#include "estimand/parallel.hpp"

namespace estimand {

namespace {

/// Linear predictors of one arm at every node, with the population intercept.
std::vector<double> node_etas(const WeibullPHModel& model, const Population& pop, std::size_t arm,
                              const NodeSet& nodes) {
  std::vector<double> eta(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    eta[i] = model.base().eta_with_intercept(arm, nodes.point(i), pop.intercept);
  return eta;
}

struct MarginalPoint {
  double survival;
  double rate;  // E[S e^eta] / E[S]; the hazard is nu t^(nu-1) times this
};

/// Survival-weighted average of exp(eta) at time t. Weights are rescaled by
/// the largest log-survival so the ratio survives when every S underflows.
MarginalPoint marginal_point(const NodeSet& nodes, std::span<const double> eta, double shape, double t) {
  const std::size_t n = nodes.size();
  const double tnu = std::pow(t, shape);
  std::vector<double> log_s(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    log_s[i] = -tnu * std::exp(eta[i]);
    if (nodes.weights()[i] > 0.0) top = std::max(top, log_s[i]);
  }
  std::vector<double> den(n), num(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = nodes.weights()[i] * std::exp(log_s[i] - top);
    den[i] = w;
    num[i] = w * std::exp(eta[i]);
  }
  const double d = pairwise_sum(den);
  const double r = pairwise_sum(num) / d;
  if (!std::isfinite(r) || !(d > 0.0)) throw NumericalError("marginal hazard is not finite at t = " + std::to_string(t));
  return {std::exp(top) * d, r};
}

double hazard_scale(double shape, double t) {
  if (t == 0.0) {
    if (shape < 1.0) throw NumericalError("hazard is singular at t = 0 for shape < 1");
    return shape == 1.0 ? 1.0 : 0.0;
  }
  return shape * std::pow(t, shape - 1.0);
}

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("time must be finite and non-negative", "time");
}

}  // namespace

WeibullPHModel::WeibullPHModel(double shape, OutcomeModel base) : shape_(shape), base_(std::move(base)) {
  if (!(shape_ > 0.0) || !std::isfinite(shape_)) throw ValidationError("Weibull shape must be positive", "model.shape");
}

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2) throw ValidationError("time grid needs at least two points", "survival.grid");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || !(times_[i] > 0.0))
      throw ValidationError("grid times must be finite and positive", "survival.grid");
    if (i > 0 && !(times_[i] > times_[i - 1]))
      throw ValidationError("grid times must be strictly increasing", "survival.grid");
  }
}

TimeGrid TimeGrid::log_spaced(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) throw ValidationError("log grid needs 0 < lo < hi", "survival.grid");
  std::vector<double> t(points);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i)
    t[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  t.front() = lo;
  t.back() = hi;
  return TimeGrid(std::move(t));
}

TimeGrid TimeGrid::linear(double lo, double hi, std::size_t points) {
  if (points < 2 || !(hi > lo)) throw ValidationError("linear grid needs lo < hi", "survival.grid");
  std::vector<double> t(points);
  for (std::size_t i = 0; i < points; ++i)
    t[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return TimeGrid(std::move(t));
}

double conditional_survival(const WeibullPHModel& model, const TreatmentId& k, std::span<const double> x, double t) {
  require_time(t);
  const double eta = linear_predictor(model.base(), k, x);
  if (t == 0.0) return 1.0;
  return std::exp(-std::pow(t, model.shape()) * std::exp(eta));
}

double conditional_hazard(const WeibullPHModel& model, const TreatmentId& k, std::span<const double> x, double t) {
  require_time(t);
  const double eta = linear_predictor(model.base(), k, x);
  return hazard_scale(model.shape(), t) * std::exp(eta);
}

double marginal_survival(const WeibullPHModel& model, const Population& pop, const TreatmentId& k, double t,
                         const IntegrationScheme& scheme) {
  require_time(t);
  const std::size_t arm = model.base().index_of(k);
  require_compatible(model.base(), pop);
  if (t == 0.0) return 1.0;
  const double tnu = std::pow(t, model.shape());
  return expect(
      pop.covariates,
      [&](std::span<const double> x) {
        return std::exp(-tnu * std::exp(model.base().eta_with_intercept(arm, x, pop.intercept)));
      },
      scheme);
}

double marginal_hazard(const WeibullPHModel& model, const Population& pop, const TreatmentId& k, double t,
                       const IntegrationScheme& scheme) {
  require_time(t);
  const std::size_t arm = model.base().index_of(k);
  require_compatible(model.base(), pop);
  const double scale = hazard_scale(model.shape(), t);
  const NodeSet nodes(pop.covariates, scheme);
  const auto eta = node_etas(model, pop, arm, nodes);
  return scale * marginal_point(nodes, eta, model.shape(), t).rate;
}

std::vector<double> marginal_survival_curve(const WeibullPHModel& model, const Population& pop,
                                            const TreatmentId& k, const TimeGrid& grid,
                                            const IntegrationScheme& scheme) {
  const std::size_t arm = model.base().index_of(k);
  require_compatible(model.base(), pop);
  const NodeSet nodes(pop.covariates, scheme);
  const auto eta = node_etas(model, pop, arm, nodes);
  std::vector<double> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) out[j] = marginal_point(nodes, eta, model.shape(), grid[j]).survival;
  }, 8);
  return out;
}

std::vector<double> marginal_hazard_ratio_curve(const WeibullPHModel& model, const Population& pop,
                                                const TreatmentId& a, const TreatmentId& b, const TimeGrid& grid,
                                                const IntegrationScheme& scheme) {
  const std::size_t ia = model.base().index_of(a), ib = model.base().index_of(b);
  require_compatible(model.base(), pop);
  const NodeSet nodes(pop.covariates, scheme);
  const auto eta_a = node_etas(model, pop, ia, nodes);
  const auto eta_b = node_etas(model, pop, ib, nodes);
  std::vector<double> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      // The common factor nu t^(nu-1) cancels between numerator and denominator.
      out[j] = marginal_point(nodes, eta_b, model.shape(), grid[j]).rate /
               marginal_point(nodes, eta_a, model.shape(), grid[j]).rate;
    }
  }, 8);
  return out;
}

double conditional_log_hr(const WeibullPHModel& model, const Population& pop, const TreatmentId& a,
                          const TreatmentId& b, const IntegrationScheme& scheme) {
  return population_conditional_effect(model.base(), pop, a, b, scheme);
}

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

template <class Difference>
double bisect_boundary(const Difference& diff, double lo, double hi, int lo_sign) {
  while (hi - lo > kCrossingTimeTolerance) {
    const double mid = 0.5 * (lo + hi);
    if (sign_of(diff(mid)) == lo_sign) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Shared scan: `signs` sampled on the grid, `diff` evaluable anywhere.
template <class Difference>
std::vector<CrossingInterval> scan(const std::vector<int>& signs, const TimeGrid& grid, const Difference& diff) {
  std::vector<CrossingInterval> out;
  int initial = 0;
  for (int s : signs)
    if (s != 0) {
      initial = s;
      break;
    }
  if (initial == 0) return out;
  auto reversed = [&](int s) { return s == -initial; };
  bool inside = false;
  CrossingInterval current;
  for (std::size_t j = 1; j < signs.size(); ++j) {
    const bool was = reversed(signs[j - 1]), now = reversed(signs[j]);
    if (!was && now) {
      current = {};
      current.start = bisect_boundary(diff, grid[j - 1], grid[j], signs[j - 1]);
      inside = true;
    } else if (was && !now) {
      current.end = bisect_boundary(diff, grid[j - 1], grid[j], signs[j - 1]);
      current.closed = true;
      out.push_back(current);
      inside = false;
    }
  }
  if (inside) {
    current.end = grid[grid.size() - 1];
    current.closed = false;
    out.push_back(current);
  }
  return out;
}

}  // namespace

std::vector<CrossingInterval> detect_hr_crossings(std::span<const double> first, std::span<const double> second,
                                                  const TimeGrid& grid) {
  if (first.size() != second.size() || first.size() != grid.size())
    throw ValidationError("curves and grid must have equal length");
  std::vector<int> signs(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) signs[j] = sign_of(first[j] - second[j]);
  auto interpolated = [&](double t) {
    const auto times = grid.times();
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t j = static_cast<std::size_t>(it - times.begin());
    j = std::clamp<std::size_t>(j, 1, times.size() - 1);
    const double w = (t - times[j - 1]) / (times[j] - times[j - 1]);
    const double d0 = first[j - 1] - second[j - 1], d1 = first[j] - second[j];
    return d0 + w * (d1 - d0);
  };
  return scan(signs, grid, interpolated);
}

std::vector<CrossingInterval> detect_hr_crossings(const std::function<double(double)>& difference,
                                                  const TimeGrid& grid) {
  std::vector<int> signs(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) signs[j] = sign_of(difference(grid[j]));
  return scan(signs, grid, difference);
}

std::vector<CrossingInterval> hazard_ratio_crossings(const WeibullPHModel& model, const Population& pop,
                                                     const TreatmentId& b, const TreatmentId& c,
                                                     const TimeGrid& grid, const IntegrationScheme& scheme) {
  const std::size_t ib = model.base().index_of(b), ic = model.base().index_of(c);
  require_compatible(model.base(), pop);
  const NodeSet nodes(pop.covariates, scheme);
  const auto eta_b = node_etas(model, pop, ib, nodes);
  const auto eta_c = node_etas(model, pop, ic, nodes);
  const auto eta_ref = node_etas(model, pop, 0, nodes);
  // Delta_{ref,b}(t) - Delta_{ref,c}(t); scaling by hbar_ref keeps the sign.
  auto diff = [&](double t) {
    const double ref = marginal_point(nodes, eta_ref, model.shape(), t).rate;
    return marginal_point(nodes, eta_b, model.shape(), t).rate / ref -
           marginal_point(nodes, eta_c, model.shape(), t).rate / ref;
  };
  return detect_hr_crossings(std::function<double(double)>(diff), grid);
}

SurvivalGrid survival_grid(const WeibullPHModel& model, const Population& pop,
                           const std::vector<TreatmentId>& treatments, const TimeGrid& grid,
                           const IntegrationScheme& scheme) {
  require_compatible(model.base(), pop);
  SurvivalGrid out{grid, scheme, model.base().reference(), treatments, {}, {}, {}, {}};
  const NodeSet nodes(pop.covariates, scheme);
  for (const auto& k : treatments) {
    const auto eta = node_etas(model, pop, model.base().index_of(k), nodes);
    std::vector<double> s(grid.size()), h(grid.size());
    parallel_for(grid.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t j = begin; j < end; ++j) {
        const auto mp = marginal_point(nodes, eta, model.shape(), grid[j]);
        s[j] = mp.survival;
        h[j] = hazard_scale(model.shape(), grid[j]) * mp.rate;
      }
    }, 8);
    out.marginal_survival.push_back(std::move(s));
    out.marginal_hazard.push_back(std::move(h));
  }
  const TreatmentId& ref = model.base().reference();
  std::vector<TreatmentId> others;
  for (const auto& k : treatments)
    if (k != ref) others.push_back(k);
  for (const auto& k : others)
    out.hazard_ratios.push_back({ref, k, marginal_hazard_ratio_curve(model, pop, ref, k, grid, scheme),
                                 conditional_log_hr(model, pop, ref, k, scheme)});
  for (std::size_t i = 0; i < others.size(); ++i)
    for (std::size_t j = i + 1; j < others.size(); ++j)
      out.crossings.push_back(
          {others[i], others[j], hazard_ratio_crossings(model, pop, others[i], others[j], grid, scheme)});
  return out;
}

}  // namespace estimand
