#include "estimand/decision.hpp"

#include <algorithm>
#include <cmath>

#include "estimand/error.hpp"
#include "estimand/parallel.hpp"

namespace estimand {

namespace {

int strict_sign(double v) { return (v > 0.0) - (v < 0.0); }

int tolerant_sign(double v) { return std::abs(v) < kTieTolerance ? 0 : strict_sign(v); }

/// Bisection for the zero of f on [lo, hi] given f(lo), f(hi) of opposite sign.
template <class F>
double bisect(const F& f, double lo, double hi, double f_lo, double tol) {
  const int s_lo = strict_sign(f_lo);
  for (int iter = 0; iter < 200 && hi - lo > tol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (strict_sign(fm) == s_lo) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> lerp_point(const std::vector<double>& from, const std::vector<double>& to, double s) {
  std::vector<double> p(from.size());
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = from[j] + s * (to[j] - from[j]);
  return p;
}

WitnessRegion make_witness(const OutcomeModel& model, std::size_t ia, std::size_t ib, const TreatmentId& a,
                           const TreatmentId& b, int axis, std::vector<double> from, std::vector<double> to,
                           bool on_support) {
  WitnessRegion w;
  w.a = a;
  w.b = b;
  w.axis = axis;
  w.effect_from = model.contrast(ia, ib, from);
  w.effect_to = model.contrast(ia, ib, to);
  auto along = [&](double s) { return model.contrast(ia, ib, lerp_point(from, to, s)); };
  const double s = w.effect_from == 0.0 ? 0.0 : bisect(along, 0.0, 1.0, w.effect_from, 1e-12);
  w.boundary = lerp_point(from, to, s);
  // Refine along the scanned axis to the absolute tolerance.
  if (axis >= 0) {
    const auto j = static_cast<std::size_t>(axis);
    auto on_axis = [&](double v) {
      auto p = w.boundary;
      p[j] = v;
      return model.contrast(ia, ib, p);
    };
    if (w.effect_from != 0.0) w.boundary[j] = bisect(on_axis, from[j], to[j], w.effect_from, kWitnessTolerance);
  }
  w.from = std::move(from);
  w.to = std::move(to);
  w.on_support = on_support;
  return w;
}

bool mean_on_support(const CovariateDistribution& dist, const std::vector<double>& mean, std::size_t skip) {
  for (std::size_t j = 0; j < mean.size(); ++j) {
    if (j == skip) continue;
    if (dist.is_empirical()) return false;
    if (std::holds_alternative<Uniform>(dist.marginals()[j])) continue;
    const auto pts = dist.support_points(j);
    if (std::find(pts.begin(), pts.end(), mean[j]) == pts.end()) return false;
  }
  return true;
}

}  // namespace

std::vector<WitnessRegion> find_witnesses(const OutcomeModel& model, const Population& pop, const TreatmentId& a,
                                          const TreatmentId& b) {
  require_compatible(model, pop);
  const std::size_t ia = model.index_of(a), ib = model.index_of(b);
  const auto& dist = pop.covariates;
  const std::size_t dim = dist.dimension();
  std::vector<WitnessRegion> out;
  if (dim == 0 || ia == ib) return out;

  const auto mean = dist.mean();
  bool found_on_support = false;
  for (std::size_t j = 0; j < dim; ++j) {
    std::vector<double> values;
    const bool continuous = !dist.is_empirical() && std::holds_alternative<Uniform>(dist.marginals()[j]);
    if (continuous) {
      const auto [lo, hi] = dist.bounds(j);
      for (std::size_t i = 0; i < kWitnessScanPoints; ++i)
        values.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kWitnessScanPoints - 1));
    } else {
      values = dist.support_points(j);
    }
    const bool on_support = mean_on_support(dist, mean, j);
    auto point = [&](double v) {
      auto p = mean;
      p[j] = v;
      return p;
    };
    for (std::size_t i = 1; i < values.size(); ++i) {
      const double e0 = model.contrast(ia, ib, point(values[i - 1]));
      const double e1 = model.contrast(ia, ib, point(values[i]));
      if (strict_sign(e0) * strict_sign(e1) < 0) {
        out.push_back(make_witness(model, ia, ib, a, b, static_cast<int>(j), point(values[i - 1]), point(values[i]),
                                   on_support));
        found_on_support = found_on_support || on_support;
        break;
      }
    }
  }
  if (found_on_support) return out;

  // Vertex search: gamma_ab is affine, so its extremes over a product support
  // sit at vertices, and over a sample at rows.
  std::vector<double> lo_pt(dim), hi_pt(dim);
  if (dist.is_empirical()) {
    double lo_v = 0.0, hi_v = 0.0;
    for (std::size_t r = 0; r < dist.rows().size(); ++r) {
      const double v = model.contrast(ia, ib, dist.rows()[r]);
      if (r == 0 || v < lo_v) {
        lo_v = v;
        lo_pt = dist.rows()[r];
      }
      if (r == 0 || v > hi_v) {
        hi_v = v;
        hi_pt = dist.rows()[r];
      }
    }
  } else {
    const auto& ca = model.arms()[ia].interactions;
    const auto& cb = model.arms()[ib].interactions;
    for (std::size_t j = 0; j < dim; ++j) {
      const auto [lo, hi] = dist.bounds(j);
      const bool rising = cb[j] - ca[j] > 0.0;
      lo_pt[j] = rising ? lo : hi;
      hi_pt[j] = rising ? hi : lo;
    }
  }
  if (strict_sign(model.contrast(ia, ib, lo_pt)) * strict_sign(model.contrast(ia, ib, hi_pt)) < 0)
    out.push_back(make_witness(model, ia, ib, a, b, -1, lo_pt, hi_pt, true));
  return out;
}

ConflictReport conflict_report(const OutcomeModel& model, const Population& pop,
                               const std::vector<TreatmentId>& treatments, Direction direction,
                               const IntegrationScheme& scheme) {
  const EstimandReport est = estimand_report(model, pop, treatments, direction, scheme);
  ConflictReport out;
  out.scheme = scheme;
  out.conditional_ranking = est.conditional_ranking;
  out.marginal_ranking = est.marginal_ranking;
  for (const auto& p : est.pairs) {
    PairSign s;
    s.a = p.a;
    s.b = p.b;
    s.conditional = p.conditional;
    s.marginal = p.marginal;
    s.conditional_sign = tolerant_sign(p.conditional);
    s.marginal_sign = tolerant_sign(p.marginal);
    s.conflict = s.conditional_sign * s.marginal_sign < 0;
    s.near_tie = s.conditional_sign == 0 || s.marginal_sign == 0;
    out.conflict = out.conflict || s.conflict;
    out.near_tie_warning = out.near_tie_warning || s.near_tie;
    if (s.conflict) {
      auto w = find_witnesses(model, pop, p.a, p.b);
      out.witnesses.insert(out.witnesses.end(), w.begin(), w.end());
    }
    out.pairs.push_back(std::move(s));
  }
  return out;
}

std::string_view to_string(SweepVariable v) noexcept { return v == SweepVariable::intercept ? "mu" : "nu"; }

std::vector<double> default_intercept_grid() {
  std::vector<double> g(101);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = -6.0 + 12.0 * static_cast<double>(i) / 100.0;
  return g;
}

namespace {

struct SweepPoint {
  std::vector<double> conditional;
  std::vector<double> marginal;
};

SweepPoint evaluate_sweep_point(const OutcomeModel& model, const Population& pop, double mu,
                                const std::vector<TreatmentId>& comparators, const IntegrationScheme& scheme) {
  Population p = pop;
  p.intercept = mu;
  SweepPoint out;
  const Link& g = model.link();
  const double ref_link = g.forward(average_probability(model, p, model.reference(), scheme));
  for (const auto& k : comparators) {
    out.conditional.push_back(population_conditional_effect(model, p, model.reference(), k, scheme));
    out.marginal.push_back(g.forward(average_probability(model, p, k, scheme)) - ref_link);
  }
  return out;
}

}  // namespace

SweepResult baseline_risk_sweep(const OutcomeModel& model, const Population& pop,
                                std::optional<std::vector<double>> grid, const std::vector<TreatmentId>& comparators,
                                const IntegrationScheme& scheme) {
  require_compatible(model, pop);
  for (const auto& k : comparators) (void)model.index_of(k);
  const bool extend = !grid.has_value();
  std::vector<double> values = grid ? *grid : default_intercept_grid();
  if (values.size() < 2) throw ValidationError("sweep grid needs at least two values", "sweep.grid");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw ValidationError("sweep values must be finite", "sweep.grid");
    if (i > 0 && !(values[i] > values[i - 1])) throw ValidationError("sweep values must increase", "sweep.grid");
  }

  auto evaluate_all = [&](const std::vector<double>& vals) {
    std::vector<SweepPoint> pts(vals.size());
    parallel_for(vals.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) pts[i] = evaluate_sweep_point(model, pop, vals[i], comparators, scheme);
    }, 1);
    return pts;
  };
  auto has_switch = [&](const std::vector<SweepPoint>& pts) {
    for (std::size_t u = 0; u < comparators.size(); ++u)
      for (std::size_t v = u + 1; v < comparators.size(); ++v) {
        const int first = strict_sign(pts.front().marginal[u] - pts.front().marginal[v]);
        const int last = strict_sign(pts.back().marginal[u] - pts.back().marginal[v]);
        if (first * last < 0) return true;
      }
    return false;
  };

  std::vector<SweepPoint> pts = evaluate_all(values);
  if (extend && comparators.size() >= 2) {
    const double step = values[1] - values[0];
    while (!has_switch(pts) && (values.front() > -20.0 || values.back() < 20.0)) {
      std::vector<double> lower, upper;
      for (double v = values.front() - step; v >= values.front() - 2.0 - 1e-9 && v >= -20.0 - 1e-9; v -= step)
        lower.insert(lower.begin(), v);
      for (double v = values.back() + step; v <= values.back() + 2.0 + 1e-9 && v <= 20.0 + 1e-9; v += step)
        upper.push_back(v);
      if (lower.empty() && upper.empty()) break;
      auto lo_pts = evaluate_all(lower), hi_pts = evaluate_all(upper);
      values.insert(values.begin(), lower.begin(), lower.end());
      values.insert(values.end(), upper.begin(), upper.end());
      pts.insert(pts.begin(), lo_pts.begin(), lo_pts.end());
      pts.insert(pts.end(), hi_pts.begin(), hi_pts.end());
    }
  }

  SweepResult out;
  out.variable = SweepVariable::intercept;
  out.grid = values;
  out.scheme = scheme;
  for (std::size_t c = 0; c < comparators.size(); ++c) {
    SweepSeries s{model.reference(), comparators[c], {}, {}};
    for (const auto& p : pts) {
      s.conditional.push_back(p.conditional[c]);
      s.marginal.push_back(p.marginal[c]);
    }
    out.series.push_back(std::move(s));
  }

  auto marginal_at = [&](double mu, std::size_t c) {
    return evaluate_sweep_point(model, pop, mu, {comparators[c]}, scheme).marginal[0];
  };
  for (std::size_t u = 0; u < comparators.size(); ++u)
    for (std::size_t v = u + 1; v < comparators.size(); ++v)
      for (std::size_t i = 1; i < values.size(); ++i) {
        const double d0 = pts[i - 1].marginal[u] - pts[i - 1].marginal[v];
        const double d1 = pts[i].marginal[u] - pts[i].marginal[v];
        if (strict_sign(d0) * strict_sign(d1) < 0) {
          auto f = [&](double mu) { return marginal_at(mu, u) - marginal_at(mu, v); };
          out.switches.push_back({comparators[u], comparators[v], bisect(f, values[i - 1], values[i], d0, 1e-8)});
        }
      }
  for (std::size_t c = 0; c < comparators.size(); ++c)
    for (std::size_t i = 1; i < values.size(); ++i) {
      const double e0 = std::abs(pts[i - 1].marginal[c]) - std::abs(pts[i - 1].conditional[c]);
      const double e1 = std::abs(pts[i].marginal[c]) - std::abs(pts[i].conditional[c]);
      if (strict_sign(e0) * strict_sign(e1) < 0) {
        const double d = pts[i].conditional[c];
        auto f = [&](double mu) { return std::abs(marginal_at(mu, c)) - std::abs(d); };
        out.null_crossings.push_back(
            {model.reference(), comparators[c], bisect(f, values[i - 1], values[i], e0, 1e-8), e1 > 0.0});
      }
    }
  return out;
}

double intercept_from_baseline_risk(const OutcomeModel& model, const Population& pop, const TreatmentId& k0,
                                    double target, const IntegrationScheme& scheme) {
  if (!(target > 0.0 && target < 1.0)) throw ValidationError("target baseline risk must lie in (0, 1)", "target");
  require_compatible(model, pop);
  const std::size_t k = model.index_of(k0);
  const Link& g = model.link();
  const double target_link = g.forward(target);

  // Starting guess: plug-in at the covariate mean.
  const auto mean = pop.covariates.mean();
  const double guess = target_link - (model.eta_with_intercept(k, mean, 0.0));

  // Out-of-domain probabilities (identity/log links) sit above or below the
  // target according to which side of the guess they came from.
  auto residual = [&](double mu) {
    Population p = pop;
    p.intercept = mu;
    try {
      return g.forward(average_probability(model, p, k0, scheme)) - target_link;
    } catch (const RangeError&) {
      return mu > guess ? 1.0 : -1.0;
    }
  };

  double lo = guess - 1.0, hi = guess + 1.0;
  double f_lo = residual(lo), f_hi = residual(hi);
  for (int i = 0; i < 60 && !(f_lo <= 0.0 && f_hi >= 0.0); ++i) {
    const double width = hi - lo;
    if (f_lo > 0.0) {
      lo -= width;
      f_lo = residual(lo);
    }
    if (f_hi < 0.0) {
      hi += width;
      f_hi = residual(hi);
    }
  }
  if (!(f_lo <= 0.0 && f_hi >= 0.0))
    throw NumericalError("could not bracket the intercept for baseline risk " + std::to_string(target));
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double fm = residual(mid);
    if (fm == 0.0) return mid;
    if (fm < 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

IndividualCurves individual_curves(const OutcomeModel& model, const Population& pop, std::size_t points) {
  require_compatible(model, pop);
  IndividualCurves out;
  out.treatments = model.treatments();
  auto x = pop.covariates.mean();
  if (x.empty()) {
    out.x = {0.0};
  } else {
    const auto [lo, hi] = pop.covariates.bounds(0);
    const bool continuous = !pop.covariates.is_empirical() && std::holds_alternative<Uniform>(pop.covariates.marginals()[0]);
    if (continuous) {
      for (std::size_t i = 0; i < points; ++i)
        out.x.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
    } else {
      out.x = pop.covariates.support_points(0);
    }
  }
  out.effect_vs_reference.assign(out.treatments.size(), {});
  out.probability.assign(out.treatments.size(), {});
  for (double v : out.x) {
    if (!x.empty()) x[0] = v;
    for (std::size_t k = 0; k < out.treatments.size(); ++k) {
      out.effect_vs_reference[k].push_back(model.contrast(0, k, x));
      out.probability[k].push_back(model.link().inverse(model.eta_with_intercept(k, x, pop.intercept)).value());
    }
  }
  return out;
}

SharedEmReport shared_em_scenario(const OutcomeModel& model, const Population& pop,
                                  const std::vector<TreatmentId>& shared, const IntegrationScheme& scheme) {
  require_compatible(model, pop);
  if (shared.size() < 2) throw ValidationError("shared set needs at least two treatments", "shared_em");
  const auto& first = model.arm(shared.front()).interactions;
  for (const auto& k : shared)
    if (model.arm(k).interactions != first)
      throw ValidationError("treatments declared shared ('" + shared.front() + "', '" + k +
                                "') have different interaction coefficients",
                            "shared_em");
  (void)scheme;

  SharedEmReport out;
  out.shared = shared;
  const auto ids = model.treatments();
  auto is_shared = [&](const TreatmentId& k) { return std::find(shared.begin(), shared.end(), k) != shared.end(); };
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      SharedPairInfo info;
      info.a = ids[i];
      info.b = ids[j];
      info.shared = is_shared(ids[i]) && is_shared(ids[j]);
      const bool equal = model.arms()[i].interactions == model.arms()[j].interactions;
      info.constant_contrast = equal;
      if (equal) info.contrast = model.arms()[j].effect - model.arms()[i].effect;
      info.crossing_capable = !equal;
      info.crosses_on_support = !find_witnesses(model, pop, ids[i], ids[j]).empty();
      out.pairs.push_back(info);
    }
  out.curves = individual_curves(model, pop);
  return out;
}

SurvivalSweep survival_parameter_sweep(const WeibullPHModel& model, const Population& pop, SweepVariable variable,
                                       const std::vector<double>& values, const TimeGrid& grid,
                                       const IntegrationScheme& scheme) {
  SurvivalSweep out{variable, grid, {}};
  const TreatmentId& ref = model.base().reference();
  for (double v : values) {
    WeibullPHModel m = variable == SweepVariable::shape ? model.with_shape(v) : model;
    Population p = pop;
    if (variable == SweepVariable::intercept) p.intercept = v;
    SurvivalSweepEntry e{v, {}};
    for (const auto& k : m.base().treatments()) {
      if (k == ref) continue;
      e.curves.push_back({ref, k, marginal_hazard_ratio_curve(m, p, ref, k, grid, scheme),
                          conditional_log_hr(m, p, ref, k, scheme)});
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace estimand
