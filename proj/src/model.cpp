#include "estimand/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "estimand/error.hpp"

namespace estimand {

namespace {

void require_finite(double v, const std::string& path) {
  if (!std::isfinite(v)) throw ValidationError("coefficient is not finite", path);
}

}  // namespace

OutcomeModel::OutcomeModel(Link link, double intercept, std::vector<double> prognostic,
                           std::vector<Arm> arms)
    : link_(link), intercept_(intercept), prognostic_(std::move(prognostic)), arms_(std::move(arms)) {
  require_finite(intercept_, "model.intercept");
  for (double b : prognostic_) require_finite(b, "model.prognostic");
  if (arms_.empty()) throw ValidationError("model needs at least one treatment", "model.treatments");
  const std::size_t dim = prognostic_.size();
  for (std::size_t k = 0; k < arms_.size(); ++k) {
    Arm& arm = arms_[k];
    if (arm.id.empty()) throw ValidationError("empty treatment id", "model.treatments");
    for (std::size_t j = 0; j < k; ++j)
      if (arms_[j].id == arm.id)
        throw ValidationError("duplicate treatment '" + arm.id + "'", "model.treatments");
    if (arm.interactions.empty()) arm.interactions.assign(dim, 0.0);
    if (arm.interactions.size() != dim)
      throw ValidationError("interaction vector for '" + arm.id + "' has dimension " +
                                std::to_string(arm.interactions.size()) + ", expected " +
                                std::to_string(dim),
                            "model.interactions");
    for (double b : arm.interactions) require_finite(b, "model.interactions");
    require_finite(arm.effect, "model.treatment_effects");
  }
  const Arm& ref = arms_.front();
  if (ref.effect != 0.0)
    throw ValidationError("reference treatment '" + ref.id + "' must have zero effect",
                          "model.treatment_effects");
  if (std::any_of(ref.interactions.begin(), ref.interactions.end(), [](double b) { return b != 0.0; }))
    throw ValidationError("reference treatment '" + ref.id + "' must have zero interactions",
                          "model.interactions");

  slopes_.resize(arms_.size() * dim);
  for (std::size_t k = 0; k < arms_.size(); ++k)
    for (std::size_t j = 0; j < dim; ++j) slopes_[k * dim + j] = prognostic_[j] + arms_[k].interactions[j];
}

std::vector<TreatmentId> OutcomeModel::treatments() const {
  std::vector<TreatmentId> ids;
  ids.reserve(arms_.size());
  for (const auto& a : arms_) ids.push_back(a.id);
  return ids;
}

bool OutcomeModel::has_treatment(const TreatmentId& id) const noexcept {
  return std::any_of(arms_.begin(), arms_.end(), [&](const Arm& a) { return a.id == id; });
}

std::size_t OutcomeModel::index_of(const TreatmentId& id) const {
  for (std::size_t k = 0; k < arms_.size(); ++k)
    if (arms_[k].id == id) return k;
  throw ValidationError("unknown treatment '" + id + "'", "treatments");
}

double OutcomeModel::eta(std::size_t arm_index, std::span<const double> x) const noexcept {
  return eta_with_intercept(arm_index, x, intercept_);
}

double OutcomeModel::eta_with_intercept(std::size_t arm_index, std::span<const double> x,
                                        double intercept) const noexcept {
  const std::size_t dim = prognostic_.size();
  const double* slope = slopes_.data() + arm_index * dim;
  double s = 0.0;
  for (std::size_t j = 0; j < dim; ++j) s += x[j] * slope[j];
  return intercept + s + arms_[arm_index].effect;
}

double OutcomeModel::contrast(std::size_t a, std::size_t b, std::span<const double> x) const noexcept {
  const auto& ia = arms_[a].interactions;
  const auto& ib = arms_[b].interactions;
  double s = 0.0;
  for (std::size_t j = 0; j < ia.size(); ++j) s += x[j] * (ib[j] - ia[j]);
  return arms_[b].effect - arms_[a].effect + s;
}

OutcomeModel OutcomeModel::with_intercept(double intercept) const {
  return OutcomeModel(link_, intercept, prognostic_, arms_);
}

OutcomeModel OutcomeModel::with_link(Link link) const {
  return OutcomeModel(link, intercept_, prognostic_, arms_);
}

OutcomeModel OutcomeModel::with_prognostic(std::vector<double> prognostic) const {
  return OutcomeModel(link_, intercept_, std::move(prognostic), arms_);
}

OutcomeModel OutcomeModel::with_effect(const TreatmentId& id, double effect) const {
  auto arms = arms_;
  arms[index_of(id)].effect = effect;
  return OutcomeModel(link_, intercept_, prognostic_, std::move(arms));
}

// --- covariates -------------------------------------------------------------

CovariateDistribution CovariateDistribution::product(std::vector<Marginal> marginals) {
  for (std::size_t j = 0; j < marginals.size(); ++j) {
    const std::string path = "population.covariates[" + std::to_string(j) + "]";
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            if (!std::isfinite(m.lo) || !std::isfinite(m.hi) || !(m.lo < m.hi))
              throw ValidationError("uniform covariate needs finite lo < hi", path);
          } else if constexpr (std::is_same_v<T, Bernoulli>) {
            if (!(m.prevalence >= 0.0 && m.prevalence <= 1.0))
              throw ValidationError("prevalence must lie in [0, 1]", path);
          } else {
            if (m.values.empty() || m.values.size() != m.weights.size())
              throw ValidationError("finite points need matching non-empty values and weights", path);
            double total = 0.0;
            for (std::size_t i = 0; i < m.weights.size(); ++i) {
              if (!std::isfinite(m.values[i])) throw ValidationError("support value not finite", path);
              if (!(m.weights[i] >= 0.0 && m.weights[i] <= 1.0))
                throw ValidationError("weights must lie in [0, 1]", path);
              total += m.weights[i];
            }
            if (std::abs(total - 1.0) > 1e-12) throw ValidationError("weights must sum to 1", path);
          }
        },
        marginals[j]);
  }
  CovariateDistribution d;
  d.marginals_ = std::move(marginals);
  return d;
}

CovariateDistribution CovariateDistribution::empirical(std::vector<std::vector<double>> rows) {
  if (rows.empty()) throw ValidationError("empirical sample has no rows", "population.covariates");
  const std::size_t dim = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != dim)
      throw ValidationError("empirical rows have unequal dimension", "population.covariates");
    for (double v : r)
      if (!std::isfinite(v)) throw ValidationError("empirical value not finite", "population.covariates");
  }
  CovariateDistribution d;
  d.rows_ = std::move(rows);
  d.empirical_ = true;
  return d;
}

std::size_t CovariateDistribution::dimension() const noexcept {
  return empirical_ ? rows_.front().size() : marginals_.size();
}

bool CovariateDistribution::is_finite() const noexcept {
  return continuous_dimensions() == 0;
}

std::size_t CovariateDistribution::continuous_dimensions() const noexcept {
  if (empirical_) return 0;
  return static_cast<std::size_t>(std::count_if(marginals_.begin(), marginals_.end(), [](const Marginal& m) {
    return std::holds_alternative<Uniform>(m);
  }));
}

std::vector<double> CovariateDistribution::mean() const {
  std::vector<double> mu(dimension(), 0.0);
  if (empirical_) {
    for (const auto& r : rows_)
      for (std::size_t j = 0; j < r.size(); ++j) mu[j] += r[j];
    for (double& v : mu) v /= static_cast<double>(rows_.size());
    return mu;
  }
  for (std::size_t j = 0; j < marginals_.size(); ++j) {
    mu[j] = std::visit(
        [](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Uniform>) return 0.5 * (m.lo + m.hi);
          else if constexpr (std::is_same_v<T, Bernoulli>) return m.prevalence;
          else return std::inner_product(m.values.begin(), m.values.end(), m.weights.begin(), 0.0);
        },
        marginals_[j]);
  }
  return mu;
}

std::pair<double, double> CovariateDistribution::bounds(std::size_t axis) const {
  if (axis >= dimension()) throw ValidationError("axis out of range");
  if (empirical_) {
    double lo = rows_.front()[axis], hi = lo;
    for (const auto& r : rows_) {
      lo = std::min(lo, r[axis]);
      hi = std::max(hi, r[axis]);
    }
    return {lo, hi};
  }
  return std::visit(
      [](const auto& m) -> std::pair<double, double> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          return {m.lo, m.hi};
        } else if constexpr (std::is_same_v<T, Bernoulli>) {
          if (m.prevalence == 0.0) return {0.0, 0.0};
          if (m.prevalence == 1.0) return {1.0, 1.0};
          return {0.0, 1.0};
        } else {
          double lo = 0.0, hi = 0.0;
          bool seen = false;
          for (std::size_t i = 0; i < m.values.size(); ++i) {
            if (m.weights[i] == 0.0) continue;
            lo = seen ? std::min(lo, m.values[i]) : m.values[i];
            hi = seen ? std::max(hi, m.values[i]) : m.values[i];
            seen = true;
          }
          return {lo, hi};
        }
      },
      marginals_[axis]);
}

std::vector<double> CovariateDistribution::support_points(std::size_t axis) const {
  if (axis >= dimension()) throw ValidationError("axis out of range");
  std::vector<double> pts;
  if (empirical_) {
    for (const auto& r : rows_) pts.push_back(r[axis]);
  } else {
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Bernoulli>) {
            if (m.prevalence < 1.0) pts.push_back(0.0);
            if (m.prevalence > 0.0) pts.push_back(1.0);
          } else if constexpr (std::is_same_v<T, FinitePoints>) {
            for (std::size_t i = 0; i < m.values.size(); ++i)
              if (m.weights[i] > 0.0) pts.push_back(m.values[i]);
          }
        },
        marginals_[axis]);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

// --- operations -------------------------------------------------------------

double linear_predictor(const OutcomeModel& model, const TreatmentId& treatment,
                        std::span<const double> x) {
  const std::size_t k = model.index_of(treatment);
  if (x.size() != model.dimension())
    throw ValidationError("covariate vector has dimension " + std::to_string(x.size()) +
                          ", model expects " + std::to_string(model.dimension()));
  return model.eta(k, x);
}

Probability ccf(const OutcomeModel& model, const TreatmentId& from, const TreatmentId& to,
                const Probability& pi, std::span<const double> x) {
  const std::size_t a = model.index_of(from);
  const std::size_t b = model.index_of(to);
  if (x.size() != model.dimension())
    throw ValidationError("covariate vector has dimension " + std::to_string(x.size()) +
                          ", model expects " + std::to_string(model.dimension()));
  if (a == b) return pi;
  return model.link().inverse(model.link().forward(pi) + model.contrast(a, b, x));
}

void require_compatible(const OutcomeModel& model, const Population& population) {
  if (population.covariates.dimension() != model.dimension())
    throw ValidationError("population has " + std::to_string(population.covariates.dimension()) +
                              " covariates, model expects " + std::to_string(model.dimension()),
                          "population.covariates");
  if (!std::isfinite(population.intercept))
    throw ValidationError("population intercept is not finite", "population.intercept");
}

}  // namespace estimand
