#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "estimand/link.hpp"

namespace estimand {

using TreatmentId = std::string;

/// One treatment arm of an outcome model: interaction coefficients with the
/// covariates (effect modification) and the effect at x = 0.
struct Arm {
  TreatmentId id;
  std::vector<double> interactions;
  double effect = 0.0;
};

/// Generative outcome model on the linear predictor scale,
///
///   g(pi_k(x)) = mu + x' (beta1 + beta2_k) + gamma_k,
///
/// with the covariate transform fixed to the identity. The first arm is the
/// reference and must have zero interactions and zero effect.
class OutcomeModel {
 public:
  OutcomeModel(Link link, double intercept, std::vector<double> prognostic, std::vector<Arm> arms);

  const Link& link() const noexcept { return link_; }
  double intercept() const noexcept { return intercept_; }
  std::span<const double> prognostic() const noexcept { return prognostic_; }
  std::size_t dimension() const noexcept { return prognostic_.size(); }

  const std::vector<Arm>& arms() const noexcept { return arms_; }
  std::vector<TreatmentId> treatments() const;
  const TreatmentId& reference() const noexcept { return arms_.front().id; }
  bool has_treatment(const TreatmentId& id) const noexcept;

  /// Position of a treatment in declaration order; throws ValidationError.
  std::size_t index_of(const TreatmentId& id) const;
  const Arm& arm(const TreatmentId& id) const { return arms_[index_of(id)]; }

  /// Linear predictor by arm index, assuming x has the model's dimension.
  double eta(std::size_t arm_index, std::span<const double> x) const noexcept;
  double eta_with_intercept(std::size_t arm_index, std::span<const double> x,
                            double intercept) const noexcept;
  /// gamma_ab(x) by arm indices.
  double contrast(std::size_t a, std::size_t b, std::span<const double> x) const noexcept;

  OutcomeModel with_intercept(double intercept) const;
  OutcomeModel with_link(Link link) const;
  OutcomeModel with_prognostic(std::vector<double> prognostic) const;
  OutcomeModel with_effect(const TreatmentId& id, double effect) const;

 private:
  Link link_;
  double intercept_;
  std::vector<double> prognostic_;
  std::vector<Arm> arms_;
  // beta1 + beta2_k per arm, row-major.
  std::vector<double> slopes_;
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

struct Bernoulli {
  double prevalence = 0.5;
};

struct FinitePoints {
  std::vector<double> values;
  std::vector<double> weights;
};

using Marginal = std::variant<Uniform, Bernoulli, FinitePoints>;

/// Covariate distribution f_P(x): independent per-dimension marginals, or an
/// empirical sample of joint rows (each row equally weighted).
class CovariateDistribution {
 public:
  /// Zero-dimensional population (no covariates).
  CovariateDistribution() = default;

  static CovariateDistribution product(std::vector<Marginal> marginals);
  static CovariateDistribution empirical(std::vector<std::vector<double>> rows);

  std::size_t dimension() const noexcept;
  bool is_empirical() const noexcept { return empirical_; }
  /// True when every dimension has finite support (or the sample is empirical).
  bool is_finite() const noexcept;
  std::size_t continuous_dimensions() const noexcept;

  const std::vector<Marginal>& marginals() const noexcept { return marginals_; }
  const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

  std::vector<double> mean() const;
  /// Smallest and largest support value along one axis.
  std::pair<double, double> bounds(std::size_t axis) const;
  /// Finite support points along one axis (empty for Uniform).
  std::vector<double> support_points(std::size_t axis) const;

 private:
  std::vector<Marginal> marginals_;
  std::vector<std::vector<double>> rows_;
  bool empirical_ = false;
};

/// Target population P: intercept mu_P and covariate distribution.
struct Population {
  double intercept = 0.0;
  CovariateDistribution covariates;
};

/// mu + x'(beta1 + beta2_k) + gamma_k using the model's own intercept.
/// Throws ValidationError on unknown treatment or dimension mismatch.
double linear_predictor(const OutcomeModel& model, const TreatmentId& treatment,
                        std::span<const double> x);

/// Characteristic collapsibility function h_ab(pi, x): the probability on
/// treatment `to` implied by probability `pi` on treatment `from` at x.
/// Domain violations surface as RangeError, never clamped.
Probability ccf(const OutcomeModel& model, const TreatmentId& from, const TreatmentId& to,
                const Probability& pi, std::span<const double> x);

/// Throws ValidationError unless the population matches the model dimension.
void require_compatible(const OutcomeModel& model, const Population& population);

}  // namespace estimand
