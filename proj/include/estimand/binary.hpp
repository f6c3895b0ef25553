#pragma once

#include <map>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "estimand/integrate.hpp"
#include "estimand/model.hpp"

namespace estimand {

enum class Direction { lower_is_better, higher_is_better };

std::string_view to_string(Direction d) noexcept;
Direction parse_direction(std::string_view name);

/// Differences smaller than this on the link scale count as ties.
inline constexpr double kTieTolerance = 1e-9;

/// gamma_ab(x) = gamma_b - gamma_a + x'(beta2_b - beta2_a).
double individual_conditional_effect(const OutcomeModel& model, const TreatmentId& a, const TreatmentId& b,
                                     std::span<const double> x);

/// d_ab(P): the individual effects averaged over the population on the link
/// scale. Depends on the covariate distribution only through effect modifiers.
double population_conditional_effect(const OutcomeModel& model, const Population& pop, const TreatmentId& a,
                                     const TreatmentId& b, const IntegrationScheme& scheme);

/// pi_k(x) = g^{-1}(eta_k(x)) evaluated with the population's intercept.
Probability individual_probability(const OutcomeModel& model, double pop_intercept, const TreatmentId& k,
                                   std::span<const double> x);

/// Average event probability on treatment k over the population. Both the
/// probability and its complement are integrated so either tail stays exact.
Probability average_probability(const OutcomeModel& model, const Population& pop, const TreatmentId& k,
                                const IntegrationScheme& scheme);

/// Delta_ab(P) = g(pibar_b) - g(pibar_a).
double population_marginal_effect(const OutcomeModel& model, const Population& pop, const TreatmentId& a,
                                  const TreatmentId& b, const IntegrationScheme& scheme);

struct PairEstimate {
  TreatmentId a;
  TreatmentId b;
  double conditional = 0.0;  // d_ab
  double marginal = 0.0;     // Delta_ab
};

struct RankedTreatment {
  TreatmentId id;
  double value = 0.0;  // effect vs the reference on the ranking's scale
  int rank = 0;        // 1 = best; ties share a rank
};

/// Orders treatments by value under `direction`. Values within kTieTolerance
/// share a rank and are listed in lexicographic id order.
std::vector<RankedTreatment> rank_treatments(std::vector<std::pair<TreatmentId, double>> values,
                                             Direction direction);

struct EstimandReport {
  std::vector<TreatmentId> treatments;
  TreatmentId reference;
  Direction direction = Direction::lower_is_better;
  IntegrationScheme scheme;
  std::vector<PairEstimate> pairs;                // a before b in `treatments` order
  std::vector<Probability> average_probabilities; // parallel to `treatments`
  std::vector<RankedTreatment> conditional_ranking;
  std::vector<RankedTreatment> marginal_ranking;
  std::shared_ptr<const OutcomeModel> model;

  /// d_ab for any ordered pair in the report; d_ba = -d_ab.
  double conditional(const TreatmentId& a, const TreatmentId& b) const;
  double marginal(const TreatmentId& a, const TreatmentId& b) const;
  const Probability& average_probability(const TreatmentId& k) const;
  double individual_effect_at(const TreatmentId& a, const TreatmentId& b, std::span<const double> x) const;

  std::vector<TreatmentId> conditional_order() const;
  std::vector<TreatmentId> marginal_order() const;
};

/// Every binary estimand for the listed treatments, with rankings of each
/// treatment's effect against the model reference under both criteria.
EstimandReport estimand_report(const OutcomeModel& model, const Population& pop,
                               const std::vector<TreatmentId>& treatments, Direction direction,
                               const IntegrationScheme& scheme);

enum class AveragingMode { individual_level, plug_in_average };

/// Net benefit as a polynomial in the event probability, per treatment.
/// value_polynomials[k] = {c0, c1, ...} means phi_k(pi) = c0 + c1 pi + ...
struct NetBenefitSpec {
  std::map<TreatmentId, std::vector<double>> value_polynomials;
  AveragingMode mode = AveragingMode::individual_level;

  void validate() const;
};

double evaluate_polynomial(std::span<const double> coefficients, double x) noexcept;

/// individual_level: E_P[phi_k(pi_k(x))]; plug_in_average: phi_k(pibar_k).
double expected_net_benefit(const OutcomeModel& model, const Population& pop, const NetBenefitSpec& spec,
                            const TreatmentId& k, const IntegrationScheme& scheme);

}  // namespace estimand
