#pragma once

#include <cstdint>
#include <vector>

#include "estimand/binary.hpp"
#include "estimand/survival.hpp"

namespace estimand {

/// Monte-Carlo potential-outcomes oracle settings.
///
/// By default each covariate draw contributes its exact conditional
/// probabilities, which checks the integration layer independently of the
/// model algebra. `bernoulli_outcomes` instead simulates Y(k) for each draw
/// and averages those, for end-to-end checks at wider tolerances.
struct OracleConfig {
  std::uint64_t draws = 1'000'000;
  std::uint64_t seed = 20240601;
  bool antithetic = false;
  bool bernoulli_outcomes = false;

  /// Throws ValidationError unless draws >= 10^4.
  void validate() const;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;  // delete-a-group jackknife standard error

  /// |value - reference| <= k * se
  bool agrees_with(double reference, double k = 4.0) const noexcept;
};

struct OraclePair {
  TreatmentId a;
  TreatmentId b;
  Estimate conditional;
  Estimate marginal;
};

struct OracleEstimands {
  std::vector<TreatmentId> treatments;
  std::vector<Estimate> average_probability;  // parallel to treatments
  std::vector<OraclePair> pairs;              // a before b in treatment order
  OracleConfig config;
  std::size_t groups = 0;                     // jackknife groups used

  const OraclePair& pair(const TreatmentId& a, const TreatmentId& b) const;
  const Estimate& probability(const TreatmentId& k) const;
};

/// Covariates drawn from the population with a counter-based generator, so
/// the result is a deterministic function of (inputs, config).
OracleEstimands oracle_estimands(const OutcomeModel& model, const Population& pop,
                                 const std::vector<TreatmentId>& treatments, const OracleConfig& config);

struct OracleHazardRatio {
  TreatmentId a;
  TreatmentId b;
  std::vector<Estimate> ratio;  // hbar_b(t) / hbar_a(t)
};

struct OracleSurvival {
  std::vector<TreatmentId> treatments;
  std::vector<std::vector<Estimate>> survival;  // [treatment][time]
  std::vector<OracleHazardRatio> hazard_ratios; // every pair a before b
  OracleConfig config;

  const OracleHazardRatio& hazard_ratio(const TreatmentId& a, const TreatmentId& b) const;
};

OracleSurvival oracle_survival(const WeibullPHModel& model, const Population& pop,
                               const std::vector<TreatmentId>& treatments, const TimeGrid& grid,
                               const OracleConfig& config);

/// One covariate draw from the population; `index` selects the draw.
std::vector<double> draw_covariates(const CovariateDistribution& dist, std::uint64_t seed, std::uint64_t index,
                                    bool antithetic_partner = false);

}  // namespace estimand
