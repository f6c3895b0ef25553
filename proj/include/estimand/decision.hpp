#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "estimand/binary.hpp"
#include "estimand/survival.hpp"

namespace estimand {

/// Sign comparison of the conditional and marginal contrast for one pair.
struct PairSign {
  TreatmentId a;
  TreatmentId b;
  double conditional = 0.0;
  double marginal = 0.0;
  int conditional_sign = 0;  // 0 when within the tie tolerance
  int marginal_sign = 0;
  bool conflict = false;
  bool near_tie = false;
};

/// Two covariate points, both in the support, where gamma_ab has opposite
/// signs, plus the bisected point between them where it vanishes.
/// `axis` is the scanned covariate, or -1 for a scan between support vertices.
struct WitnessRegion {
  TreatmentId a;
  TreatmentId b;
  int axis = -1;
  std::vector<double> from;
  std::vector<double> to;
  std::vector<double> boundary;
  double effect_from = 0.0;
  double effect_to = 0.0;
  bool on_support = true;
};

struct ConflictReport {
  std::vector<RankedTreatment> conditional_ranking;
  std::vector<RankedTreatment> marginal_ranking;
  bool conflict = false;
  bool near_tie_warning = false;
  std::vector<PairSign> pairs;
  std::vector<WitnessRegion> witnesses;  // for conflicting pairs only
  IntegrationScheme scheme;
};

inline constexpr std::size_t kWitnessScanPoints = 512;
inline constexpr double kWitnessTolerance = 1e-8;

/// Sign changes of gamma_ab(x) over the population support. Each axis is
/// scanned with the others held at the population mean; if no scan finds a
/// change on the support, the segment between the minimising and maximising
/// support vertices is searched instead (gamma_ab is affine in x, so the
/// vertex search is exhaustive).
std::vector<WitnessRegion> find_witnesses(const OutcomeModel& model, const Population& pop, const TreatmentId& a,
                                          const TreatmentId& b);

ConflictReport conflict_report(const OutcomeModel& model, const Population& pop,
                               const std::vector<TreatmentId>& treatments, Direction direction,
                               const IntegrationScheme& scheme);

enum class SweepVariable { intercept, shape };

std::string_view to_string(SweepVariable v) noexcept;

struct SweepSeries {
  TreatmentId a;
  TreatmentId b;
  std::vector<double> conditional;  // d_ab per sweep value
  std::vector<double> marginal;     // Delta_ab per sweep value
};

/// Sweep value at which two marginal contrasts swap order.
struct RankSwitch {
  TreatmentId first;
  TreatmentId second;
  double value = 0.0;
};

/// Sweep value where |Delta_ab| - |d_ab| changes sign for one comparison.
struct NullDistanceCrossing {
  TreatmentId a;
  TreatmentId b;
  double value = 0.0;
  bool marginal_further_above = false;  // |Delta| > |d| just above `value`
};

struct SweepResult {
  SweepVariable variable = SweepVariable::intercept;
  std::vector<double> grid;
  std::vector<SweepSeries> series;  // reference vs each comparator
  std::vector<RankSwitch> switches;
  std::vector<NullDistanceCrossing> null_crossings;
  IntegrationScheme scheme;
};

/// 101 evenly spaced intercepts on [-6, 6].
std::vector<double> default_intercept_grid();

/// Delta and d of the reference vs each comparator over a grid of population
/// intercepts. Rank switches and null-distance crossings are bisected to
/// 1e-8 between adjacent grid values. With no grid, the default grid is
/// extended in steps of 2 until a marginal rank switch between comparators is
/// observed or +/-20 is reached.
SweepResult baseline_risk_sweep(const OutcomeModel& model, const Population& pop,
                                std::optional<std::vector<double>> grid, const std::vector<TreatmentId>& comparators,
                                const IntegrationScheme& scheme);

/// Population intercept mu at which the average probability on k0 equals
/// `target`, found by bracketing then bisection on the link scale.
double intercept_from_baseline_risk(const OutcomeModel& model, const Population& pop, const TreatmentId& k0,
                                    double target, const IntegrationScheme& scheme);

struct SharedPairInfo {
  TreatmentId a;
  TreatmentId b;
  bool shared = false;             // both declared in the shared set
  bool constant_contrast = false;  // gamma_ab(x) does not depend on x
  double contrast = 0.0;           // gamma_ab when constant
  bool crossing_capable = false;   // differing interactions
  bool crosses_on_support = false; // gamma_ab changes sign on the support
};

/// Individual-level curves along the first covariate axis (others at the mean).
struct IndividualCurves {
  std::vector<double> x;
  std::vector<TreatmentId> treatments;
  std::vector<std::vector<double>> effect_vs_reference;  // gamma_{ref,k}(x)
  std::vector<std::vector<double>> probability;          // pi_k(x)
};

IndividualCurves individual_curves(const OutcomeModel& model, const Population& pop, std::size_t points = 201);

struct SharedEmReport {
  std::vector<TreatmentId> shared;
  std::vector<SharedPairInfo> pairs;
  IndividualCurves curves;
};

/// Checks the shared effect-modifier declaration and classifies every pair.
/// Throws ValidationError if the declared-shared treatments differ in their
/// interaction coefficients.
SharedEmReport shared_em_scenario(const OutcomeModel& model, const Population& pop,
                                  const std::vector<TreatmentId>& shared, const IntegrationScheme& scheme);

struct SurvivalSweepEntry {
  double value = 0.0;
  std::vector<HazardRatioCurve> curves;  // reference vs each other treatment
};

struct SurvivalSweep {
  SweepVariable variable = SweepVariable::shape;
  TimeGrid grid;
  std::vector<SurvivalSweepEntry> entries;
};

/// Marginal and conditional hazard ratios vs the reference while varying the
/// Weibull shape or the population intercept.
SurvivalSweep survival_parameter_sweep(const WeibullPHModel& model, const Population& pop, SweepVariable variable,
                                       const std::vector<double>& values, const TimeGrid& grid,
                                       const IntegrationScheme& scheme);

}  // namespace estimand
