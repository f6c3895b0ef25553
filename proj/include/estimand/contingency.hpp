#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "estimand/binary.hpp"

namespace estimand {

struct Cell {
  std::int64_t events = 0;
  std::int64_t non_events = 0;
};

struct Subgroup {
  std::string id;
  double prevalence = 0.0;
};

/// Treatment x subgroup table of event counts with subgroup prevalences.
/// The first treatment is the reference.
class ContingencyTable {
 public:
  ContingencyTable(std::vector<TreatmentId> treatments, std::vector<Subgroup> subgroups,
                   std::vector<std::vector<Cell>> cells);

  /// CSV with header `treatment,subgroup,events,non_events`, and a side table
  /// `subgroup,prevalence`. Treatments and subgroups keep first-seen order.
  static ContingencyTable from_csv(std::istream& counts, std::istream& prevalences);
  static ContingencyTable from_csv_files(const std::string& counts_path, const std::string& prevalence_path);

  const std::vector<TreatmentId>& treatments() const noexcept { return treatments_; }
  const std::vector<Subgroup>& subgroups() const noexcept { return subgroups_; }
  const TreatmentId& reference() const noexcept { return treatments_.front(); }
  const Cell& cell(const TreatmentId& k, const std::string& subgroup) const;
  Cell pooled(const TreatmentId& k) const;

  std::size_t treatment_index(const TreatmentId& k) const;
  std::size_t subgroup_index(const std::string& s) const;

  /// Keeps only the listed treatments (reference first as listed).
  ContingencyTable restricted_to(const std::vector<TreatmentId>& keep) const;

 private:
  std::vector<TreatmentId> treatments_;
  std::vector<Subgroup> subgroups_;
  std::vector<std::vector<Cell>> cells_;  // [treatment][subgroup]
};

/// Zero cells are errors unless Haldane's +0.5 correction is requested.
enum class ZeroCellPolicy { reject, haldane };

/// Pooled (marginal) odds ratio of b vs a across subgroups.
double marginal_or(const ContingencyTable& table, const TreatmentId& a, const TreatmentId& b,
                   ZeroCellPolicy policy = ZeroCellPolicy::reject);

/// Odds ratio of b vs a within one subgroup.
double subgroup_conditional_or(const ContingencyTable& table, const TreatmentId& a, const TreatmentId& b,
                               const std::string& subgroup, ZeroCellPolicy policy = ZeroCellPolicy::reject);

/// exp of the prevalence-weighted mean of subgroup log odds ratios.
double population_conditional_or(const ContingencyTable& table, const TreatmentId& a, const TreatmentId& b,
                                 ZeroCellPolicy policy = ZeroCellPolicy::reject);

struct PolicyAssignment {
  std::string subgroup;
  TreatmentId treatment;
};

/// Treatment per subgroup with what the policy achieves against the reference.
struct StratifiedPolicy {
  std::vector<PolicyAssignment> assignment;
  Cell pooled;                  // chosen cells summed over subgroups
  double marginal_or = 0.0;     // pooled policy odds / pooled reference odds
  double conditional_or = 0.0;  // prevalence-weighted log OR of chosen cells vs reference

  const TreatmentId& treatment_for(const std::string& subgroup) const;
};

/// Picks the treatment with the lowest (or highest) event odds in each
/// subgroup; ties go to the earlier-listed treatment.
StratifiedPolicy optimal_stratified_policy(const ContingencyTable& table, Direction direction,
                                           ZeroCellPolicy policy = ZeroCellPolicy::reject);

/// Logit model with one Bernoulli covariate (x = 1 for the second subgroup)
/// whose cell probabilities equal the observed frequencies, plus the matching
/// population. Two-subgroup tables only.
struct SaturatedModel {
  OutcomeModel model;
  Population population;
};

SaturatedModel saturated_logit_model(const ContingencyTable& table, ZeroCellPolicy policy = ZeroCellPolicy::reject);

struct TableComparison {
  TreatmentId treatment;
  double marginal_or = 1.0;
  std::vector<double> subgroup_or;  // parallel to table subgroups
  double conditional_or = 1.0;
};

struct ContingencyReport {
  std::vector<TableComparison> comparisons;  // every treatment vs reference
  std::vector<RankedTreatment> marginal_ranking;
  std::vector<RankedTreatment> conditional_ranking;
  bool conflict = false;
  StratifiedPolicy policy;
};

/// All Table-style odds ratios vs the reference, rankings on the log OR
/// scale, conflict flag and the optimal stratified policy.
ContingencyReport contingency_report(const ContingencyTable& table, Direction direction,
                                     ZeroCellPolicy policy = ZeroCellPolicy::reject);

}  // namespace estimand
