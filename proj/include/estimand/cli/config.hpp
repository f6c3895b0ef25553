#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "estimand/binary.hpp"
#include "estimand/contingency.hpp"
#include "estimand/decision.hpp"
#include "estimand/oracle.hpp"
#include "estimand/survival.hpp"

namespace estimand::cli {

using Json = nlohmann::ordered_json;

/// 64-bit FNV-1a of the raw config bytes, as 16 hex digits.
std::string fnv1a64_hex(std::string_view bytes);

struct SweepOptions {
  std::optional<std::vector<double>> grid;
  std::vector<TreatmentId> comparators;  // empty: every non-reference treatment
};

struct SurvivalSweepOptions {
  SweepVariable variable = SweepVariable::shape;
  std::vector<double> values;
};

struct FigureOptions {
  std::optional<std::string> id;
  std::vector<double> intercepts{-2.0, 0.0, 2.0};  // fig3 curves
  std::size_t points = 201;
};

/// A parsed analysis configuration. Validation errors carry the JSON path of
/// the offending field.
struct AnalysisConfig {
  std::string source;
  std::string hash;
  std::optional<std::string> analysis;

  std::optional<OutcomeModel> model;
  std::optional<double> shape;  // present for Weibull models
  Population population;
  std::vector<TreatmentId> treatments;

  std::optional<IntegrationScheme> scheme;  // explicit choice; else the distribution default
  Direction direction = Direction::lower_is_better;

  SweepOptions sweep;
  TimeGrid grid = TimeGrid::default_grid();
  std::vector<SurvivalSweepOptions> survival_sweeps;

  std::optional<ContingencyTable> table;
  ZeroCellPolicy zero_cells = ZeroCellPolicy::reject;

  OracleConfig oracle;
  std::vector<TreatmentId> shared_em;
  std::optional<NetBenefitSpec> net_benefit;
  FigureOptions figure;

  IntegrationScheme effective_scheme() const;
  const OutcomeModel& require_model(const char* why) const;
  WeibullPHModel require_survival_model(const char* why) const;
  const ContingencyTable& require_table(const char* why) const;
};

/// Parses a JSON document. `base_dir` resolves relative table paths.
AnalysisConfig parse_config(const Json& doc, const std::string& base_dir, std::string hash);

/// Loads a JSON config, or a counts CSV whose prevalence table is given
/// explicitly or found next to it as `<stem>_prevalence.csv`.
AnalysisConfig load_config(const std::string& path, const std::optional<std::string>& prevalence_path = {});

}  // namespace estimand::cli
