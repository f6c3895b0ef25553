#pragma once

#include <optional>
#include <string>

#include "estimand/cli/config.hpp"
#include "estimand/cli/output.hpp"

namespace estimand::cli {

/// Command-line overrides applied on top of a loaded config.
struct Overrides {
  std::optional<std::string> scheme;
  std::optional<std::size_t> nodes;
  std::optional<std::uint64_t> seed;
  std::optional<Direction> direction;
};

void apply_overrides(AnalysisConfig& cfg, const Overrides& o);

/// One analysis result in both renderings.
struct Output {
  Json json;
  CsvTable csv;
};

Output run_report(const AnalysisConfig& cfg);
Output run_sweep(const AnalysisConfig& cfg);
Output run_survival(const AnalysisConfig& cfg);
Output run_contingency(const AnalysisConfig& cfg);
Output run_conflict(const AnalysisConfig& cfg);
Output run_oracle(const AnalysisConfig& cfg);
/// Curve data behind fig1..fig7.
Output run_figure(const AnalysisConfig& cfg, const std::string& id);

/// Dispatch by verb name; `figure_id` is used only by "figure".
Output run_analysis(const std::string& verb, const AnalysisConfig& cfg, const std::optional<std::string>& figure_id = {});

}  // namespace estimand::cli
