#include "estimand/cli/run.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <ostream>

#include "estimand/cli/commands.hpp"
#include "estimand/error.hpp"

namespace estimand::cli {

namespace {

void report_error(std::ostream& err, const char* type, const std::string& message, const std::string& path) {
  Json e{{"type", type}, {"message", message}};
  if (!path.empty()) e["path"] = path;
  err << Json{{"error", e}}.dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional and marginal treatment-effect estimands", "estimand-lab"};
  std::string verb, figure_id, config_path, out_dir, format, scheme, direction, prevalence;
  std::size_t nodes = 0;
  std::uint64_t seed = 0;
  app.add_option("verb", verb, "report | sweep | survival | contingency | conflict | oracle | figure")
      ->check(CLI::IsMember({"report", "sweep", "survival", "contingency", "conflict", "oracle", "figure"}));
  app.add_option("figure_id", figure_id, "fig1..fig7 (figure only)");
  app.add_option("--config", config_path, "JSON config, or a counts CSV")->required();
  app.add_option("--out", out_dir, "output directory (default: stdout)");
  app.add_option("--scheme", scheme, "exact_discrete | gauss_legendre | qmc_sobol | empirical_mean");
  app.add_option("--nodes", nodes, "Gauss-Legendre nodes per dimension")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "oracle seed and Sobol scramble seed");
  app.add_option("--direction", direction, "lower | higher")->check(CLI::IsMember({"lower", "higher"}));
  app.add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--prevalence", prevalence, "subgroup prevalence CSV for a counts CSV config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, "validation_error", e.what(), "arguments");
    return 1;
  }

  try {
    AnalysisConfig cfg = load_config(config_path, prevalence.empty() ? std::nullopt : std::optional(prevalence));
    Overrides o;
    if (!scheme.empty()) o.scheme = scheme;
    if (app.count("--nodes")) o.nodes = nodes;
    if (app.count("--seed")) o.seed = seed;
    if (!direction.empty()) o.direction = parse_direction(direction);
    apply_overrides(cfg, o);

    if (verb.empty()) {
      if (!cfg.analysis) throw ValidationError("no verb given and the config has no analysis field", "analysis");
      verb = *cfg.analysis;
    }
    if (!figure_id.empty() && verb != "figure")
      throw ValidationError("a figure id only applies to the figure verb", "arguments");
    const auto fig = figure_id.empty() ? std::nullopt : std::optional(figure_id);
    const Output result = run_analysis(verb, cfg, fig);
    // Figures are curve data, so CSV unless JSON is asked for.
    if (format.empty()) format = verb == "figure" ? "csv" : "json";
    const std::string body = format == "csv" ? result.csv.str() : result.json.dump(2) + "\n";

    if (out_dir.empty()) {
      out << body;
    } else {
      std::string name = verb;
      if (verb == "figure") name = fig ? *fig : *cfg.figure.id;
      const auto path = (std::filesystem::path(out_dir) / (name + "." + format)).string();
      write_atomic(path, body);
      out << path << '\n';
    }
    return 0;
  } catch (const ValidationError& e) {
    report_error(err, "validation_error", e.what(), e.path());
    return 1;
  } catch (const NumericalError& e) {
    report_error(err, "numerical_error", e.what(), {});
    return 2;
  } catch (const std::exception& e) {
    report_error(err, "error", e.what(), {});
    return 2;
  }
}

}  // namespace estimand::cli
