#include <cmath>

#include "estimand/cli/commands.hpp"
#include "estimand/error.hpp"

namespace estimand::cli {

namespace {

std::string tag(const char* name, double v) { return std::string("[") + name + "=" + format_number(v) + "]"; }

const OutcomeModel& binary_model(const AnalysisConfig& cfg, const std::string& id) {
  if (!cfg.model || cfg.shape)
    throw ValidationError(id + " needs a binary outcome model (no Weibull shape)", "figure.id");
  return *cfg.model;
}

WeibullPHModel survival_model(const AnalysisConfig& cfg, const std::string& id) {
  if (!cfg.model || !cfg.shape) throw ValidationError(id + " needs a Weibull survival model", "figure.id");
  return WeibullPHModel(*cfg.shape, *cfg.model);
}

void need_covariate(const AnalysisConfig& cfg, const std::string& id) {
  if (cfg.population.covariates.dimension() == 0)
    throw ValidationError(id + " plots against a covariate but the population has none", "figure.id");
}

Output start(const AnalysisConfig& cfg, const std::string& id, const IntegrationScheme* scheme) {
  Output out;
  out.json["analysis"] = "figure";
  out.json["figure"] = id;
  out.json["config_hash"] = "fnv1a64:" + cfg.hash;
  out.csv.comments = {"figure=" + id, "config_hash=fnv1a64:" + cfg.hash};
  if (scheme) {
    out.json["scheme"] = scheme_json(*scheme);
    out.csv.comments.push_back(scheme_comment(*scheme));
  }
  return out;
}

/// Fills the JSON view from the CSV so both renderings hold the same data.
void mirror_json(Output& out) {
  Json cols = Json::object();
  for (std::size_t c = 0; c < out.csv.header.size(); ++c) {
    Json col = Json::array();
    for (const auto& r : out.csv.rows) col.push_back(std::stod(r[c]));
    cols[out.csv.header[c]] = col;
  }
  out.json["columns"] = cols;
}

/// Where gamma_{ref,b} and gamma_{ref,c} meet along the first axis with the
/// other covariates at their mean (both are affine in x).
std::optional<double> line_crossing(const OutcomeModel& model, const Population& pop, std::size_t b, std::size_t c) {
  auto x = pop.covariates.mean();
  x[0] = 0.0;
  const double f0 = model.contrast(c, b, x);
  x[0] = 1.0;
  const double slope = model.contrast(c, b, x) - f0;
  if (slope == 0.0) return std::nullopt;
  return -f0 / slope;
}

Output fig_effect_lines(const AnalysisConfig& cfg, const std::string& id, bool with_probability) {
  const OutcomeModel& model = binary_model(cfg, id);
  need_covariate(cfg, id);
  Output out = start(cfg, id, nullptr);
  const auto curves = individual_curves(model, cfg.population, cfg.figure.points);
  const auto& ids = curves.treatments;
  out.csv.header = {"x"};
  for (std::size_t k = 1; k < ids.size(); ++k) out.csv.header.push_back("gamma_" + ids[0] + "_" + ids[k]);
  if (with_probability)
    for (const auto& k : ids) out.csv.header.push_back("pi_" + k);
  for (std::size_t i = 0; i < curves.x.size(); ++i) {
    std::vector<double> row{curves.x[i]};
    for (std::size_t k = 1; k < ids.size(); ++k) row.push_back(curves.effect_vs_reference[k][i]);
    if (with_probability)
      for (std::size_t k = 0; k < ids.size(); ++k) row.push_back(curves.probability[k][i]);
    out.csv.add_row(row);
  }
  Json crossings = Json::array();
  const auto [lo, hi] = cfg.population.covariates.bounds(0);
  for (std::size_t b = 1; b < ids.size(); ++b)
    for (std::size_t c = b + 1; c < ids.size(); ++c)
      if (const auto x = line_crossing(model, cfg.population, b, c)) {
        const bool inside = *x >= lo && *x <= hi;
        crossings.push_back({{"first", "gamma_" + ids[0] + "_" + ids[b]},
                             {"second", "gamma_" + ids[0] + "_" + ids[c]},
                             {"x", *x},
                             {"on_support", inside}});
        out.csv.comments.push_back("crossing gamma_" + ids[0] + "_" + ids[b] + " gamma_" + ids[0] + "_" + ids[c] +
                                   " x=" + format_number(*x) + (inside ? "" : " (outside support)"));
      }
  mirror_json(out);
  out.json["crossings"] = crossings;
  return out;
}

Output fig_probability_by_intercept(const AnalysisConfig& cfg, const std::string& id) {
  const OutcomeModel& model = binary_model(cfg, id);
  need_covariate(cfg, id);
  Output out = start(cfg, id, nullptr);
  const auto ids = model.treatments();
  std::vector<IndividualCurves> curves;
  out.csv.header = {"x"};
  for (double mu : cfg.figure.intercepts) {
    Population p = cfg.population;
    p.intercept = mu;
    curves.push_back(individual_curves(model, p, cfg.figure.points));
    for (const auto& k : ids) out.csv.header.push_back("pi_" + k + tag("mu", mu));
  }
  for (std::size_t i = 0; i < curves.front().x.size(); ++i) {
    std::vector<double> row{curves.front().x[i]};
    for (const auto& c : curves)
      for (const auto& p : c.probability) row.push_back(p[i]);
    out.csv.add_row(row);
  }
  mirror_json(out);
  return out;
}

Output fig_sweep(const AnalysisConfig& cfg, const std::string& id) {
  binary_model(cfg, id);
  const Output sweep = run_sweep(cfg);
  const auto scheme = cfg.effective_scheme();
  Output out = start(cfg, id, &scheme);
  const Json& series = sweep.json["series"];
  out.csv.header = {"mu"};
  for (const auto& s : series) {
    const std::string pair = s["a"].get<std::string>() + "_" + s["b"].get<std::string>();
    out.csv.header.push_back("d_" + pair);
    out.csv.header.push_back("Delta_" + pair);
  }
  const auto& grid = sweep.json["grid"];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> row{grid[i].get<double>()};
    for (const auto& s : series) {
      row.push_back(s["conditional"][i].get<double>());
      row.push_back(s["marginal"][i].get<double>());
    }
    out.csv.add_row(row);
  }
  mirror_json(out);
  out.json["rank_switches"] = sweep.json["rank_switches"];
  out.json["null_distance_crossings"] = sweep.json["null_distance_crossings"];
  return out;
}

Output fig_survival(const AnalysisConfig& cfg, const std::string& id) {
  const WeibullPHModel model = survival_model(cfg, id);
  const auto scheme = cfg.effective_scheme();
  Output out = start(cfg, id, &scheme);
  out.csv.header = {"t"};
  std::vector<std::vector<double>> cols;
  for (const auto& k : cfg.treatments) {
    out.csv.header.push_back("S_" + k);
    cols.push_back(marginal_survival_curve(model, cfg.population, k, cfg.grid, scheme));
  }
  for (std::size_t t = 0; t < cfg.grid.size(); ++t) {
    std::vector<double> row{cfg.grid[t]};
    for (const auto& c : cols) row.push_back(c[t]);
    out.csv.add_row(row);
  }
  mirror_json(out);
  return out;
}

Output fig_hazard_ratios(const AnalysisConfig& cfg, const std::string& id) {
  const WeibullPHModel model = survival_model(cfg, id);
  const auto scheme = cfg.effective_scheme();
  Output out = start(cfg, id, &scheme);
  const auto g = survival_grid(model, cfg.population, cfg.treatments, cfg.grid, scheme);
  out.csv.header = {"t"};
  for (const auto& c : g.hazard_ratios) {
    out.csv.header.push_back("HR_" + c.a + "_" + c.b + "_marginal");
    out.csv.header.push_back("HR_" + c.a + "_" + c.b + "_conditional");
  }
  for (std::size_t t = 0; t < g.grid.size(); ++t) {
    std::vector<double> row{g.grid[t]};
    for (const auto& c : g.hazard_ratios) {
      row.push_back(c.marginal[t]);
      row.push_back(std::exp(c.conditional_log_hr));
    }
    out.csv.add_row(row);
  }
  for (const auto& c : g.crossings)
    for (const auto& iv : c.intervals)
      out.csv.comments.push_back("crossing " + c.b + " " + c.c + " t=" + format_number(iv.start));
  mirror_json(out);
  return out;
}

Output fig_hazard_ratio_sweeps(const AnalysisConfig& cfg, const std::string& id) {
  const WeibullPHModel model = survival_model(cfg, id);
  const auto scheme = cfg.effective_scheme();
  Output out = start(cfg, id, &scheme);
  auto sweeps = cfg.survival_sweeps;
  if (sweeps.empty())
    sweeps = {{SweepVariable::shape, {0.75, 1.0, 2.0, 3.0}}, {SweepVariable::intercept, {-2.0, -1.0, 0.0}}};
  out.csv.header = {"t"};
  std::vector<std::vector<double>> cols;
  for (const auto& s : sweeps) {
    const auto r = survival_parameter_sweep(model, cfg.population, s.variable, s.values, cfg.grid, scheme);
    const std::string var(to_string(s.variable));
    for (const auto& e : r.entries)
      for (const auto& c : e.curves) {
        const std::string suffix = tag(var.c_str(), e.value);
        out.csv.header.push_back("HR_" + c.a + "_" + c.b + "_marginal" + suffix);
        cols.push_back(c.marginal);
        out.csv.header.push_back("HR_" + c.a + "_" + c.b + "_conditional" + suffix);
        cols.emplace_back(cfg.grid.size(), std::exp(c.conditional_log_hr));
      }
  }
  for (std::size_t t = 0; t < cfg.grid.size(); ++t) {
    std::vector<double> row{cfg.grid[t]};
    for (const auto& c : cols) row.push_back(c[t]);
    out.csv.add_row(row);
  }
  mirror_json(out);
  return out;
}

}  // namespace

Output run_figure(const AnalysisConfig& cfg, const std::string& id) {
  if (id == "fig1") return fig_effect_lines(cfg, id, false);
  if (id == "fig2") return fig_sweep(cfg, id);
  if (id == "fig3") return fig_probability_by_intercept(cfg, id);
  if (id == "fig4") return fig_effect_lines(cfg, id, true);
  if (id == "fig5") return fig_survival(cfg, id);
  if (id == "fig6") return fig_hazard_ratios(cfg, id);
  if (id == "fig7") return fig_hazard_ratio_sweeps(cfg, id);
  throw ValidationError("unknown figure '" + id + "' (expected fig1..fig7)", "figure.id");
}

}  // namespace estimand::cli
