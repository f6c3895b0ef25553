#include "estimand/cli/commands.hpp"

#include <cmath>

#include "estimand/error.hpp"

namespace estimand::cli {

void apply_overrides(AnalysisConfig& cfg, const Overrides& o) {
  if (o.scheme || o.nodes || o.seed) {
    IntegrationScheme s = cfg.effective_scheme();
    if (o.scheme) {
      const auto kind = parse_scheme_kind(*o.scheme);
      if (kind != s.kind) {
        const double tol = s.tolerance;
        s = IntegrationScheme{};
        s.kind = kind;
        s.tolerance = tol;
      }
    }
    if (o.nodes) {
      if (!o.scheme && s.kind != SchemeKind::gauss_legendre) s.kind = SchemeKind::gauss_legendre;
      s.nodes = *o.nodes;
    }
    if (o.seed) s.scramble_seed = *o.seed;
    try {
      s.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), "scheme");
    }
    if (o.scheme || o.nodes || cfg.scheme) cfg.scheme = s;
  }
  if (o.seed) cfg.oracle.seed = *o.seed;
  if (o.direction) cfg.direction = *o.direction;
}

namespace {

std::string pair_name(const TreatmentId& a, const TreatmentId& b) { return a + "_" + b; }

Json header(const AnalysisConfig& cfg, const char* analysis) {
  Json j;
  j["analysis"] = analysis;
  j["config_hash"] = "fnv1a64:" + cfg.hash;
  if (!cfg.source.empty()) j["config"] = cfg.source;
  return j;
}

std::vector<std::string> csv_provenance(const AnalysisConfig& cfg, const char* analysis,
                                        const IntegrationScheme* scheme) {
  std::vector<std::string> out{std::string("analysis=") + analysis, "config_hash=fnv1a64:" + cfg.hash};
  if (scheme) out.push_back(scheme_comment(*scheme));
  return out;
}

Json ranking_json(const std::vector<RankedTreatment>& r) {
  Json arr = Json::array();
  for (const auto& t : r) arr.push_back({{"treatment", t.id}, {"value", t.value}, {"rank", t.rank}});
  return arr;
}

Json witness_json(const WitnessRegion& w) {
  return {{"a", w.a},           {"b", w.b},
          {"axis", w.axis},     {"from", w.from},
          {"to", w.to},         {"boundary", w.boundary},
          {"effect_from", w.effect_from}, {"effect_to", w.effect_to},
          {"on_support", w.on_support}};
}

Json conflict_json(const ConflictReport& c) {
  Json j;
  j["conflict"] = c.conflict;
  j["near_tie_warning"] = c.near_tie_warning;
  j["conditional_ranking"] = ranking_json(c.conditional_ranking);
  j["marginal_ranking"] = ranking_json(c.marginal_ranking);
  Json pairs = Json::array();
  for (const auto& p : c.pairs)
    pairs.push_back({{"a", p.a},
                     {"b", p.b},
                     {"conditional", p.conditional},
                     {"marginal", p.marginal},
                     {"conditional_sign", p.conditional_sign},
                     {"marginal_sign", p.marginal_sign},
                     {"conflict", p.conflict},
                     {"near_tie", p.near_tie}});
  j["pairs"] = pairs;
  Json ws = Json::array();
  for (const auto& w : c.witnesses) ws.push_back(witness_json(w));
  j["witnesses"] = ws;
  return j;
}

Json interval_json(const std::vector<CrossingInterval>& v) {
  Json arr = Json::array();
  for (const auto& c : v) arr.push_back({{"start", c.start}, {"end", c.end}, {"closed", c.closed}});
  return arr;
}

Json estimate_json(const Estimate& e, std::optional<double> deterministic) {
  Json j{{"value", e.value}, {"se", e.se}};
  if (deterministic) {
    j["deterministic"] = *deterministic;
    j["z"] = e.se > 0.0 ? (e.value - *deterministic) / e.se : 0.0;
    j["within_4se"] = e.agrees_with(*deterministic) || e.value == *deterministic;
  }
  return j;
}

Json oracle_config_json(const OracleConfig& c, std::size_t groups) {
  return {{"draws", c.draws},
          {"seed", c.seed},
          {"antithetic", c.antithetic},
          {"bernoulli_outcomes", c.bernoulli_outcomes},
          {"jackknife_groups", groups},
          {"generator", "philox4x32-10"}};
}

}  // namespace

Output run_report(const AnalysisConfig& cfg) {
  const OutcomeModel& model = cfg.require_model("report");
  if (cfg.shape) throw ValidationError("report is for binary outcome models; use survival", "model.shape");
  const auto scheme = cfg.effective_scheme();
  const auto est = estimand_report(model, cfg.population, cfg.treatments, cfg.direction, scheme);
  const auto conflict = conflict_report(model, cfg.population, cfg.treatments, cfg.direction, scheme);

  Output out;
  Json& j = out.json = header(cfg, "report");
  j["scheme"] = scheme_json(scheme);
  j["link"] = std::string(model.link().name());
  j["collapsibility"] = std::string(to_string(classify_collapsibility(model.link())));
  j["population_intercept"] = cfg.population.intercept;
  j["reference"] = est.reference;
  j["direction"] = std::string(to_string(cfg.direction));
  Json probs = Json::object();
  for (std::size_t i = 0; i < est.treatments.size(); ++i) probs[est.treatments[i]] = est.average_probabilities[i].value();
  j["average_probability"] = probs;
  Json pairs = Json::array();
  for (const auto& p : est.pairs)
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"conditional", p.conditional}, {"marginal", p.marginal}});
  j["pairs"] = pairs;
  j["conditional_ranking"] = ranking_json(est.conditional_ranking);
  j["marginal_ranking"] = ranking_json(est.marginal_ranking);
  j["conflict"] = conflict.conflict;
  j["near_tie_warning"] = conflict.near_tie_warning;
  Json ws = Json::array();
  for (const auto& w : conflict.witnesses) ws.push_back(witness_json(w));
  j["witnesses"] = ws;
  if (cfg.net_benefit) {
    Json nb = Json::object();
    for (const auto& [k, _] : cfg.net_benefit->value_polynomials) {
      NetBenefitSpec ind = *cfg.net_benefit, plug = *cfg.net_benefit;
      ind.mode = AveragingMode::individual_level;
      plug.mode = AveragingMode::plug_in_average;
      nb[k] = {{"individual_level", expected_net_benefit(model, cfg.population, ind, k, scheme)},
               {"plug_in_average", expected_net_benefit(model, cfg.population, plug, k, scheme)}};
    }
    j["net_benefit"] = nb;
  }

  out.csv.comments = csv_provenance(cfg, "report", &scheme);
  out.csv.header = {"a", "b", "conditional", "marginal", "average_probability_a", "average_probability_b"};
  for (const auto& p : est.pairs)
    out.csv.rows.push_back({p.a, p.b, format_number(p.conditional), format_number(p.marginal),
                            format_number(est.average_probability(p.a).value()),
                            format_number(est.average_probability(p.b).value())});
  return out;
}

Output run_sweep(const AnalysisConfig& cfg) {
  const OutcomeModel& model = cfg.require_model("sweep");
  const auto scheme = cfg.effective_scheme();
  std::vector<TreatmentId> comparators = cfg.sweep.comparators;
  if (comparators.empty())
    for (const auto& k : cfg.treatments)
      if (k != model.reference()) comparators.push_back(k);
  const auto r = baseline_risk_sweep(model, cfg.population, cfg.sweep.grid, comparators, scheme);

  Output out;
  Json& j = out.json = header(cfg, "sweep");
  j["scheme"] = scheme_json(scheme);
  j["variable"] = std::string(to_string(r.variable));
  j["grid"] = r.grid;
  Json series = Json::array();
  for (const auto& s : r.series)
    series.push_back({{"a", s.a}, {"b", s.b}, {"conditional", s.conditional}, {"marginal", s.marginal}});
  j["series"] = series;
  Json sw = Json::array();
  for (const auto& s : r.switches) sw.push_back({{"first", s.first}, {"second", s.second}, {"mu", s.value}});
  j["rank_switches"] = sw;
  Json nc = Json::array();
  for (const auto& c : r.null_crossings)
    nc.push_back({{"a", c.a}, {"b", c.b}, {"mu", c.value}, {"marginal_further_above", c.marginal_further_above}});
  j["null_distance_crossings"] = nc;

  out.csv.comments = csv_provenance(cfg, "sweep", &scheme);
  out.csv.header = {"sweep_value", "pair", "d", "Delta"};
  for (std::size_t i = 0; i < r.grid.size(); ++i)
    for (const auto& s : r.series)
      out.csv.rows.push_back({format_number(r.grid[i]), pair_name(s.a, s.b), format_number(s.conditional[i]),
                              format_number(s.marginal[i])});
  return out;
}

namespace {

Json hr_curves_json(const std::vector<HazardRatioCurve>& curves) {
  Json arr = Json::array();
  for (const auto& c : curves)
    arr.push_back({{"a", c.a}, {"b", c.b}, {"marginal_hr", c.marginal}, {"conditional_log_hr", c.conditional_log_hr}});
  return arr;
}

}  // namespace

Output run_survival(const AnalysisConfig& cfg) {
  const WeibullPHModel model = cfg.require_survival_model("survival");
  const auto scheme = cfg.effective_scheme();
  const auto g = survival_grid(model, cfg.population, cfg.treatments, cfg.grid, scheme);

  Output out;
  Json& j = out.json = header(cfg, "survival");
  j["scheme"] = scheme_json(scheme);
  j["shape"] = model.shape();
  j["population_intercept"] = cfg.population.intercept;
  j["reference"] = g.reference;
  j["times"] = std::vector<double>(g.grid.times().begin(), g.grid.times().end());
  Json surv = Json::object(), haz = Json::object();
  for (std::size_t k = 0; k < g.treatments.size(); ++k) {
    surv[g.treatments[k]] = g.marginal_survival[k];
    haz[g.treatments[k]] = g.marginal_hazard[k];
  }
  j["marginal_survival"] = surv;
  j["marginal_hazard"] = haz;
  j["hazard_ratios"] = hr_curves_json(g.hazard_ratios);
  Json cr = Json::array();
  for (const auto& c : g.crossings) cr.push_back({{"b", c.b}, {"c", c.c}, {"intervals", interval_json(c.intervals)}});
  j["crossings"] = cr;
  if (!cfg.survival_sweeps.empty()) {
    Json sweeps = Json::array();
    for (const auto& s : cfg.survival_sweeps) {
      const auto r = survival_parameter_sweep(model, cfg.population, s.variable, s.values, cfg.grid, scheme);
      Json entries = Json::array();
      for (const auto& e : r.entries) entries.push_back({{"value", e.value}, {"curves", hr_curves_json(e.curves)}});
      sweeps.push_back({{"variable", std::string(to_string(s.variable))}, {"entries", entries}});
    }
    j["sweeps"] = sweeps;
  }

  out.csv.comments = csv_provenance(cfg, "survival", &scheme);
  out.csv.header = {"t"};
  for (const auto& k : g.treatments) out.csv.header.push_back("S_" + k);
  for (const auto& k : g.treatments) out.csv.header.push_back("h_" + k);
  for (const auto& c : g.hazard_ratios) {
    out.csv.header.push_back("HR_" + pair_name(c.a, c.b) + "_marginal");
    out.csv.header.push_back("HR_" + pair_name(c.a, c.b) + "_conditional");
  }
  for (std::size_t t = 0; t < g.grid.size(); ++t) {
    std::vector<double> row{g.grid[t]};
    for (const auto& s : g.marginal_survival) row.push_back(s[t]);
    for (const auto& h : g.marginal_hazard) row.push_back(h[t]);
    for (const auto& c : g.hazard_ratios) {
      row.push_back(c.marginal[t]);
      row.push_back(std::exp(c.conditional_log_hr));
    }
    out.csv.add_row(row);
  }
  return out;
}

Output run_contingency(const AnalysisConfig& cfg) {
  const ContingencyTable& table = cfg.require_table("contingency");
  const auto r = contingency_report(table, cfg.direction, cfg.zero_cells);

  Output out;
  Json& j = out.json = header(cfg, "contingency");
  j["reference"] = table.reference();
  j["direction"] = std::string(to_string(cfg.direction));
  j["continuity_correction"] = cfg.zero_cells == ZeroCellPolicy::haldane ? "haldane" : "none";
  j["arithmetic"] = "exact rational counts";
  Json subgroups = Json::array();
  for (const auto& s : table.subgroups()) subgroups.push_back({{"id", s.id}, {"prevalence", s.prevalence}});
  j["subgroups"] = subgroups;
  Json counts = Json::array();
  for (const auto& k : table.treatments())
    for (const auto& s : table.subgroups()) {
      const Cell& c = table.cell(k, s.id);
      counts.push_back({{"treatment", k}, {"subgroup", s.id}, {"events", c.events}, {"non_events", c.non_events}});
    }
  j["counts"] = counts;
  Json comps = Json::array();
  for (const auto& c : r.comparisons) {
    if (c.treatment == table.reference()) continue;
    Json sub = Json::object();
    for (std::size_t s = 0; s < table.subgroups().size(); ++s) sub[table.subgroups()[s].id] = c.subgroup_or[s];
    comps.push_back({{"treatment", c.treatment},
                     {"marginal_or", c.marginal_or},
                     {"subgroup_or", sub},
                     {"conditional_or", c.conditional_or}});
  }
  j["comparisons"] = comps;
  j["marginal_ranking"] = ranking_json(r.marginal_ranking);
  j["conditional_ranking"] = ranking_json(r.conditional_ranking);
  j["conflict"] = r.conflict;
  Json assignment = Json::object();
  for (const auto& a : r.policy.assignment) assignment[a.subgroup] = a.treatment;
  j["policy"] = {{"assignment", assignment},
                 {"pooled", {{"events", r.policy.pooled.events}, {"non_events", r.policy.pooled.non_events}}},
                 {"marginal_or", r.policy.marginal_or},
                 {"conditional_or", r.policy.conditional_or}};

  out.csv.comments = csv_provenance(cfg, "contingency", nullptr);
  out.csv.header = {"treatment", "marginal_or"};
  for (const auto& s : table.subgroups()) out.csv.header.push_back("or_" + s.id);
  out.csv.header.push_back("conditional_or");
  for (const auto& c : r.comparisons) {
    if (c.treatment == table.reference()) continue;
    std::vector<std::string> row{c.treatment, format_number(c.marginal_or)};
    for (double v : c.subgroup_or) row.push_back(format_number(v));
    row.push_back(format_number(c.conditional_or));
    out.csv.rows.push_back(std::move(row));
  }
  std::vector<std::string> policy_row{"policy", format_number(r.policy.marginal_or)};
  for (std::size_t s = 0; s < table.subgroups().size(); ++s) {
    const auto& k = r.policy.assignment[s].treatment;
    policy_row.push_back(format_number(subgroup_conditional_or(table, table.reference(), k, table.subgroups()[s].id,
                                                               cfg.zero_cells)));
  }
  policy_row.push_back(format_number(r.policy.conditional_or));
  out.csv.rows.push_back(std::move(policy_row));
  return out;
}

Output run_conflict(const AnalysisConfig& cfg) {
  if (!cfg.model && cfg.table) {
    // Table-only config: conflict between the two OR scales.
    Output out = run_contingency(cfg);
    out.json["analysis"] = "conflict";
    return out;
  }
  const OutcomeModel& model = cfg.require_model("conflict");
  const auto scheme = cfg.effective_scheme();
  const auto c = conflict_report(model, cfg.population, cfg.treatments, cfg.direction, scheme);

  Output out;
  Json& j = out.json = header(cfg, "conflict");
  j["scheme"] = scheme_json(scheme);
  j["direction"] = std::string(to_string(cfg.direction));
  const Json body = conflict_json(c);
  for (const auto& [k, v] : body.items()) j[k] = v;
  if (!cfg.shared_em.empty()) {
    const auto s = shared_em_scenario(model, cfg.population, cfg.shared_em, scheme);
    Json pairs = Json::array();
    for (const auto& p : s.pairs) {
      Json pj{{"a", p.a},
              {"b", p.b},
              {"shared", p.shared},
              {"constant_contrast", p.constant_contrast},
              {"crossing_capable", p.crossing_capable},
              {"crosses_on_support", p.crosses_on_support}};
      if (p.constant_contrast) pj["contrast"] = p.contrast;
      pairs.push_back(pj);
    }
    j["shared_em"] = {{"treatments", s.shared}, {"pairs", pairs}};
  }

  out.csv.comments = csv_provenance(cfg, "conflict", &scheme);
  out.csv.header = {"a", "b", "conditional", "marginal", "conditional_sign", "marginal_sign", "conflict", "near_tie"};
  for (const auto& p : c.pairs)
    out.csv.rows.push_back({p.a, p.b, format_number(p.conditional), format_number(p.marginal),
                            std::to_string(p.conditional_sign), std::to_string(p.marginal_sign),
                            p.conflict ? "1" : "0", p.near_tie ? "1" : "0"});
  return out;
}

Output run_oracle(const AnalysisConfig& cfg) {
  Output out;
  Json& j = out.json = header(cfg, "oracle");
  const auto scheme = cfg.effective_scheme();
  j["scheme"] = scheme_json(scheme);

  if (cfg.shape) {
    const WeibullPHModel model = cfg.require_survival_model("oracle");
    const auto mc = oracle_survival(model, cfg.population, cfg.treatments, cfg.grid, cfg.oracle);
    j["oracle"] = oracle_config_json(mc.config, 0);
    j["times"] = std::vector<double>(cfg.grid.times().begin(), cfg.grid.times().end());
    bool all = true;
    Json surv = Json::object();
    for (std::size_t k = 0; k < mc.treatments.size(); ++k) {
      const auto det = marginal_survival_curve(model, cfg.population, mc.treatments[k], cfg.grid, scheme);
      Json arr = Json::array();
      for (std::size_t t = 0; t < det.size(); ++t) {
        arr.push_back(estimate_json(mc.survival[k][t], det[t]));
        all = all && arr.back()["within_4se"].get<bool>();
      }
      surv[mc.treatments[k]] = arr;
    }
    j["marginal_survival"] = surv;
    Json hrs = Json::array();
    for (const auto& h : mc.hazard_ratios) {
      const auto det = marginal_hazard_ratio_curve(model, cfg.population, h.a, h.b, cfg.grid, scheme);
      Json arr = Json::array();
      for (std::size_t t = 0; t < det.size(); ++t) {
        arr.push_back(estimate_json(h.ratio[t], det[t]));
        all = all && arr.back()["within_4se"].get<bool>();
      }
      hrs.push_back({{"a", h.a}, {"b", h.b}, {"marginal_hr", arr}});
    }
    j["hazard_ratios"] = hrs;
    j["all_within_4se"] = all;

    out.csv.comments = csv_provenance(cfg, "oracle", &scheme);
    out.csv.comments.push_back("seed=" + std::to_string(mc.config.seed) + " draws=" + std::to_string(mc.config.draws));
    out.csv.header = {"t"};
    for (const auto& k : mc.treatments) {
      out.csv.header.push_back("S_" + k);
      out.csv.header.push_back("S_" + k + "_se");
    }
    for (const auto& h : mc.hazard_ratios) {
      out.csv.header.push_back("HR_" + pair_name(h.a, h.b));
      out.csv.header.push_back("HR_" + pair_name(h.a, h.b) + "_se");
    }
    for (std::size_t t = 0; t < cfg.grid.size(); ++t) {
      std::vector<double> row{cfg.grid[t]};
      for (const auto& s : mc.survival) {
        row.push_back(s[t].value);
        row.push_back(s[t].se);
      }
      for (const auto& h : mc.hazard_ratios) {
        row.push_back(h.ratio[t].value);
        row.push_back(h.ratio[t].se);
      }
      out.csv.add_row(row);
    }
    return out;
  }

  // Binary outcomes; a table-only config is checked through its saturated model.
  std::optional<SaturatedModel> saturated;
  if (!cfg.model && cfg.table) saturated = saturated_logit_model(*cfg.table, cfg.zero_cells);
  const OutcomeModel& model = saturated ? saturated->model : cfg.require_model("oracle");
  const Population& pop = saturated ? saturated->population : cfg.population;
  const IntegrationScheme used = saturated ? default_scheme(pop.covariates) : scheme;
  if (saturated) j["scheme"] = scheme_json(used);
  const auto treatments = saturated ? model.treatments() : cfg.treatments;
  const auto mc = oracle_estimands(model, pop, treatments, cfg.oracle);
  const auto det = estimand_report(model, pop, treatments, cfg.direction, used);
  j["oracle"] = oracle_config_json(mc.config, mc.groups);
  if (saturated) j["model"] = "saturated logit model of the contingency table";
  bool all = true;
  Json probs = Json::object();
  for (std::size_t k = 0; k < treatments.size(); ++k) {
    probs[treatments[k]] = estimate_json(mc.average_probability[k], det.average_probabilities[k].value());
    all = all && probs[treatments[k]]["within_4se"].get<bool>();
  }
  j["average_probability"] = probs;
  Json pairs = Json::array();
  for (const auto& p : mc.pairs) {
    Json pj{{"a", p.a},
            {"b", p.b},
            {"conditional", estimate_json(p.conditional, det.conditional(p.a, p.b))},
            {"marginal", estimate_json(p.marginal, det.marginal(p.a, p.b))}};
    all = all && pj["conditional"]["within_4se"].get<bool>() && pj["marginal"]["within_4se"].get<bool>();
    pairs.push_back(pj);
  }
  j["pairs"] = pairs;
  j["all_within_4se"] = all;

  out.csv.comments = csv_provenance(cfg, "oracle", &used);
  out.csv.comments.push_back("seed=" + std::to_string(mc.config.seed) + " draws=" + std::to_string(mc.config.draws));
  out.csv.header = {"quantity", "a", "b", "value", "se", "deterministic"};
  for (std::size_t k = 0; k < treatments.size(); ++k)
    out.csv.rows.push_back({"average_probability", treatments[k], "", format_number(mc.average_probability[k].value),
                            format_number(mc.average_probability[k].se),
                            format_number(det.average_probabilities[k].value())});
  for (const auto& p : mc.pairs) {
    out.csv.rows.push_back({"conditional", p.a, p.b, format_number(p.conditional.value), format_number(p.conditional.se),
                            format_number(det.conditional(p.a, p.b))});
    out.csv.rows.push_back({"marginal", p.a, p.b, format_number(p.marginal.value), format_number(p.marginal.se),
                            format_number(det.marginal(p.a, p.b))});
  }
  return out;
}

Output run_analysis(const std::string& verb, const AnalysisConfig& cfg, const std::optional<std::string>& figure_id) {
  if (verb == "report") return run_report(cfg);
  if (verb == "sweep") return run_sweep(cfg);
  if (verb == "survival") return run_survival(cfg);
  if (verb == "contingency") return run_contingency(cfg);
  if (verb == "conflict") return run_conflict(cfg);
  if (verb == "oracle") return run_oracle(cfg);
  if (verb == "figure") {
    const auto id = figure_id ? figure_id : cfg.figure.id;
    if (!id) throw ValidationError("figure id required (fig1..fig7)", "figure.id");
    return run_figure(cfg, *id);
  }
  throw ValidationError("unknown analysis '" + verb + "'", "analysis");
}

}  // namespace estimand::cli
