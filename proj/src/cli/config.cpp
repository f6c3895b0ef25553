#include "estimand/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "estimand/error.hpp"

namespace estimand::cli {

namespace fs = std::filesystem;

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void only_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ValidationError("expected an object", path);
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ValidationError("unknown field '" + key + "'", join(path, key));
  }
}

double number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw ValidationError("expected a number", path);
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError("expected a finite number", path);
  return d;
}

double number_or(const Json& obj, const char* key, double fallback, const std::string& path) {
  return obj.contains(key) ? number(obj.at(key), join(path, key)) : fallback;
}

std::uint64_t unsigned_int(const Json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ValidationError("expected a non-negative integer", path);
  return v.get<std::uint64_t>();
}

std::string string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw ValidationError("expected a string", path);
  return v.get<std::string>();
}

bool boolean(const Json& v, const std::string& path) {
  if (!v.is_boolean()) throw ValidationError("expected true or false", path);
  return v.get<bool>();
}

std::vector<double> numbers(const Json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError("expected an array of numbers", path);
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::string> strings(const Json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError("expected an array of strings", path);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(string(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

/// Either an explicit array or {from, to, points}.
std::vector<double> value_grid(const Json& v, const std::string& path) {
  if (v.is_array()) return numbers(v, path);
  only_keys(v, path, {"from", "to", "points"});
  const double from = number(v.at("from"), path + ".from"), to = number(v.at("to"), path + ".to");
  const auto n = unsigned_int(v.at("points"), path + ".points");
  if (n < 2 || !(to > from)) throw ValidationError("grid needs points >= 2 and to > from", path);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = from + (to - from) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

void require_known(const std::vector<TreatmentId>& treatments, const TreatmentId& id, const std::string& path) {
  if (std::find(treatments.begin(), treatments.end(), id) == treatments.end())
    throw ValidationError("treatment '" + id + "' is not defined in model.treatments", path);
}

Marginal parse_marginal(const Json& c, const std::string& path) {
  const std::string type = string(c.at("type"), path + ".type");
  if (type == "uniform") {
    only_keys(c, path, {"type", "lo", "hi"});
    Uniform u{number_or(c, "lo", -1.0, path), number_or(c, "hi", 1.0, path)};
    if (!(u.lo < u.hi)) throw ValidationError("uniform needs lo < hi", path);
    return u;
  }
  if (type == "bernoulli") {
    only_keys(c, path, {"type", "prevalence"});
    const double p = number(c.at("prevalence"), path + ".prevalence");
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("prevalence outside [0, 1]", path + ".prevalence");
    return Bernoulli{p};
  }
  if (type == "points") {
    only_keys(c, path, {"type", "values", "weights"});
    FinitePoints f{numbers(c.at("values"), path + ".values"), numbers(c.at("weights"), path + ".weights")};
    if (f.values.empty() || f.values.size() != f.weights.size())
      throw ValidationError("values and weights must be non-empty and the same length", path);
    double total = 0.0;
    for (double w : f.weights) {
      if (w < 0.0 || w > 1.0) throw ValidationError("weight outside [0, 1]", path + ".weights");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("weights must sum to 1", path + ".weights");
    return f;
  }
  throw ValidationError("unknown covariate type '" + type + "'", path + ".type");
}

CovariateDistribution parse_covariates(const Json& pop) {
  if (pop.contains("empirical")) {
    if (pop.contains("covariates"))
      throw ValidationError("give either covariates or empirical rows, not both", "population");
    const Json& rows = pop.at("empirical");
    if (!rows.is_array() || rows.empty()) throw ValidationError("expected a non-empty array of rows", "population.empirical");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < rows.size(); ++i)
      out.push_back(numbers(rows[i], "population.empirical[" + std::to_string(i) + "]"));
    for (const auto& r : out)
      if (r.size() != out.front().size()) throw ValidationError("rows differ in length", "population.empirical");
    return CovariateDistribution::empirical(std::move(out));
  }
  if (!pop.contains("covariates")) return CovariateDistribution{};
  const Json& cs = pop.at("covariates");
  if (!cs.is_array()) throw ValidationError("expected an array", "population.covariates");
  std::vector<Marginal> marginals;
  for (std::size_t i = 0; i < cs.size(); ++i)
    marginals.push_back(parse_marginal(cs[i], "population.covariates[" + std::to_string(i) + "]"));
  return CovariateDistribution::product(std::move(marginals));
}

void parse_model(const Json& m, AnalysisConfig& cfg) {
  only_keys(m, "model", {"link", "treatments", "intercept", "prognostic", "interactions", "treatment_effects", "shape"});
  if (!m.contains("treatments")) throw ValidationError("missing", "model.treatments");
  const auto treatments = strings(m.at("treatments"), "model.treatments");
  if (treatments.empty()) throw ValidationError("at least one treatment is required", "model.treatments");
  if (std::set<std::string>(treatments.begin(), treatments.end()).size() != treatments.size())
    throw ValidationError("duplicate treatment", "model.treatments");

  if (m.contains("shape")) {
    cfg.shape = number(m.at("shape"), "model.shape");
    if (!(*cfg.shape > 0.0)) throw ValidationError("shape must be positive", "model.shape");
  }
  std::string link_name = cfg.shape ? "log" : "";
  if (m.contains("link")) link_name = string(m.at("link"), "model.link");
  if (link_name.empty()) throw ValidationError("missing", "model.link");
  Link link = [&] {
    try {
      return Link::parse(link_name);
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), "model.link");
    }
  }();

  const auto prognostic = m.contains("prognostic") ? numbers(m.at("prognostic"), "model.prognostic") : std::vector<double>{};
  std::vector<Arm> arms;
  for (const auto& k : treatments) arms.push_back({k, {}, 0.0});
  if (m.contains("interactions")) {
    const Json& in = m.at("interactions");
    if (!in.is_object()) throw ValidationError("expected an object", "model.interactions");
    for (const auto& [k, v] : in.items()) {
      require_known(treatments, k, "model.interactions");
      auto beta = numbers(v, "model.interactions." + k);
      if (beta.size() != prognostic.size())
        throw ValidationError("interaction vector for '" + k + "' has dimension " + std::to_string(beta.size()) +
                                  ", prognostic has " + std::to_string(prognostic.size()),
                              "model.interactions");
      arms[static_cast<std::size_t>(std::find(treatments.begin(), treatments.end(), k) - treatments.begin())]
          .interactions = std::move(beta);
    }
  }
  if (m.contains("treatment_effects")) {
    const Json& te = m.at("treatment_effects");
    if (!te.is_object()) throw ValidationError("expected an object", "model.treatment_effects");
    for (const auto& [k, v] : te.items()) {
      require_known(treatments, k, "model.treatment_effects");
      arms[static_cast<std::size_t>(std::find(treatments.begin(), treatments.end(), k) - treatments.begin())].effect =
          number(v, "model.treatment_effects." + k);
    }
  }
  const double intercept = number_or(m, "intercept", 0.0, "model");
  cfg.model.emplace(link, intercept, prognostic, std::move(arms));
  cfg.treatments = treatments;
}

IntegrationScheme parse_scheme(const Json& s) {
  only_keys(s, "scheme", {"kind", "nodes", "points", "seed", "tolerance"});
  IntegrationScheme out;
  if (s.contains("kind")) out.kind = parse_scheme_kind(string(s.at("kind"), "scheme.kind"));
  if (s.contains("nodes")) out.nodes = unsigned_int(s.at("nodes"), "scheme.nodes");
  if (s.contains("points")) out.points = unsigned_int(s.at("points"), "scheme.points");
  if (s.contains("seed")) out.scramble_seed = unsigned_int(s.at("seed"), "scheme.seed");
  if (s.contains("tolerance")) out.tolerance = number(s.at("tolerance"), "scheme.tolerance");
  out.validate();
  return out;
}

TimeGrid parse_time_grid(const Json& g) {
  if (g.is_array()) return TimeGrid(numbers(g, "survival.grid"));
  only_keys(g, "survival.grid", {"from", "to", "points", "spacing"});
  const double from = number_or(g, "from", 0.01, "survival.grid"), to = number_or(g, "to", 3.0, "survival.grid");
  const auto n = g.contains("points") ? unsigned_int(g.at("points"), "survival.grid.points") : 200;
  const std::string spacing = g.contains("spacing") ? string(g.at("spacing"), "survival.grid.spacing") : "log";
  if (spacing == "log") return TimeGrid::log_spaced(from, to, n);
  if (spacing == "linear") return TimeGrid::linear(from, to, n);
  throw ValidationError("spacing must be log or linear", "survival.grid.spacing");
}

SweepVariable parse_sweep_variable(const Json& v, const std::string& path) {
  const auto name = string(v, path);
  if (name == "mu" || name == "intercept") return SweepVariable::intercept;
  if (name == "nu" || name == "shape") return SweepVariable::shape;
  throw ValidationError("sweep variable must be mu or nu", path);
}

}  // namespace

IntegrationScheme AnalysisConfig::effective_scheme() const {
  return scheme ? *scheme : default_scheme(population.covariates);
}

const OutcomeModel& AnalysisConfig::require_model(const char* why) const {
  if (!model) throw ValidationError(std::string(why) + " needs a model section", "model");
  return *model;
}

WeibullPHModel AnalysisConfig::require_survival_model(const char* why) const {
  if (!model || !shape) throw ValidationError(std::string(why) + " needs a model with a Weibull shape", "model.shape");
  return WeibullPHModel(*shape, *model);
}

const ContingencyTable& AnalysisConfig::require_table(const char* why) const {
  if (!table) throw ValidationError(std::string(why) + " needs a contingency table", "contingency.table");
  return *table;
}

AnalysisConfig parse_config(const Json& doc, const std::string& base_dir, std::string hash) {
  only_keys(doc, "", {"analysis", "model", "population", "scheme", "direction", "sweep", "survival", "contingency",
                      "oracle", "shared_em", "net_benefit", "figure", "description"});
  AnalysisConfig cfg;
  cfg.hash = std::move(hash);
  if (doc.contains("analysis")) {
    cfg.analysis = string(doc.at("analysis"), "analysis");
    static const std::set<std::string> known{"report", "sweep", "survival", "contingency", "conflict", "oracle", "figure"};
    if (!known.count(*cfg.analysis)) throw ValidationError("unknown analysis '" + *cfg.analysis + "'", "analysis");
  }
  if (doc.contains("model")) parse_model(doc.at("model"), cfg);

  if (doc.contains("population")) {
    const Json& p = doc.at("population");
    only_keys(p, "population", {"intercept", "covariates", "empirical"});
    cfg.population.covariates = parse_covariates(p);
    cfg.population.intercept = number_or(p, "intercept", cfg.model ? cfg.model->intercept() : 0.0, "population");
  } else if (cfg.model) {
    cfg.population.intercept = cfg.model->intercept();
  }
  if (cfg.model && cfg.model->dimension() != cfg.population.covariates.dimension())
    throw ValidationError("population has " + std::to_string(cfg.population.covariates.dimension()) +
                              " covariates, model has " + std::to_string(cfg.model->dimension()),
                          "population.covariates");

  if (doc.contains("scheme")) cfg.scheme = parse_scheme(doc.at("scheme"));
  if (doc.contains("direction")) cfg.direction = parse_direction(string(doc.at("direction"), "direction"));

  if (doc.contains("sweep")) {
    const Json& s = doc.at("sweep");
    only_keys(s, "sweep", {"grid", "comparators"});
    if (s.contains("grid")) cfg.sweep.grid = value_grid(s.at("grid"), "sweep.grid");
    if (s.contains("comparators")) {
      cfg.sweep.comparators = strings(s.at("comparators"), "sweep.comparators");
      for (const auto& k : cfg.sweep.comparators) require_known(cfg.treatments, k, "sweep.comparators");
    }
  }

  if (doc.contains("survival")) {
    const Json& s = doc.at("survival");
    only_keys(s, "survival", {"grid", "sweeps"});
    if (s.contains("grid")) cfg.grid = parse_time_grid(s.at("grid"));
    if (s.contains("sweeps")) {
      const Json& sw = s.at("sweeps");
      if (!sw.is_array()) throw ValidationError("expected an array", "survival.sweeps");
      for (std::size_t i = 0; i < sw.size(); ++i) {
        const std::string path = "survival.sweeps[" + std::to_string(i) + "]";
        only_keys(sw[i], path, {"variable", "values"});
        cfg.survival_sweeps.push_back(
            {parse_sweep_variable(sw[i].at("variable"), path + ".variable"), numbers(sw[i].at("values"), path + ".values")});
      }
    }
  }

  if (doc.contains("contingency")) {
    const Json& c = doc.at("contingency");
    only_keys(c, "contingency", {"table", "prevalence", "continuity_correction"});
    const fs::path base(base_dir);
    const auto table = base / string(c.at("table"), "contingency.table");
    const auto prev = base / string(c.at("prevalence"), "contingency.prevalence");
    cfg.table = ContingencyTable::from_csv_files(table.string(), prev.string());
    if (c.contains("continuity_correction") && boolean(c.at("continuity_correction"), "contingency.continuity_correction"))
      cfg.zero_cells = ZeroCellPolicy::haldane;
    if (cfg.treatments.empty()) cfg.treatments = cfg.table->treatments();
  }

  if (doc.contains("oracle")) {
    const Json& o = doc.at("oracle");
    only_keys(o, "oracle", {"draws", "seed", "antithetic", "bernoulli_outcomes"});
    if (o.contains("draws")) cfg.oracle.draws = unsigned_int(o.at("draws"), "oracle.draws");
    if (o.contains("seed")) cfg.oracle.seed = unsigned_int(o.at("seed"), "oracle.seed");
    if (o.contains("antithetic")) cfg.oracle.antithetic = boolean(o.at("antithetic"), "oracle.antithetic");
    if (o.contains("bernoulli_outcomes"))
      cfg.oracle.bernoulli_outcomes = boolean(o.at("bernoulli_outcomes"), "oracle.bernoulli_outcomes");
    try {
      cfg.oracle.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), "oracle.draws");
    }
  }

  if (doc.contains("shared_em")) {
    cfg.shared_em = strings(doc.at("shared_em"), "shared_em");
    for (const auto& k : cfg.shared_em) require_known(cfg.treatments, k, "shared_em");
  }

  if (doc.contains("net_benefit")) {
    const Json& nb = doc.at("net_benefit");
    only_keys(nb, "net_benefit", {"polynomials", "mode"});
    NetBenefitSpec spec;
    const Json& polys = nb.at("polynomials");
    if (!polys.is_object()) throw ValidationError("expected an object", "net_benefit.polynomials");
    for (const auto& [k, v] : polys.items()) {
      require_known(cfg.treatments, k, "net_benefit.polynomials");
      spec.value_polynomials[k] = numbers(v, "net_benefit.polynomials." + k);
    }
    if (nb.contains("mode")) {
      const auto mode = string(nb.at("mode"), "net_benefit.mode");
      if (mode == "individual") spec.mode = AveragingMode::individual_level;
      else if (mode == "plug_in") spec.mode = AveragingMode::plug_in_average;
      else throw ValidationError("mode must be individual or plug_in", "net_benefit.mode");
    }
    spec.validate();
    cfg.net_benefit = std::move(spec);
  }

  if (doc.contains("figure")) {
    const Json& f = doc.at("figure");
    only_keys(f, "figure", {"id", "intercepts", "points"});
    if (f.contains("id")) cfg.figure.id = string(f.at("id"), "figure.id");
    if (f.contains("intercepts")) cfg.figure.intercepts = numbers(f.at("intercepts"), "figure.intercepts");
    if (f.contains("points")) {
      cfg.figure.points = unsigned_int(f.at("points"), "figure.points");
      if (cfg.figure.points < 2) throw ValidationError("need at least two points", "figure.points");
    }
  }
  return cfg;
}

namespace {

std::string read_file(const fs::path& p, const std::string& what) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + what + " '" + p.string() + "'", "config");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

AnalysisConfig load_config(const std::string& path, const std::optional<std::string>& prevalence_path) {
  const fs::path p(path);
  const std::string bytes = read_file(p, "config");
  if (p.extension() == ".csv") {
    fs::path prev = prevalence_path ? fs::path(*prevalence_path)
                                    : p.parent_path() / (p.stem().string() + "_prevalence.csv");
    const std::string prev_bytes = read_file(prev, "prevalence table");
    std::istringstream counts(bytes), prevs(prev_bytes);
    AnalysisConfig cfg;
    cfg.source = path;
    cfg.hash = fnv1a64_hex(bytes + prev_bytes);
    cfg.analysis = "contingency";
    cfg.table = ContingencyTable::from_csv(counts, prevs);
    cfg.treatments = cfg.table->treatments();
    return cfg;
  }
  Json doc;
  try {
    doc = Json::parse(bytes);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what(), "config");
  }
  auto cfg = parse_config(doc, p.parent_path().string(), fnv1a64_hex(bytes));
  cfg.source = path;
  return cfg;
}

}  // namespace estimand::cli
