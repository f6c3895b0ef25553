#include "estimand/contingency.hpp"

#include <boost/rational.hpp>
#include <cmath>
#include <fstream>
#include <sstream>

#include "estimand/error.hpp"

namespace estimand {

namespace {

using Rational = boost::rational<std::int64_t>;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r\"");
    const auto e = field.find_last_not_of(" \t\r\"");
    fields.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::int64_t parse_count(const std::string& s, const std::string& path) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw ValidationError("'" + s + "' is not an integer count", path);
  }
  if (used != s.size() || v < 0) throw ValidationError("'" + s + "' is not a non-negative integer count", path);
  return v;
}

bool has_zero(const Cell& c) { return c.events == 0 || c.non_events == 0; }

/// Odds of a cell as an exact rational, in half-units when corrected.
Rational odds(const Cell& c, bool corrected) {
  return corrected ? Rational(2 * c.events + 1, 2 * c.non_events + 1) : Rational(c.events, c.non_events);
}

/// Exact odds ratio num/den. A zero anywhere in the 2x2 is an error, or with
/// the Haldane policy adds 0.5 to all four counts.
Rational odds_ratio(const Cell& num, const Cell& den, ZeroCellPolicy policy, const std::string& where) {
  const bool zero = has_zero(num) || has_zero(den);
  if (zero && policy == ZeroCellPolicy::reject)
    throw NumericalError("zero cell in " + where + " (events/non_events " + std::to_string(num.events) + "/" +
                         std::to_string(num.non_events) + " vs " + std::to_string(den.events) + "/" +
                         std::to_string(den.non_events) + ")");
  return odds(num, zero) / odds(den, zero);
}

double to_real(const Rational& r) { return boost::rational_cast<double>(r); }

std::string cell_name(const TreatmentId& k, const std::string& s) { return "cell (" + k + ", " + s + ")"; }

}  // namespace

ContingencyTable::ContingencyTable(std::vector<TreatmentId> treatments, std::vector<Subgroup> subgroups,
                                   std::vector<std::vector<Cell>> cells)
    : treatments_(std::move(treatments)), subgroups_(std::move(subgroups)), cells_(std::move(cells)) {
  if (treatments_.empty()) throw ValidationError("table has no treatments", "contingency.table");
  if (subgroups_.empty()) throw ValidationError("table has no subgroups", "contingency.table");
  if (cells_.size() != treatments_.size()) throw ValidationError("cell rows do not match treatments", "contingency.table");
  double total = 0.0;
  for (const auto& s : subgroups_) {
    if (!(s.prevalence >= 0.0 && s.prevalence <= 1.0))
      throw ValidationError("prevalence of subgroup '" + s.id + "' outside [0, 1]", "contingency.prevalence");
    total += s.prevalence;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("subgroup prevalences must sum to 1", "contingency.prevalence");
  for (std::size_t k = 0; k < treatments_.size(); ++k) {
    if (cells_[k].size() != subgroups_.size())
      throw ValidationError("missing cells for treatment '" + treatments_[k] + "'", "contingency.table");
    for (std::size_t s = 0; s < subgroups_.size(); ++s) {
      const Cell& c = cells_[k][s];
      if (c.events < 0 || c.non_events < 0 || c.events + c.non_events == 0)
        throw ValidationError(cell_name(treatments_[k], subgroups_[s].id) + " is empty", "contingency.table");
    }
  }
}

ContingencyTable ContingencyTable::from_csv(std::istream& counts, std::istream& prevalences) {
  std::string line;
  if (!std::getline(counts, line)) throw ValidationError("counts CSV is empty", "contingency.table");
  const auto header = split_csv_line(line);
  if (header != std::vector<std::string>{"treatment", "subgroup", "events", "non_events"})
    throw ValidationError("counts CSV header must be treatment,subgroup,events,non_events", "contingency.table");

  struct Row {
    TreatmentId k;
    std::string s;
    Cell c;
  };
  std::vector<Row> rows;
  std::vector<TreatmentId> treatments;
  std::vector<std::string> subgroup_ids;
  std::size_t line_no = 1;
  while (std::getline(counts, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    const std::string path = "contingency.table line " + std::to_string(line_no);
    if (f.size() != 4) throw ValidationError("expected 4 fields", path);
    rows.push_back({f[0], f[1], {parse_count(f[2], path), parse_count(f[3], path)}});
    if (std::find(treatments.begin(), treatments.end(), f[0]) == treatments.end()) treatments.push_back(f[0]);
    if (std::find(subgroup_ids.begin(), subgroup_ids.end(), f[1]) == subgroup_ids.end()) subgroup_ids.push_back(f[1]);
  }

  if (!std::getline(prevalences, line)) throw ValidationError("prevalence CSV is empty", "contingency.prevalence");
  if (split_csv_line(line) != std::vector<std::string>{"subgroup", "prevalence"})
    throw ValidationError("prevalence CSV header must be subgroup,prevalence", "contingency.prevalence");
  std::vector<Subgroup> subgroups(subgroup_ids.size());
  std::vector<bool> seen(subgroup_ids.size(), false);
  for (std::size_t i = 0; i < subgroup_ids.size(); ++i) subgroups[i].id = subgroup_ids[i];
  while (std::getline(prevalences, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 2) throw ValidationError("expected 2 fields", "contingency.prevalence");
    const auto it = std::find(subgroup_ids.begin(), subgroup_ids.end(), f[0]);
    if (it == subgroup_ids.end())
      throw ValidationError("prevalence given for unknown subgroup '" + f[0] + "'", "contingency.prevalence");
    const auto i = static_cast<std::size_t>(it - subgroup_ids.begin());
    try {
      subgroups[i].prevalence = std::stod(f[1]);
    } catch (const std::exception&) {
      throw ValidationError("bad prevalence '" + f[1] + "'", "contingency.prevalence");
    }
    seen[i] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw ValidationError("no prevalence for subgroup '" + subgroup_ids[i] + "'", "contingency.prevalence");

  std::vector<std::vector<Cell>> cells(treatments.size(), std::vector<Cell>(subgroup_ids.size(), Cell{-1, -1}));
  for (const auto& r : rows) {
    const auto k = static_cast<std::size_t>(std::find(treatments.begin(), treatments.end(), r.k) - treatments.begin());
    const auto s = static_cast<std::size_t>(std::find(subgroup_ids.begin(), subgroup_ids.end(), r.s) - subgroup_ids.begin());
    if (cells[k][s].events >= 0) throw ValidationError("duplicate " + cell_name(r.k, r.s), "contingency.table");
    cells[k][s] = r.c;
  }
  for (std::size_t k = 0; k < treatments.size(); ++k)
    for (std::size_t s = 0; s < subgroup_ids.size(); ++s)
      if (cells[k][s].events < 0)
        throw ValidationError("missing " + cell_name(treatments[k], subgroup_ids[s]), "contingency.table");
  return ContingencyTable(std::move(treatments), std::move(subgroups), std::move(cells));
}

ContingencyTable ContingencyTable::from_csv_files(const std::string& counts_path, const std::string& prevalence_path) {
  std::ifstream counts(counts_path), prev(prevalence_path);
  if (!counts) throw ValidationError("cannot open '" + counts_path + "'", "contingency.table");
  if (!prev) throw ValidationError("cannot open '" + prevalence_path + "'", "contingency.prevalence");
  return from_csv(counts, prev);
}

std::size_t ContingencyTable::treatment_index(const TreatmentId& k) const {
  for (std::size_t i = 0; i < treatments_.size(); ++i)
    if (treatments_[i] == k) return i;
  throw ValidationError("unknown treatment '" + k + "'", "treatments");
}

std::size_t ContingencyTable::subgroup_index(const std::string& s) const {
  for (std::size_t i = 0; i < subgroups_.size(); ++i)
    if (subgroups_[i].id == s) return i;
  throw ValidationError("unknown subgroup '" + s + "'", "subgroup");
}

const Cell& ContingencyTable::cell(const TreatmentId& k, const std::string& subgroup) const {
  return cells_[treatment_index(k)][subgroup_index(subgroup)];
}

Cell ContingencyTable::pooled(const TreatmentId& k) const {
  Cell total;
  for (const Cell& c : cells_[treatment_index(k)]) {
    total.events += c.events;
    total.non_events += c.non_events;
  }
  return total;
}

ContingencyTable ContingencyTable::restricted_to(const std::vector<TreatmentId>& keep) const {
  std::vector<std::vector<Cell>> cells;
  for (const auto& k : keep) cells.push_back(cells_[treatment_index(k)]);
  return ContingencyTable(keep, subgroups_, std::move(cells));
}

double marginal_or(const ContingencyTable& table, const TreatmentId& a, const TreatmentId& b, ZeroCellPolicy policy) {
  if (table.treatment_index(a) == table.treatment_index(b)) return 1.0;
  return to_real(odds_ratio(table.pooled(b), table.pooled(a), policy, "pooled " + b + " vs " + a));
}

double subgroup_conditional_or(const ContingencyTable& table, const TreatmentId& a, const TreatmentId& b,
                               const std::string& subgroup, ZeroCellPolicy policy) {
  if (table.treatment_index(a) == table.treatment_index(b)) {
    (void)table.subgroup_index(subgroup);
    return 1.0;
  }
  return to_real(odds_ratio(table.cell(b, subgroup), table.cell(a, subgroup), policy,
                            cell_name(b, subgroup) + " vs " + cell_name(a, subgroup)));
}

double population_conditional_or(const ContingencyTable& table, const TreatmentId& a, const TreatmentId& b,
                                 ZeroCellPolicy policy) {
  double log_or = 0.0;
  for (const auto& s : table.subgroups())
    log_or += s.prevalence * std::log(subgroup_conditional_or(table, a, b, s.id, policy));
  return std::exp(log_or);
}

const TreatmentId& StratifiedPolicy::treatment_for(const std::string& subgroup) const {
  for (const auto& a : assignment)
    if (a.subgroup == subgroup) return a.treatment;
  throw ValidationError("subgroup '" + subgroup + "' not in policy");
}

StratifiedPolicy optimal_stratified_policy(const ContingencyTable& table, Direction direction, ZeroCellPolicy policy) {
  StratifiedPolicy out;
  const TreatmentId& ref = table.reference();
  double log_or = 0.0;
  for (const auto& s : table.subgroups()) {
    const TreatmentId* best = nullptr;
    Rational best_odds;
    for (const auto& k : table.treatments()) {
      const Cell& c = table.cell(k, s.id);
      if (has_zero(c) && policy == ZeroCellPolicy::reject) throw NumericalError("zero " + cell_name(k, s.id));
      const Rational o = odds(c, has_zero(c));
      const bool better = direction == Direction::lower_is_better ? o < best_odds : o > best_odds;
      if (best == nullptr || better) {
        best = &k;
        best_odds = o;
      }
    }
    out.assignment.push_back({s.id, *best});
    const Cell& c = table.cell(*best, s.id);
    out.pooled.events += c.events;
    out.pooled.non_events += c.non_events;
    log_or += s.prevalence * std::log(to_real(odds_ratio(c, table.cell(ref, s.id), policy, cell_name(*best, s.id))));
  }
  out.marginal_or = to_real(odds_ratio(out.pooled, table.pooled(ref), policy, "pooled policy vs " + ref));
  out.conditional_or = std::exp(log_or);
  return out;
}

SaturatedModel saturated_logit_model(const ContingencyTable& table, ZeroCellPolicy policy) {
  if (table.subgroups().size() != 2)
    throw ValidationError("saturated model needs exactly two subgroups", "contingency.table");
  const auto& s0 = table.subgroups()[0].id;
  const auto& s1 = table.subgroups()[1].id;
  const TreatmentId& ref = table.reference();
  auto log_odds = [&](const TreatmentId& k, const std::string& s) {
    const Cell& c = table.cell(k, s);
    if (has_zero(c) && policy == ZeroCellPolicy::reject) throw NumericalError("zero " + cell_name(k, s));
    return std::log(to_real(odds(c, has_zero(c))));
  };
  const double mu = log_odds(ref, s0);
  const double beta1 = log_odds(ref, s1) - mu;
  std::vector<Arm> arms;
  for (const auto& k : table.treatments()) {
    if (k == ref) {
      arms.push_back({k, {0.0}, 0.0});
      continue;
    }
    const double g0 = log_odds(k, s0) - mu;
    const double g1 = log_odds(k, s1) - mu - beta1;
    arms.push_back({k, {g1 - g0}, g0});
  }
  OutcomeModel model(Link(LinkKind::logit), mu, {beta1}, std::move(arms));
  Population pop{mu, CovariateDistribution::product({Bernoulli{table.subgroups()[1].prevalence}})};
  return {std::move(model), std::move(pop)};
}

ContingencyReport contingency_report(const ContingencyTable& table, Direction direction, ZeroCellPolicy policy) {
  ContingencyReport report;
  const TreatmentId& ref = table.reference();
  std::vector<std::pair<TreatmentId, double>> marg, cond;
  for (const auto& k : table.treatments()) {
    TableComparison c;
    c.treatment = k;
    c.marginal_or = marginal_or(table, ref, k, policy);
    for (const auto& s : table.subgroups()) c.subgroup_or.push_back(subgroup_conditional_or(table, ref, k, s.id, policy));
    c.conditional_or = population_conditional_or(table, ref, k, policy);
    marg.emplace_back(k, std::log(c.marginal_or));
    cond.emplace_back(k, std::log(c.conditional_or));
    report.comparisons.push_back(std::move(c));
  }
  // Pairwise sign disagreement between the two log OR scales.
  for (std::size_t i = 0; i < marg.size(); ++i)
    for (std::size_t j = i + 1; j < marg.size(); ++j) {
      const double dm = marg[j].second - marg[i].second, dc = cond[j].second - cond[i].second;
      if (std::abs(dm) > kTieTolerance && std::abs(dc) > kTieTolerance && (dm > 0) != (dc > 0)) report.conflict = true;
    }
  report.marginal_ranking = rank_treatments(std::move(marg), direction);
  report.conditional_ranking = rank_treatments(std::move(cond), direction);
  report.policy = optimal_stratified_policy(table, direction, policy);
  return report;
}

}  // namespace estimand
