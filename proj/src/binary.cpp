#include "estimand/binary.hpp"

#include <algorithm>
#include <cmath>

#include "estimand/error.hpp"

namespace estimand {

namespace {

void require_dimension(const OutcomeModel& model, std::span<const double> x) {
  if (x.size() != model.dimension())
    throw ValidationError("covariate vector has dimension " + std::to_string(x.size()) + ", model expects " +
                          std::to_string(model.dimension()));
}

}  // namespace

std::string_view to_string(Direction d) noexcept {
  return d == Direction::lower_is_better ? "lower_is_better" : "higher_is_better";
}

Direction parse_direction(std::string_view name) {
  if (name == "lower" || name == "lower_is_better") return Direction::lower_is_better;
  if (name == "higher" || name == "higher_is_better") return Direction::higher_is_better;
  throw ValidationError("direction must be 'lower' or 'higher'", "direction");
}

double individual_conditional_effect(const OutcomeModel& model, const TreatmentId& a, const TreatmentId& b,
                                     std::span<const double> x) {
  const std::size_t ia = model.index_of(a), ib = model.index_of(b);
  require_dimension(model, x);
  return model.contrast(ia, ib, x);
}

double population_conditional_effect(const OutcomeModel& model, const Population& pop, const TreatmentId& a,
                                     const TreatmentId& b, const IntegrationScheme& scheme) {
  const std::size_t ia = model.index_of(a), ib = model.index_of(b);
  require_compatible(model, pop);
  if (ia == ib) return 0.0;
  return expect(pop.covariates, [&](std::span<const double> x) { return model.contrast(ia, ib, x); }, scheme);
}

Probability individual_probability(const OutcomeModel& model, double pop_intercept, const TreatmentId& k,
                                   std::span<const double> x) {
  const std::size_t ik = model.index_of(k);
  require_dimension(model, x);
  return model.link().inverse(model.eta_with_intercept(ik, x, pop_intercept));
}

Probability average_probability(const OutcomeModel& model, const Population& pop, const TreatmentId& k,
                                const IntegrationScheme& scheme) {
  const std::size_t ik = model.index_of(k);
  require_compatible(model, pop);
  const NodeSet nodes(pop.covariates, scheme);
  const auto pq = nodes.expect_grid(
      [&](std::span<const double> x, std::span<double> out) {
        const Probability p = model.link().inverse(model.eta_with_intercept(ik, x, pop.intercept));
        out[0] = p.value();
        out[1] = p.complement();
      },
      2);
  return Probability::from_pair(pq[0], pq[1]);
}

double population_marginal_effect(const OutcomeModel& model, const Population& pop, const TreatmentId& a,
                                  const TreatmentId& b, const IntegrationScheme& scheme) {
  if (model.index_of(a) == model.index_of(b)) return 0.0;
  const Link& g = model.link();
  return g.forward(average_probability(model, pop, b, scheme)) - g.forward(average_probability(model, pop, a, scheme));
}

std::vector<RankedTreatment> rank_treatments(std::vector<std::pair<TreatmentId, double>> values,
                                             Direction direction) {
  const bool lower = direction == Direction::lower_is_better;
  std::sort(values.begin(), values.end(), [&](const auto& l, const auto& r) {
    if (l.second != r.second) return lower ? l.second < r.second : l.second > r.second;
    return l.first < r.first;
  });
  // Group near-equal neighbours, then order each group by id.
  std::vector<RankedTreatment> out;
  std::size_t start = 0;
  int rank = 1;
  while (start < values.size()) {
    std::size_t end = start + 1;
    while (end < values.size() && std::abs(values[end].second - values[end - 1].second) < kTieTolerance) ++end;
    std::sort(values.begin() + static_cast<std::ptrdiff_t>(start), values.begin() + static_cast<std::ptrdiff_t>(end),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    for (std::size_t i = start; i < end; ++i) out.push_back({values[i].first, values[i].second, rank});
    rank += static_cast<int>(end - start);
    start = end;
  }
  return out;
}

double EstimandReport::conditional(const TreatmentId& a, const TreatmentId& b) const {
  if (a == b) return 0.0;
  for (const auto& p : pairs) {
    if (p.a == a && p.b == b) return p.conditional;
    if (p.a == b && p.b == a) return -p.conditional;
  }
  throw ValidationError("pair (" + a + ", " + b + ") not in report");
}

double EstimandReport::marginal(const TreatmentId& a, const TreatmentId& b) const {
  if (a == b) return 0.0;
  for (const auto& p : pairs) {
    if (p.a == a && p.b == b) return p.marginal;
    if (p.a == b && p.b == a) return -p.marginal;
  }
  throw ValidationError("pair (" + a + ", " + b + ") not in report");
}

const Probability& EstimandReport::average_probability(const TreatmentId& k) const {
  for (std::size_t i = 0; i < treatments.size(); ++i)
    if (treatments[i] == k) return average_probabilities[i];
  throw ValidationError("treatment '" + k + "' not in report");
}

double EstimandReport::individual_effect_at(const TreatmentId& a, const TreatmentId& b,
                                            std::span<const double> x) const {
  return individual_conditional_effect(*model, a, b, x);
}

std::vector<TreatmentId> EstimandReport::conditional_order() const {
  std::vector<TreatmentId> ids;
  for (const auto& r : conditional_ranking) ids.push_back(r.id);
  return ids;
}

std::vector<TreatmentId> EstimandReport::marginal_order() const {
  std::vector<TreatmentId> ids;
  for (const auto& r : marginal_ranking) ids.push_back(r.id);
  return ids;
}

EstimandReport estimand_report(const OutcomeModel& model, const Population& pop,
                               const std::vector<TreatmentId>& treatments, Direction direction,
                               const IntegrationScheme& scheme) {
  require_compatible(model, pop);
  if (treatments.empty()) throw ValidationError("no treatments requested", "treatments");
  for (const auto& t : treatments) (void)model.index_of(t);

  EstimandReport report;
  report.treatments = treatments;
  report.reference = model.reference();
  report.direction = direction;
  report.scheme = scheme;
  report.model = std::make_shared<const OutcomeModel>(model);

  // One pass over the nodes: per treatment (p, q) and conditional effect vs
  // the reference; pair quantities follow by differences.
  const std::size_t K = treatments.size();
  std::vector<std::size_t> idx(K);
  for (std::size_t i = 0; i < K; ++i) idx[i] = model.index_of(treatments[i]);
  const NodeSet nodes(pop.covariates, scheme);
  const auto sums = nodes.expect_grid(
      [&](std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < K; ++i) {
          const Probability p = model.link().inverse(model.eta_with_intercept(idx[i], x, pop.intercept));
          out[3 * i] = p.value();
          out[3 * i + 1] = p.complement();
          out[3 * i + 2] = model.contrast(0, idx[i], x);
        }
      },
      3 * K);

  const Link& g = model.link();
  std::vector<double> link_avg(K), cond_vs_ref(K);
  for (std::size_t i = 0; i < K; ++i) {
    report.average_probabilities.push_back(Probability::from_pair(sums[3 * i], sums[3 * i + 1]));
    link_avg[i] = g.forward(report.average_probabilities.back());
    cond_vs_ref[i] = sums[3 * i + 2];
  }
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = i + 1; j < K; ++j) {
      // d_ab integrates gamma_ab directly so additivity holds to rounding.
      const double d = idx[i] == idx[j] ? 0.0
                                        : nodes.expect([&](std::span<const double> x) {
                                            return model.contrast(idx[i], idx[j], x);
                                          });
      report.pairs.push_back({treatments[i], treatments[j], d, link_avg[j] - link_avg[i]});
    }

  // Rankings compare each treatment with the reference; the reference's
  // average probability is needed even when it is not in the list.
  const double ref_link = g.forward(average_probability(model, pop, model.reference(), scheme));
  std::vector<std::pair<TreatmentId, double>> cond, marg;
  for (std::size_t i = 0; i < K; ++i) {
    cond.emplace_back(treatments[i], cond_vs_ref[i]);
    marg.emplace_back(treatments[i], link_avg[i] - ref_link);
  }
  report.conditional_ranking = rank_treatments(std::move(cond), direction);
  report.marginal_ranking = rank_treatments(std::move(marg), direction);
  return report;
}

void NetBenefitSpec::validate() const {
  for (const auto& [id, coeffs] : value_polynomials) {
    if (coeffs.empty() || coeffs.size() > 5)
      throw ValidationError("net benefit polynomial for '" + id + "' must have degree 0..4", "net_benefit");
    for (double c : coeffs)
      if (!std::isfinite(c)) throw ValidationError("net benefit coefficient not finite", "net_benefit");
  }
}

double evaluate_polynomial(std::span<const double> coefficients, double x) noexcept {
  double acc = 0.0;
  for (std::size_t i = coefficients.size(); i-- > 0;) acc = acc * x + coefficients[i];
  return acc;
}

double expected_net_benefit(const OutcomeModel& model, const Population& pop, const NetBenefitSpec& spec,
                            const TreatmentId& k, const IntegrationScheme& scheme) {
  spec.validate();
  const auto it = spec.value_polynomials.find(k);
  if (it == spec.value_polynomials.end())
    throw ValidationError("no net benefit function for treatment '" + k + "'", "net_benefit");
  const std::span<const double> phi = it->second;
  if (spec.mode == AveragingMode::plug_in_average)
    return evaluate_polynomial(phi, average_probability(model, pop, k, scheme).value());
  const std::size_t ik = model.index_of(k);
  require_compatible(model, pop);
  return expect(
      pop.covariates,
      [&](std::span<const double> x) {
        return evaluate_polynomial(phi, model.link().inverse(model.eta_with_intercept(ik, x, pop.intercept)).value());
      },
      scheme);
}

}  // namespace estimand
