#include "estimand/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "estimand/error.hpp"
#include "estimand/parallel.hpp"
#include "estimand/random.hpp"

namespace estimand {

namespace {

constexpr std::size_t kMaxGroups = 1000;
constexpr std::uint32_t kOutcomeStream = 0x10000;

double marginal_quantile(const Marginal& m, double u) {
  if (const auto* uni = std::get_if<Uniform>(&m)) return uni->lo + u * (uni->hi - uni->lo);
  if (const auto* b = std::get_if<Bernoulli>(&m)) return u < 1.0 - b->prevalence ? 0.0 : 1.0;
  const auto& f = std::get<FinitePoints>(m);
  double cum = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    cum += f.weights[i];
    if (u < cum && f.weights[i] > 0.0) return f.values[i];
  }
  for (std::size_t i = f.values.size(); i-- > 0;)
    if (f.weights[i] > 0.0) return f.values[i];
  return f.values.back();
}

/// Uniform for dimension j of draw `index`; antithetic partners share the
/// base draw and reflect it.
double draw_uniform(const Philox4x32& rng, std::uint64_t index, std::uint32_t j, bool reflect) {
  const auto u = rng.uniforms(index, j / 2)[j % 2];
  return reflect ? 1.0 - u : u;
}

/// Draw layout: with antithetic sampling, draws 2i and 2i+1 use base index i.
std::pair<std::uint64_t, bool> base_index(std::uint64_t draw, bool antithetic) {
  return antithetic ? std::pair{draw / 2, (draw % 2) == 1} : std::pair{draw, false};
}

struct Partition {
  std::size_t groups;
  std::uint64_t begin(std::size_t g, std::uint64_t n) const { return n * g / groups; }
};

Partition make_partition(const OracleConfig& config) {
  // Groups hold whole antithetic pairs so the jackknife sees independent units.
  const std::uint64_t units = config.antithetic ? config.draws / 2 : config.draws;
  return {static_cast<std::size_t>(std::min<std::uint64_t>(kMaxGroups, units))};
}

std::uint64_t group_begin(const Partition& p, std::size_t g, const OracleConfig& config) {
  if (!config.antithetic) return p.begin(g, config.draws);
  return 2 * p.begin(g, config.draws / 2);
}

/// Delete-a-group jackknife: statistic(total sums / count) for the point
/// estimate, leave-one-group-out replicates for the standard error.
template <class Statistic>
Estimate jackknife(const std::vector<std::vector<double>>& group_sums, const std::vector<double>& group_counts,
                   const Statistic& statistic) {
  const std::size_t G = group_sums.size();
  const std::size_t width = group_sums.front().size();
  std::vector<double> total(width, 0.0);
  double n = 0.0;
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t c = 0; c < width; ++c) total[c] += group_sums[g][c];
    n += group_counts[g];
  }
  std::vector<double> mean(width);
  for (std::size_t c = 0; c < width; ++c) mean[c] = total[c] / n;
  Estimate est;
  est.value = statistic(mean);
  std::vector<double> reps(G);
  for (std::size_t g = 0; g < G; ++g) {
    const double m = n - group_counts[g];
    for (std::size_t c = 0; c < width; ++c) mean[c] = (total[c] - group_sums[g][c]) / m;
    reps[g] = statistic(mean);
  }
  double rep_mean = 0.0;
  for (double r : reps) rep_mean += r;
  rep_mean /= static_cast<double>(G);
  double ss = 0.0;
  for (double r : reps) ss += (r - rep_mean) * (r - rep_mean);
  est.se = std::sqrt(static_cast<double>(G - 1) / static_cast<double>(G) * ss);
  return est;
}

}  // namespace

void OracleConfig::validate() const {
  if (draws < 10'000) throw ValidationError("oracle needs at least 10^4 draws", "oracle.draws");
}

bool Estimate::agrees_with(double reference, double k) const noexcept {
  return std::abs(value - reference) <= k * se;
}

const OraclePair& OracleEstimands::pair(const TreatmentId& a, const TreatmentId& b) const {
  for (const auto& p : pairs)
    if (p.a == a && p.b == b) return p;
  throw ValidationError("pair (" + a + ", " + b + ") not in oracle output");
}

const Estimate& OracleEstimands::probability(const TreatmentId& k) const {
  for (std::size_t i = 0; i < treatments.size(); ++i)
    if (treatments[i] == k) return average_probability[i];
  throw ValidationError("treatment '" + k + "' not in oracle output");
}

const OracleHazardRatio& OracleSurvival::hazard_ratio(const TreatmentId& a, const TreatmentId& b) const {
  for (const auto& h : hazard_ratios)
    if (h.a == a && h.b == b) return h;
  throw ValidationError("pair (" + a + ", " + b + ") not in oracle output");
}

std::vector<double> draw_covariates(const CovariateDistribution& dist, std::uint64_t seed, std::uint64_t index,
                                    bool antithetic_partner) {
  const Philox4x32 rng(seed);
  const std::size_t dim = dist.dimension();
  std::vector<double> x(dim);
  if (dist.is_empirical()) {
    const auto& rows = dist.rows();
    const double u = draw_uniform(rng, index, 0, antithetic_partner);
    x = rows[std::min(rows.size() - 1, static_cast<std::size_t>(u * static_cast<double>(rows.size())))];
    return x;
  }
  for (std::size_t j = 0; j < dim; ++j)
    x[j] = marginal_quantile(dist.marginals()[j], draw_uniform(rng, index, static_cast<std::uint32_t>(j), antithetic_partner));
  return x;
}

OracleEstimands oracle_estimands(const OutcomeModel& model, const Population& pop,
                                 const std::vector<TreatmentId>& treatments, const OracleConfig& config) {
  config.validate();
  require_compatible(model, pop);
  const std::size_t K = treatments.size();
  std::vector<std::size_t> idx(K);
  for (std::size_t i = 0; i < K; ++i) idx[i] = model.index_of(treatments[i]);

  const Partition part = make_partition(config);
  const std::size_t G = part.groups;
  const std::size_t width = 3 * K;  // per treatment: p, q, contrast vs reference
  std::vector<std::vector<double>> sums(G, std::vector<double>(width, 0.0));
  std::vector<double> counts(G, 0.0);
  const Philox4x32 rng(config.seed);

  parallel_for(G, [&](std::size_t g_begin, std::size_t g_end) {
    for (std::size_t g = g_begin; g < g_end; ++g) {
      const std::uint64_t begin = group_begin(part, g, config);
      const std::uint64_t end = g + 1 == G ? config.draws : group_begin(part, g + 1, config);
      auto& s = sums[g];
      for (std::uint64_t d = begin; d < end; ++d) {
        const auto [base, reflect] = base_index(d, config.antithetic);
        const auto x = draw_covariates(pop.covariates, config.seed, base, reflect);
        const double u_outcome = config.bernoulli_outcomes ? draw_uniform(rng, d, kOutcomeStream, false) : 0.0;
        for (std::size_t i = 0; i < K; ++i) {
          const Probability p = model.link().inverse(model.eta_with_intercept(idx[i], x, pop.intercept));
          if (config.bernoulli_outcomes) {
            const double y = u_outcome < p.value() ? 1.0 : 0.0;
            s[3 * i] += y;
            s[3 * i + 1] += 1.0 - y;
          } else {
            s[3 * i] += p.value();
            s[3 * i + 1] += p.complement();
          }
          s[3 * i + 2] += model.contrast(0, idx[i], x);
        }
      }
      counts[g] = static_cast<double>(end - begin);
    }
  }, 1);

  OracleEstimands out;
  out.treatments = treatments;
  out.config = config;
  out.groups = G;
  const Link& link = model.link();
  auto link_mean = [&](const std::vector<double>& m, std::size_t i) {
    return link.forward(Probability::from_pair(std::clamp(m[3 * i], 0.0, 1.0), std::clamp(m[3 * i + 1], 0.0, 1.0)));
  };
  for (std::size_t i = 0; i < K; ++i)
    out.average_probability.push_back(jackknife(sums, counts, [&](const std::vector<double>& m) { return m[3 * i]; }));
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = i + 1; j < K; ++j) {
      OraclePair p;
      p.a = treatments[i];
      p.b = treatments[j];
      p.conditional =
          jackknife(sums, counts, [&](const std::vector<double>& m) { return m[3 * j + 2] - m[3 * i + 2]; });
      p.marginal =
          jackknife(sums, counts, [&](const std::vector<double>& m) { return link_mean(m, j) - link_mean(m, i); });
      out.pairs.push_back(std::move(p));
    }
  return out;
}

OracleSurvival oracle_survival(const WeibullPHModel& model, const Population& pop,
                               const std::vector<TreatmentId>& treatments, const TimeGrid& grid,
                               const OracleConfig& config) {
  config.validate();
  require_compatible(model.base(), pop);
  const std::size_t K = treatments.size(), T = grid.size();
  std::vector<std::size_t> idx(K);
  for (std::size_t i = 0; i < K; ++i) idx[i] = model.base().index_of(treatments[i]);
  std::vector<double> tnu(T);
  for (std::size_t t = 0; t < T; ++t) tnu[t] = std::pow(grid[t], model.shape());

  const Partition part = make_partition(config);
  const std::size_t G = part.groups;
  const std::size_t width = 2 * K * T;  // per (treatment, time): S, S exp(eta)
  std::vector<std::vector<double>> sums(G, std::vector<double>(width, 0.0));
  std::vector<double> counts(G, 0.0);

  parallel_for(G, [&](std::size_t g_begin, std::size_t g_end) {
    for (std::size_t g = g_begin; g < g_end; ++g) {
      const std::uint64_t begin = group_begin(part, g, config);
      const std::uint64_t end = g + 1 == G ? config.draws : group_begin(part, g + 1, config);
      auto& s = sums[g];
      for (std::uint64_t d = begin; d < end; ++d) {
        const auto [base, reflect] = base_index(d, config.antithetic);
        const auto x = draw_covariates(pop.covariates, config.seed, base, reflect);
        for (std::size_t i = 0; i < K; ++i) {
          const double rate = std::exp(model.base().eta_with_intercept(idx[i], x, pop.intercept));
          double* row = s.data() + 2 * T * i;
          for (std::size_t t = 0; t < T; ++t) {
            const double surv = std::exp(-tnu[t] * rate);
            row[2 * t] += surv;
            row[2 * t + 1] += surv * rate;
          }
        }
      }
      counts[g] = static_cast<double>(end - begin);
    }
  }, 1);

  OracleSurvival out;
  out.treatments = treatments;
  out.config = config;
  for (std::size_t i = 0; i < K; ++i) {
    std::vector<Estimate> curve;
    for (std::size_t t = 0; t < T; ++t)
      curve.push_back(jackknife(sums, counts, [&](const std::vector<double>& m) { return m[2 * T * i + 2 * t]; }));
    out.survival.push_back(std::move(curve));
  }
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = i + 1; j < K; ++j) {
      OracleHazardRatio hr{treatments[i], treatments[j], {}};
      for (std::size_t t = 0; t < T; ++t)
        hr.ratio.push_back(jackknife(sums, counts, [&](const std::vector<double>& m) {
          const double ha = m[2 * T * i + 2 * t + 1] / m[2 * T * i + 2 * t];
          const double hb = m[2 * T * j + 2 * t + 1] / m[2 * T * j + 2 * t];
          return hb / ha;
        }));
      out.hazard_ratios.push_back(std::move(hr));
    }
  return out;
}

}  // namespace estimand
