#include "estimand/integrate.hpp"

#include <boost/random/sobol.hpp>
#include <cmath>
#include <numbers>
#include <utility>

#include "estimand/error.hpp"
#include "estimand/parallel.hpp"
#include "estimand/random.hpp"

namespace estimand {

namespace {

constexpr std::size_t kMaxTensorNodes = std::size_t{1} << 22;

struct Rule1D {
  std::vector<double> values;
  std::vector<double> weights;  // sum to 1
};

Rule1D discrete_rule(const Marginal& m) {
  Rule1D r;
  if (const auto* b = std::get_if<Bernoulli>(&m)) {
    if (b->prevalence < 1.0) {
      r.values.push_back(0.0);
      r.weights.push_back(1.0 - b->prevalence);
    }
    if (b->prevalence > 0.0) {
      r.values.push_back(1.0);
      r.weights.push_back(b->prevalence);
    }
  } else if (const auto* f = std::get_if<FinitePoints>(&m)) {
    for (std::size_t i = 0; i < f->values.size(); ++i) {
      if (f->weights[i] == 0.0) continue;
      r.values.push_back(f->values[i]);
      r.weights.push_back(f->weights[i]);
    }
  }
  return r;
}

Rule1D uniform_rule(const Uniform& u, std::size_t n) {
  std::vector<double> t, w;
  gauss_legendre_rule(n, t, w);
  Rule1D r;
  const double mid = 0.5 * (u.lo + u.hi), half = 0.5 * (u.hi - u.lo);
  for (std::size_t i = 0; i < n; ++i) {
    r.values.push_back(mid + half * t[i]);
    r.weights.push_back(0.5 * w[i]);
  }
  return r;
}

/// Inverse CDF of one marginal at u in (0, 1).
double quantile(const Marginal& m, double u) {
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

void require_finite_values(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw NumericalError("integrand is not finite at node " + std::to_string(i));
}

}  // namespace

IntegrationScheme IntegrationScheme::exact_discrete() {
  IntegrationScheme s;
  s.kind = SchemeKind::exact_discrete;
  return s;
}

IntegrationScheme IntegrationScheme::gauss_legendre(std::size_t nodes) {
  IntegrationScheme s;
  s.kind = SchemeKind::gauss_legendre;
  s.nodes = nodes;
  return s;
}

IntegrationScheme IntegrationScheme::qmc_sobol(std::uint64_t points, std::uint64_t scramble_seed) {
  IntegrationScheme s;
  s.kind = SchemeKind::qmc_sobol;
  s.points = points;
  s.scramble_seed = scramble_seed;
  return s;
}

IntegrationScheme IntegrationScheme::empirical_mean() {
  IntegrationScheme s;
  s.kind = SchemeKind::empirical_mean;
  return s;
}

void IntegrationScheme::validate() const {
  if (!(tolerance > 0.0) || !std::isfinite(tolerance))
    throw ValidationError("tolerance must be positive", "scheme.tolerance");
  if (kind == SchemeKind::gauss_legendre && nodes < 2)
    throw ValidationError("Gauss-Legendre needs at least 2 nodes", "scheme.nodes");
  if (kind == SchemeKind::qmc_sobol && (points == 0 || (points & (points - 1)) != 0))
    throw ValidationError("Sobol point count must be a power of two", "scheme.points");
}

std::string_view to_string(SchemeKind kind) noexcept {
  switch (kind) {
    case SchemeKind::exact_discrete: return "exact_discrete";
    case SchemeKind::gauss_legendre: return "gauss_legendre";
    case SchemeKind::qmc_sobol: return "qmc_sobol";
    case SchemeKind::empirical_mean: return "empirical_mean";
  }
  return "unknown";
}

SchemeKind parse_scheme_kind(std::string_view name) {
  if (name == "exact_discrete") return SchemeKind::exact_discrete;
  if (name == "gauss_legendre") return SchemeKind::gauss_legendre;
  if (name == "qmc_sobol") return SchemeKind::qmc_sobol;
  if (name == "empirical_mean") return SchemeKind::empirical_mean;
  throw ValidationError("unknown integration scheme '" + std::string(name) + "'", "scheme.kind");
}

IntegrationScheme default_scheme(const CovariateDistribution& dist) {
  if (dist.is_empirical()) return IntegrationScheme::empirical_mean();
  if (dist.is_finite()) return IntegrationScheme::exact_discrete();
  if (dist.dimension() <= 2) return IntegrationScheme::gauss_legendre(64);
  return IntegrationScheme::qmc_sobol();
}

void gauss_legendre_rule(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

double pairwise_sum(std::span<const double> values) noexcept {
  constexpr std::size_t kBlock = 16;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t mid = values.size() / 2;
  return pairwise_sum(values.first(mid)) + pairwise_sum(values.subspan(mid));
}

NodeSet::NodeSet(const CovariateDistribution& dist, const IntegrationScheme& scheme) {
  scheme.validate();
  dim_ = dist.dimension();

  if (scheme.kind == SchemeKind::empirical_mean || (dist.is_empirical() && scheme.kind == SchemeKind::exact_discrete)) {
    if (!dist.is_empirical())
      throw ValidationError("empirical_mean requires an empirical covariate sample", "scheme.kind");
    const auto& rows = dist.rows();
    const double w = 1.0 / static_cast<double>(rows.size());
    for (const auto& r : rows) {
      coords_.insert(coords_.end(), r.begin(), r.end());
      weights_.push_back(w);
    }
    return;
  }

  if (scheme.kind == SchemeKind::qmc_sobol) {
    const std::size_t n = scheme.points;
    const std::size_t sobol_dim = std::max<std::size_t>(1, dim_);
    boost::random::sobol engine(sobol_dim);
    std::vector<std::uint64_t> shift(sobol_dim);
    for (std::size_t j = 0; j < sobol_dim; ++j) shift[j] = splitmix64(scheme.scramble_seed * 0x100000001B3ULL + j);
    coords_.resize(n * dim_);
    weights_.assign(n, 1.0 / static_cast<double>(n));
    std::vector<double> u(sobol_dim);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < sobol_dim; ++j) u[j] = Philox4x32::to_unit(engine() ^ shift[j]);
      if (dist.is_empirical()) {
        const auto& rows = dist.rows();
        const auto idx = std::min(rows.size() - 1, static_cast<std::size_t>(u[0] * static_cast<double>(rows.size())));
        std::copy(rows[idx].begin(), rows[idx].end(), coords_.begin() + static_cast<std::ptrdiff_t>(i * dim_));
      } else {
        for (std::size_t j = 0; j < dim_; ++j) coords_[i * dim_ + j] = quantile(dist.marginals()[j], u[j]);
      }
    }
    return;
  }

  if (dist.is_empirical())
    throw ValidationError("gauss_legendre cannot integrate an empirical sample", "scheme.kind");

  std::vector<Rule1D> rules;
  std::size_t total = 1;
  for (std::size_t j = 0; j < dim_; ++j) {
    const Marginal& m = dist.marginals()[j];
    if (const auto* u = std::get_if<Uniform>(&m)) {
      if (scheme.kind == SchemeKind::exact_discrete)
        throw ValidationError("exact_discrete cannot integrate a uniform covariate (dimension " +
                                  std::to_string(j) + ")",
                              "scheme.kind");
      rules.push_back(uniform_rule(*u, scheme.nodes));
    } else {
      rules.push_back(discrete_rule(m));
    }
    total *= rules.back().values.size();
    if (total > kMaxTensorNodes)
      throw ValidationError("tensor-product rule too large; use qmc_sobol", "scheme.kind");
  }

  coords_.resize(total * dim_);
  weights_.assign(total, 1.0);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rem = i;
    for (std::size_t j = dim_; j-- > 0;) {
      const auto& r = rules[j];
      const std::size_t idx = rem % r.values.size();
      rem /= r.values.size();
      coords_[i * dim_ + j] = r.values[idx];
      weights_[i] *= r.weights[idx];
    }
  }
}

double NodeSet::expect(const std::function<double(std::span<const double>)>& f) const {
  std::vector<double> terms(size());
  parallel_for(size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) terms[i] = f(point(i));
  });
  require_finite_values(terms);
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] *= weights_[i];
  return pairwise_sum(terms);
}

std::vector<double> NodeSet::expect_grid(
    const std::function<void(std::span<const double>, std::span<double>)>& f, std::size_t width) const {
  const std::size_t n = size();
  std::vector<double> values(n * width);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) f(point(i), std::span<double>(values.data() + i * width, width));
  });
  require_finite_values(values);
  std::vector<double> column(n), out(width);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t i = 0; i < n; ++i) column[i] = weights_[i] * values[i * width + c];
    out[c] = pairwise_sum(column);
  }
  return out;
}

double expect(const CovariateDistribution& dist, const std::function<double(std::span<const double>)>& f,
              const IntegrationScheme& scheme) {
  return NodeSet(dist, scheme).expect(f);
}

std::vector<double> expect_grid(const CovariateDistribution& dist,
                                const std::function<std::vector<double>(std::span<const double>)>& f,
                                const IntegrationScheme& scheme) {
  const NodeSet nodes(dist, scheme);
  if (nodes.size() == 0) return {};
  const std::size_t width = f(nodes.point(0)).size();
  return nodes.expect_grid(
      [&](std::span<const double> x, std::span<double> out) {
        const auto v = f(x);
        if (v.size() != width) throw ValidationError("vector integrand changed width between nodes");
        std::copy(v.begin(), v.end(), out.begin());
      },
      width);
}

}  // namespace estimand
