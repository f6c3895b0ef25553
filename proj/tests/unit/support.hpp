#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "estimand/binary.hpp"
#include "estimand/survival.hpp"

namespace testing {

using namespace estimand;

inline OutcomeModel model_41(LinkKind link = LinkKind::logit) {
  return OutcomeModel(Link(link), 0.0, {-1.0}, {{"A", {0.0}, 0.0}, {"B", {-3.0}, -4.0}, {"C", {-1.0}, -3.0}});
}

inline Population uniform_pop(double mu = 0.0, double lo = -1.0, double hi = 1.0) {
  return {mu, CovariateDistribution::product({Uniform{lo, hi}})};
}

inline OutcomeModel no_em_model() {
  return OutcomeModel(Link(LinkKind::logit), 0.0, {-1.0}, {{"A", {0.0}, 0.0}, {"B", {0.0}, -4.0}, {"C", {0.0}, -3.0}});
}

inline OutcomeModel shared_em_model() {
  return OutcomeModel(Link(LinkKind::logit), 0.0, {-1.0}, {{"A", {0.0}, 0.0}, {"B", {-4.0}, -4.0}, {"C", {-4.0}, -3.0}});
}

inline WeibullPHModel weibull(bool em) {
  const double b2b = em ? std::log(0.7) : 0.0, b2c = em ? std::log(0.9) : 0.0;
  return WeibullPHModel(2.0, OutcomeModel(Link(LinkKind::log), -1.0, {std::log(0.25)},
                                          {{"A", {0.0}, 0.0}, {"B", {b2b}, std::log(0.6)}, {"C", {b2c}, std::log(0.5)}}));
}

inline Population weibull_pop() { return uniform_pop(-1.0); }

/// Seeded generator of random models and populations for property tests.
class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  std::vector<double> vec(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

  /// One to three covariates, each Uniform on a random interval or Bernoulli.
  Population population(std::size_t dim, double mu) {
    std::vector<Marginal> m;
    for (std::size_t j = 0; j < dim; ++j) {
      if (coin()) {
        const double lo = uniform(-2.0, 1.0);
        m.push_back(Uniform{lo, lo + uniform(0.2, 2.0)});
      } else {
        m.push_back(Bernoulli{uniform(0.05, 0.95)});
      }
    }
    return {mu, CovariateDistribution::product(std::move(m))};
  }

  /// Reference plus `k` treatments with coefficients in [-c, c]. When
  /// `share` is set, treatments 1 and 2 get the same interaction vector.
  OutcomeModel logit_model(std::size_t dim, std::size_t k, double c, bool share = false, bool no_em = false) {
    std::vector<Arm> arms{{"A", std::vector<double>(dim, 0.0), 0.0}};
    const char* names[] = {"B", "C", "D", "E"};
    for (std::size_t i = 0; i < k; ++i) {
      auto beta = no_em ? std::vector<double>(dim, 0.0) : vec(dim, -c, c);
      if (share && i == 1) beta = arms[1].interactions;
      arms.push_back({names[i], beta, uniform(-c, c)});
    }
    return OutcomeModel(Link(LinkKind::logit), 0.0, vec(dim, -c, c), std::move(arms));
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace testing
