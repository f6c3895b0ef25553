#include <doctest.h>

#include <cmath>

#include "estimand/error.hpp"
#include "estimand/oracle.hpp"
#include "estimand/random.hpp"
#include "support.hpp"

using namespace estimand;

namespace {

const auto GL = IntegrationScheme::gauss_legendre(64);

OracleConfig cfg(std::uint64_t draws, std::uint64_t seed = 99) {
  OracleConfig c;
  c.draws = draws;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("philox known answers") {
  using B = Philox4x32::Block;
  CHECK(Philox4x32::generate({0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("uniforms stay inside the open interval") {
  const Philox4x32 g(3);
  for (std::uint64_t i = 0; i < 10000; ++i)
    for (double u : g.uniforms(i, 0)) {
      CHECK(u > 0.0);
      CHECK(u < 1.0);
    }
  CHECK(Philox4x32::to_unit(0) > 0.0);
  CHECK(Philox4x32::to_unit(~std::uint64_t{0}) < 1.0);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(cfg(9999).validate(), ValidationError);
  CHECK_NOTHROW(cfg(10000).validate());
  CHECK_THROWS_AS(oracle_estimands(testing::model_41(), testing::uniform_pop(), {"A", "B"}, cfg(100)), ValidationError);
}

TEST_CASE("same seed gives identical estimates, different seed does not") {
  const auto m = testing::model_41();
  const auto pop = testing::uniform_pop();
  const auto a = oracle_estimands(m, pop, {"A", "B", "C"}, cfg(20000, 1));
  const auto b = oracle_estimands(m, pop, {"A", "B", "C"}, cfg(20000, 1));
  const auto c = oracle_estimands(m, pop, {"A", "B", "C"}, cfg(20000, 2));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.average_probability[i].value == b.average_probability[i].value);
    CHECK(a.average_probability[i].se == b.average_probability[i].se);
  }
  CHECK(a.pair("B", "C").marginal.value == b.pair("B", "C").marginal.value);
  CHECK(a.pair("B", "C").marginal.value != c.pair("B", "C").marginal.value);
}

TEST_CASE("draws do not depend on thread count") {
  const auto m = testing::model_41();
  const auto pop = testing::uniform_pop();
  setenv("ESTIMAND_LAB_THREADS", "1", 1);
  const auto one = oracle_estimands(m, pop, {"A", "B", "C"}, cfg(30000));
  setenv("ESTIMAND_LAB_THREADS", "4", 1);
  const auto four = oracle_estimands(m, pop, {"A", "B", "C"}, cfg(30000));
  unsetenv("ESTIMAND_LAB_THREADS");
  CHECK(one.pair("A", "C").marginal.value == four.pair("A", "C").marginal.value);
  CHECK(one.pair("A", "C").marginal.se == four.pair("A", "C").marginal.se);
}

TEST_CASE("worked example within four standard errors") {
  const auto m = testing::model_41();
  const auto pop = testing::uniform_pop();
  const auto o = oracle_estimands(m, pop, {"A", "B", "C"}, cfg(200000));
  for (const TreatmentId k : {"A", "B", "C"})
    CHECK(o.probability(k).agrees_with(average_probability(m, pop, k, GL).value()));
  for (const auto& p : o.pairs) {
    CHECK(p.marginal.agrees_with(population_marginal_effect(m, pop, p.a, p.b, GL)));
    CHECK(p.conditional.agrees_with(population_conditional_effect(m, pop, p.a, p.b, GL)));
  }
  CHECK(o.groups > 0);
  CHECK(o.groups <= 1000);
}

TEST_CASE("standard error shrinks like one over root n") {
  const auto m = testing::model_41();
  const auto pop = testing::uniform_pop();
  const auto small = oracle_estimands(m, pop, {"A", "B", "C"}, cfg(50000));
  const auto large = oracle_estimands(m, pop, {"A", "B", "C"}, cfg(200000));
  const double ratio = small.pair("A", "B").marginal.se / large.pair("A", "B").marginal.se;
  CHECK(ratio >= 1.7);
  CHECK(ratio <= 2.3);
}

TEST_CASE("antithetic and bernoulli modes") {
  const auto m = testing::model_41();
  const auto pop = testing::uniform_pop();
  auto c = cfg(100000);
  c.antithetic = true;
  const auto anti = oracle_estimands(m, pop, {"A", "B", "C"}, c);
  CHECK(anti.probability("B").agrees_with(average_probability(m, pop, "B", GL).value()));
  // pi_A(x) = expit(-x) is odd around 1/2, so antithetic pairs cancel exactly
  CHECK(anti.probability("A").value == doctest::Approx(0.5).epsilon(1e-12));

  c.antithetic = false;
  c.bernoulli_outcomes = true;
  const auto bern = oracle_estimands(m, pop, {"A", "B", "C"}, c);
  for (const auto& p : bern.pairs) CHECK(p.marginal.agrees_with(population_marginal_effect(m, pop, p.a, p.b, GL)));
  CHECK(bern.probability("A").se > anti.probability("A").se);
}

TEST_CASE("degenerate and empty covariates") {
  const auto m = testing::model_41();
  const Population point{0.0, CovariateDistribution::product({FinitePoints{{0.3}, {1.0}}})};
  const auto o = oracle_estimands(m, point, {"A", "B"}, cfg(10000));
  CHECK(o.pair("A", "B").conditional.value == doctest::Approx(-4.9).epsilon(1e-12));
  CHECK(o.pair("A", "B").conditional.se == doctest::Approx(0.0).epsilon(1e-12));

  const OutcomeModel bare(Link(LinkKind::logit), 0.0, {}, {{"A", {}, 0.0}, {"B", {}, -1.0}});
  const auto b = oracle_estimands(bare, Population{0.5, {}}, {"A", "B"}, cfg(10000));
  CHECK(b.pair("A", "B").marginal.value == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("saturated table model within four standard errors") {
  // Table-style saturated model: Bernoulli(0.25) subgroup indicator
  const OutcomeModel m(Link(LinkKind::logit), std::log(202.0 / 548.0), {std::log(156.0 / 94.0) - std::log(202.0 / 548.0)},
                       {{"A", {0.0}, 0.0},
                        {"C", {std::log(144.0 / 106.0) - std::log(156.0 / 94.0) - std::log(13.0 / 737.0) +
                               std::log(202.0 / 548.0)},
                         std::log(13.0 / 737.0) - std::log(202.0 / 548.0)}});
  const Population pop{m.intercept(), CovariateDistribution::product({Bernoulli{0.25}})};
  const auto o = oracle_estimands(m, pop, {"A", "C"}, cfg(100000));
  const auto exact = IntegrationScheme::exact_discrete();
  CHECK(o.pair("A", "C").marginal.agrees_with(population_marginal_effect(m, pop, "A", "C", exact)));
  CHECK(o.pair("A", "C").conditional.agrees_with(population_conditional_effect(m, pop, "A", "C", exact)));
}

TEST_CASE("covariate draws follow the marginals") {
  const auto dist = CovariateDistribution::product({Uniform{2.0, 4.0}, Bernoulli{0.3}, FinitePoints{{-1.0, 5.0}, {0.5, 0.5}}});
  double s0 = 0, s1 = 0, s2 = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const auto x = draw_covariates(dist, 7, i);
    REQUIRE(x.size() == 3);
    CHECK((x[0] >= 2.0 && x[0] <= 4.0));
    CHECK((x[1] == 0.0 || x[1] == 1.0));
    CHECK((x[2] == -1.0 || x[2] == 5.0));
    s0 += x[0];
    s1 += x[1];
    s2 += x[2];
  }
  CHECK(s0 / n == doctest::Approx(3.0).epsilon(0.01));
  CHECK(s1 / n == doctest::Approx(0.3).epsilon(0.05));
  CHECK(s2 / n == doctest::Approx(2.0).epsilon(0.05));
  const auto u = draw_covariates(dist, 7, 11), v = draw_covariates(dist, 7, 11, true);
  CHECK(u[0] - 2.0 == doctest::Approx(4.0 - v[0]));
}

TEST_CASE("survival oracle") {
  const auto m = testing::weibull(true);
  const auto pop = testing::weibull_pop();
  const TimeGrid grid({1e-6, 0.5, 1.0, 2.0, 3.0});
  const auto o = oracle_survival(m, pop, {"A", "B", "C"}, grid, cfg(100000));
  for (std::size_t k = 0; k < 3; ++k) {
    const auto s = marginal_survival_curve(m, pop, o.treatments[k], grid, GL);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(o.survival[k][i].agrees_with(s[i]));
  }
  const auto hr = marginal_hazard_ratio_curve(m, pop, "A", "B", grid, GL);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(o.hazard_ratio("A", "B").ratio[i].agrees_with(hr[i]));
  // near t = 0 survival is 1 on every arm
  CHECK(o.survival[1][0].value == doctest::Approx(1.0).epsilon(1e-9));

  // without covariates the hazard ratio is exactly the treatment effect
  const WeibullPHModel bare(2.0, OutcomeModel(Link(LinkKind::log), -1.0, {}, {{"A", {}, 0.0}, {"B", {}, std::log(0.6)}}));
  const auto ob = oracle_survival(bare, Population{-1.0, {}}, {"A", "B"}, grid, cfg(10000));
  for (const auto& e : ob.hazard_ratio("A", "B").ratio) CHECK(e.value == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("survival oracle brackets the hazard-ratio crossing") {
  const auto m = testing::weibull(true);
  const auto pop = testing::weibull_pop();
  const double t0 = 2.017575117197155;
  const TimeGrid grid({t0 - 0.5, t0 + 0.8});
  const auto o = oracle_survival(m, pop, {"A", "B", "C"}, grid, cfg(400000));
  const auto& ab = o.hazard_ratio("A", "B").ratio;
  const auto& ac = o.hazard_ratio("A", "C").ratio;
  const double before = ab[0].value - ac[0].value, after = ab[1].value - ac[1].value;
  CHECK(before * after < 0.0);
}
