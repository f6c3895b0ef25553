#include <doctest.h>

#include <cmath>

#include "estimand/error.hpp"
#include "support.hpp"

using namespace estimand;
using testing::Generator;

namespace {

const auto GL = IntegrationScheme::gauss_legendre(64);

double logit(double p) { return std::log(p / (1.0 - p)); }

// Mean of expit(a + b x) for x ~ U(-1, 1): the antiderivative is log(1 + e^u) / b.
double mean_expit_uniform(double a, double b) {
  return (std::log1p(std::exp(a + b)) - std::log1p(std::exp(a - b))) / (2.0 * b);
}

}  // namespace

TEST_CASE("individual conditional effects") {
  const auto m = testing::model_41();
  const double x0[] = {0.0}, x1[] = {1.0}, xm[] = {-1.0};
  CHECK(individual_conditional_effect(m, "A", "B", x0) == -4.0);
  CHECK(individual_conditional_effect(m, "C", "C", x1) == 0.0);
  CHECK(individual_conditional_effect(m, "B", "C", x1) == 3.0);
  CHECK(individual_conditional_effect(m, "B", "C", xm) == -1.0);
  CHECK_THROWS_AS(individual_conditional_effect(m, "A", "Q", x0), ValidationError);
  // no dependence on mu or beta1
  const auto shifted = m.with_intercept(3.0).with_prognostic({2.5});
  CHECK(individual_conditional_effect(shifted, "A", "B", x1) == individual_conditional_effect(m, "A", "B", x1));
}

TEST_CASE("worked three-treatment example against closed forms") {
  const auto m = testing::model_41();
  const auto pop = testing::uniform_pop();
  const double pa = 0.5, pb = mean_expit_uniform(-4.0, -4.0), pc = mean_expit_uniform(-3.0, -2.0);
  CHECK(population_conditional_effect(m, pop, "A", "B", GL) == doctest::Approx(-4.0).epsilon(1e-12));
  CHECK(population_conditional_effect(m, pop, "A", "C", GL) == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(average_probability(m, pop, "A", GL).value() == doctest::Approx(pa).epsilon(1e-13));
  CHECK(average_probability(m, pop, "B", GL).value() == doctest::Approx(pb).epsilon(1e-12));
  CHECK(average_probability(m, pop, "C", GL).value() == doctest::Approx(pc).epsilon(1e-12));
  CHECK(population_marginal_effect(m, pop, "A", "B", GL) == doctest::Approx(logit(pb)).epsilon(1e-11));
  CHECK(population_marginal_effect(m, pop, "A", "C", GL) == doctest::Approx(logit(pc)).epsilon(1e-11));
  // rounded values as published
  CHECK(std::abs(average_probability(m, pop, "B", GL).value() - 0.087) < 1e-3);
  CHECK(std::abs(average_probability(m, pop, "C", GL).value() - 0.077) < 1e-3);
  CHECK(std::abs(population_marginal_effect(m, pop, "A", "B", GL) + 2.36) < 0.01);
  CHECK(std::abs(population_marginal_effect(m, pop, "A", "C", GL) + 2.49) < 0.01);
  CHECK(individual_probability(m, 0.0, "B", std::vector<double>{0.0}).value() ==
        doctest::Approx(0.01798620996209156).epsilon(1e-14));
}

TEST_CASE("report rankings for the worked example") {
  const auto r = estimand_report(testing::model_41(), testing::uniform_pop(), {"A", "B", "C"},
                                 Direction::lower_is_better, GL);
  CHECK(r.conditional_order() == std::vector<TreatmentId>{"B", "C", "A"});
  CHECK(r.marginal_order() == std::vector<TreatmentId>{"C", "B", "A"});
  CHECK(r.conditional("B", "A") == -r.conditional("A", "B"));
  CHECK(r.marginal("C", "B") == -r.marginal("B", "C"));
  const auto higher = estimand_report(testing::model_41(), testing::uniform_pop(), {"A", "B", "C"},
                                      Direction::higher_is_better, GL);
  CHECK(higher.conditional_order() == std::vector<TreatmentId>{"A", "C", "B"});
}

TEST_CASE("no effect modification gives matching rankings") {
  const auto r = estimand_report(testing::no_em_model(), testing::uniform_pop(), {"A", "B", "C"},
                                 Direction::lower_is_better, GL);
  CHECK(r.conditional_order() == r.marginal_order());
  CHECK(r.conditional("A", "B") == doctest::Approx(-4.0).epsilon(1e-13));
}

TEST_CASE("single treatment report") {
  const OutcomeModel m(Link(), 0.0, {}, {{"A", {}, 0.0}});
  const auto r = estimand_report(m, Population{}, {"A"}, Direction::lower_is_better, IntegrationScheme::exact_discrete());
  CHECK(r.pairs.empty());
  REQUIRE(r.conditional_ranking.size() == 1);
  CHECK(r.conditional_ranking[0].rank == 1);
}

TEST_CASE("ties share a rank in id order") {
  const auto r = rank_treatments({{"C", 1.0}, {"A", 1.0 + 1e-12}, {"B", 0.5}}, Direction::lower_is_better);
  CHECK(r[0].id == "B");
  CHECK(r[1].id == "A");
  CHECK(r[2].id == "C");
  CHECK(r[1].rank == r[2].rank);
}

TEST_CASE("net benefit averaging") {
  const auto m = testing::model_41();
  const auto pop = testing::uniform_pop();
  NetBenefitSpec square{{{"A", {0.0, 0.0, 1.0}}}, AveragingMode::individual_level};
  const double individual = expected_net_benefit(m, pop, square, "A", GL);
  square.mode = AveragingMode::plug_in_average;
  const double plug_in = expected_net_benefit(m, pop, square, "A", GL);
  // E[expit(-x)^2] on U(-1, 1) = (1 - tanh(1/2)) / 2
  CHECK(individual == doctest::Approx((1.0 - std::tanh(0.5)) / 2.0).epsilon(1e-13));
  CHECK(plug_in == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(individual > plug_in);

  for (auto mode : {AveragingMode::individual_level, AveragingMode::plug_in_average}) {
    NetBenefitSpec linear{{{"B", {0.0, 1.0}}}, mode};
    CHECK(expected_net_benefit(m, pop, linear, "B", GL) == doctest::Approx(mean_expit_uniform(-4, -4)).epsilon(1e-12));
    NetBenefitSpec constant{{{"C", {7.5}}}, mode};
    CHECK(expected_net_benefit(m, pop, constant, "C", GL) == doctest::Approx(7.5).epsilon(1e-14));
  }
  NetBenefitSpec too_high{{{"A", {0, 0, 0, 0, 0, 1}}}, AveragingMode::individual_level};
  CHECK_THROWS_AS(too_high.validate(), ValidationError);
}

TEST_CASE("link-scale algebra on random models") {
  Generator g(101);
  for (int i = 0; i < 200; ++i) {
    const std::size_t dim = static_cast<std::size_t>(g.integer(1, 2));
    const auto m = g.logit_model(dim, 3, 3.0);
    const auto pop = g.population(dim, g.uniform(-3, 3));
    const auto scheme = default_scheme(pop.covariates);
    const auto r = estimand_report(m, pop, m.treatments(), Direction::lower_is_better, scheme);
    for (const auto& k : m.treatments()) {
      const double p = r.average_probability(k).value();
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
    CHECK(std::abs(r.marginal("A", "B") + r.marginal("B", "C") - r.marginal("A", "C")) <= 1e-10);
    CHECK(std::abs(r.conditional("A", "B") + r.conditional("B", "D") - r.conditional("A", "D")) <= 1e-10);
    CHECK(r.marginal("D", "B") == -r.marginal("B", "D"));
    CHECK(r.conditional("D", "B") == -r.conditional("B", "D"));
  }
}

TEST_CASE("conditional effect ignores intercept and prognostic terms") {
  Generator g(202);
  for (int i = 0; i < 100; ++i) {
    const auto m = g.logit_model(2, 2, 5.0);
    const auto pop = g.population(2, 0.0);
    const auto scheme = default_scheme(pop.covariates);
    const double d = population_conditional_effect(m, pop, "A", "C", scheme);
    Population moved = pop;
    moved.intercept = g.uniform(-10, 10);
    CHECK(std::abs(population_conditional_effect(m, moved, "A", "C", scheme) - d) <= 1e-12);
    const auto other = m.with_prognostic(g.vec(2, -5, 5));
    CHECK(std::abs(population_conditional_effect(other, pop, "A", "C", scheme) - d) <= 1e-12);
  }
}

TEST_CASE("collapsible links") {
  Generator g(303);
  for (int i = 0; i < 200; ++i) {
    // identity: keep every linear predictor inside (0, 1) on [0, 1]
    const OutcomeModel id(Link(LinkKind::identity), 0.0, {g.uniform(-0.1, 0.1)},
                          {{"A", {0.0}, 0.0}, {"B", {g.uniform(-0.1, 0.1)}, g.uniform(-0.2, 0.2)}});
    const Population pop{0.5, CovariateDistribution::product({Uniform{0.0, 1.0}})};
    CHECK(std::abs(population_marginal_effect(id, pop, "A", "B", GL) -
                   population_conditional_effect(id, pop, "A", "B", GL)) <= 1e-10);

    const double beta = g.uniform(-1, 1);
    const OutcomeModel log(Link(LinkKind::log), 0.0, {g.uniform(-0.5, 0.5)},
                           {{"A", {0.0}, 0.0}, {"B", {beta}, g.uniform(-1, 1)}, {"C", {beta}, g.uniform(-1, 1)}});
    const Population lp{-3.0, CovariateDistribution::product({Uniform{-1.0, 1.0}})};
    CHECK(std::abs(population_marginal_effect(log, lp, "B", "C", GL) -
                   population_conditional_effect(log, lp, "B", "C", GL)) <= 1e-8);
  }
}

TEST_CASE("logit without effect modification is closer to the null") {
  Generator g(404);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    const auto m = g.logit_model(1, 2, 5.0, false, true);
    if (std::abs(m.arm("B").effect) < 1e-3 || std::abs(m.prognostic()[0]) < 1e-3) continue;
    const auto pop = g.population(1, g.uniform(-3, 3));
    const auto scheme = default_scheme(pop.covariates);
    const double d = population_conditional_effect(m, pop, "A", "B", scheme);
    const double delta = population_marginal_effect(m, pop, "A", "B", scheme);
    CHECK(std::abs(delta) < std::abs(d));
    ++checked;
  }
  CHECK(checked > 150);
}
