#include <doctest.h>

#include <cmath>

#include "estimand/error.hpp"
#include "support.hpp"

using namespace estimand;
using testing::Generator;

namespace {

const auto GL = IntegrationScheme::gauss_legendre(64);

// High-precision adaptive quadrature of the same integrals (30 digits).
constexpr double kSurvA1 = 0.64727146880108539;     // no EM, A, t = 1
constexpr double kSurvB15 = 0.55498844165325645;    // EM, B, t = 1.5
constexpr double kHrAB1 = 0.69421005144695477;      // EM, B vs A, t = 1
constexpr double kHrAC05 = 0.51781605301779541;     // no EM, C vs A, t = 0.5
constexpr double kCrossing = 2.017575117197155;     // EM, B and C curves

}  // namespace

TEST_CASE("conditional survival and hazard") {
  const auto m = testing::weibull(false);
  const double x0[] = {0.0};
  CHECK(conditional_survival(m, "A", x0, 1.0) == doctest::Approx(std::exp(-std::exp(-1.0))).epsilon(1e-15));
  CHECK(conditional_survival(m, "A", x0, 0.0) == 1.0);
  CHECK(conditional_hazard(m, "B", x0, 2.0) == doctest::Approx(2.0 * 2.0 * std::exp(-1.0) * 0.6).epsilon(1e-14));
  CHECK_THROWS_AS(WeibullPHModel(0.0, m.base()), ValidationError);
}

TEST_CASE("marginal survival and hazard ratio against reference quadrature") {
  const auto pop = testing::weibull_pop();
  CHECK(marginal_survival(testing::weibull(false), pop, "A", 1.0, GL) == doctest::Approx(kSurvA1).epsilon(1e-13));
  CHECK(marginal_survival(testing::weibull(true), pop, "B", 1.5, GL) == doctest::Approx(kSurvB15).epsilon(1e-13));
  const TimeGrid g({0.5, 1.0});
  CHECK(marginal_hazard_ratio_curve(testing::weibull(true), pop, "A", "B", g, GL)[1] ==
        doctest::Approx(kHrAB1).epsilon(1e-12));
  CHECK(marginal_hazard_ratio_curve(testing::weibull(false), pop, "A", "C", g, GL)[0] ==
        doctest::Approx(kHrAC05).epsilon(1e-12));
}

TEST_CASE("no covariates reduces to the conditional curve") {
  const WeibullPHModel m(1.5, OutcomeModel(Link(LinkKind::log), 0.3, {}, {{"A", {}, 0.0}, {"B", {}, -0.2}}));
  const Population pop{0.3, {}};
  for (double t : {0.1, 1.0, 2.5})
    CHECK(marginal_survival(m, pop, "B", t, IntegrationScheme::exact_discrete()) ==
          doctest::Approx(std::exp(-std::pow(t, 1.5) * std::exp(0.1))).epsilon(1e-15));
}

TEST_CASE("hazard ratio starts at the averaged rate ratio") {
  const auto hr = marginal_hazard_ratio_curve(testing::weibull(false), testing::weibull_pop(), "A", "B",
                                              TimeGrid({1e-6, 1.0}), GL);
  CHECK(hr[0] == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("conditional log hazard ratios") {
  for (bool em : {false, true}) {
    const auto m = testing::weibull(em);
    CHECK(std::abs(conditional_log_hr(m, testing::weibull_pop(), "A", "B", GL) - std::log(0.6)) <= 1e-10);
    CHECK(std::abs(conditional_log_hr(m, testing::weibull_pop(), "A", "C", GL) - std::log(0.5)) <= 1e-10);
  }
}

TEST_CASE("crossings of the marginal hazard ratio curves") {
  const auto grid = TimeGrid::default_grid();
  CHECK(grid.size() == 200);
  CHECK(grid[0] == doctest::Approx(0.01));
  CHECK(grid[199] == doctest::Approx(3.0));
  CHECK(hazard_ratio_crossings(testing::weibull(false), testing::weibull_pop(), "B", "C", grid, GL).empty());
  const auto em = hazard_ratio_crossings(testing::weibull(true), testing::weibull_pop(), "B", "C", grid, GL);
  REQUIRE(em.size() == 1);
  CHECK(std::abs(em[0].start - kCrossing) < 1e-6);
  CHECK(!em[0].closed);
}

TEST_CASE("crossing detection on sampled curves") {
  const TimeGrid grid = TimeGrid::linear(0.0 + 0.5, 4.5, 5);  // 0.5 .. 4.5
  const std::vector<double> a{1, 1, 1, 1, 1}, b{0, 0.5, 1.5, 1.5, 0.5};
  const auto c = detect_hr_crossings(a, b, grid);
  REQUIRE(c.size() == 1);
  CHECK(c[0].start == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(c[0].end == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(c[0].closed);
  CHECK(detect_hr_crossings(a, a, grid).empty());
}

TEST_CASE("marginal survival is non-increasing") {
  Generator g(55);
  for (int i = 0; i < 40; ++i) {
    const WeibullPHModel m(g.uniform(0.5, 3.0), g.logit_model(1, 2, 2.0).with_link(Link(LinkKind::log)));
    const auto pop = g.population(1, g.uniform(-2, 1));
    const auto s = marginal_survival_curve(m, pop, "B", TimeGrid::default_grid(), default_scheme(pop.covariates));
    for (std::size_t j = 1; j < s.size(); ++j) CHECK(s[j] <= s[j - 1] + 1e-10);
  }
}

TEST_CASE("equal interactions keep marginal survival curves ordered") {
  Generator g(66);
  for (int i = 0; i < 60; ++i) {
    const auto base = g.logit_model(1, 2, 2.0, true).with_link(Link(LinkKind::log));
    const WeibullPHModel m(g.uniform(0.5, 3.0), base);
    const auto pop = g.population(1, g.uniform(-2, 1));
    const auto scheme = default_scheme(pop.covariates);
    const auto grid = TimeGrid::default_grid();
    const auto sb = marginal_survival_curve(m, pop, "B", grid, scheme);
    const auto sc = marginal_survival_curve(m, pop, "C", grid, scheme);
    CHECK(detect_hr_crossings(sb, sc, grid).empty());
  }
}

TEST_CASE("marginal hazards can cross without effect modification") {
  // Strongly prognostic binary covariate: the riskier arm loses its high-risk
  // stratum first, so its marginal hazard dips below the other arm for a while.
  const WeibullPHModel m(1.3956004323056264,
                         OutcomeModel(Link(LinkKind::log), 0.0, {1.9103910240924229},
                                      {{"A", {0.0}, 0.0},
                                       {"B", {0.73081772262733091}, -0.42692383892408459},
                                       {"C", {0.73081772262733091}, 0.52093479057651804}}));
  const Population pop{-0.30504748329836739, CovariateDistribution::product({Bernoulli{0.92433323460077177}})};
  const auto c = hazard_ratio_crossings(m, pop, "B", "C", TimeGrid::default_grid(), IntegrationScheme::exact_discrete());
  REQUIRE(c.size() == 1);
  CHECK(c[0].closed);
  CHECK(c[0].start > 0.3);
  CHECK(c[0].end < 0.8);
}

TEST_CASE("survival grid assembly") {
  const auto s = survival_grid(testing::weibull(true), testing::weibull_pop(), {"A", "B", "C"}, TimeGrid::default_grid(), GL);
  CHECK(s.hazard_ratios.size() == 2);
  CHECK(s.crossings.size() == 1);
  CHECK(s.marginal_survival.size() == 3);
  for (std::size_t t = 0; t < s.grid.size(); ++t)
    CHECK(s.hazard_ratios[0].marginal[t] ==
          doctest::Approx(s.marginal_hazard[1][t] / s.marginal_hazard[0][t]).epsilon(1e-13));
}

TEST_CASE("time grid validation") {
  CHECK_THROWS_AS(TimeGrid({1.0}), ValidationError);
  CHECK_THROWS_AS(TimeGrid({1.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(TimeGrid({-1.0, 1.0}), ValidationError);
}
