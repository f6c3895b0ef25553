#include <doctest.h>

#include <cmath>
#include <sstream>

#include "estimand/contingency.hpp"
#include "estimand/error.hpp"
#include "support.hpp"

using namespace estimand;

namespace {

const char* kCounts =
    "treatment,subgroup,events,non_events\n"
    "A,x0,202,548\nA,x1,156,94\n"
    "B,x0,89,661\nB,x1,42,208\n"
    "C,x0,13,737\nC,x1,144,106\n"
    "D,x0,137,613\nD,x1,6,244\n";
const char* kPrevalence = "subgroup,prevalence\nx0,0.75\nx1,0.25\n";

ContingencyTable stratified_table() {
  std::istringstream c(kCounts), p(kPrevalence);
  return ContingencyTable::from_csv(c, p);
}

ContingencyTable parse(const std::string& counts, const std::string& prev = kPrevalence) {
  std::istringstream c(counts), p(prev);
  return ContingencyTable::from_csv(c, p);
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

double odds(const Cell& c) { return double(c.events) / double(c.non_events); }

}  // namespace

TEST_CASE("table odds ratios to two decimals") {
  const auto t = stratified_table();
  CHECK(round2(marginal_or(t, "A", "B")) == doctest::Approx(0.27));
  CHECK(round2(marginal_or(t, "A", "C")) == doctest::Approx(0.33));
  CHECK(round2(marginal_or(t, "A", "D")) == doctest::Approx(0.30));

  CHECK(round2(subgroup_conditional_or(t, "A", "B", "x0")) == doctest::Approx(0.37));
  CHECK(round2(subgroup_conditional_or(t, "A", "B", "x1")) == doctest::Approx(0.12));
  CHECK(round2(subgroup_conditional_or(t, "A", "C", "x0")) == doctest::Approx(0.05));
  CHECK(round2(subgroup_conditional_or(t, "A", "C", "x1")) == doctest::Approx(0.82));
  CHECK(round2(subgroup_conditional_or(t, "A", "D", "x0")) == doctest::Approx(0.61));
  CHECK(round2(subgroup_conditional_or(t, "A", "D", "x1")) == doctest::Approx(0.01));

  CHECK(round2(population_conditional_or(t, "A", "B")) == doctest::Approx(0.28));
  CHECK(round2(population_conditional_or(t, "A", "C")) == doctest::Approx(0.10));
  CHECK(round2(population_conditional_or(t, "A", "D")) == doctest::Approx(0.24));
}

TEST_CASE("exact values from hand arithmetic") {
  const auto t = stratified_table();
  // pooled: A 358/642, B 131/869
  CHECK(marginal_or(t, "A", "B") == doctest::Approx((131.0 / 869.0) / (358.0 / 642.0)).epsilon(1e-14));
  const double lb0 = std::log((89.0 / 661.0) / (202.0 / 548.0));
  const double lb1 = std::log((42.0 / 208.0) / (156.0 / 94.0));
  CHECK(population_conditional_or(t, "A", "B") == doctest::Approx(std::exp(0.75 * lb0 + 0.25 * lb1)).epsilon(1e-14));
}

TEST_CASE("self comparisons and reciprocity") {
  const auto t = stratified_table();
  for (const auto& k : t.treatments()) {
    CHECK(marginal_or(t, k, k) == 1.0);
    CHECK(population_conditional_or(t, k, k) == 1.0);
    for (const auto& s : t.subgroups()) CHECK(subgroup_conditional_or(t, k, k, s.id) == 1.0);
  }
  CHECK(marginal_or(t, "B", "C") * marginal_or(t, "C", "B") == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(population_conditional_or(t, "B", "D") * population_conditional_or(t, "D", "B") ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("optimal stratified policy") {
  const auto t = stratified_table();
  const auto p = optimal_stratified_policy(t, Direction::lower_is_better);
  CHECK(p.treatment_for("x0") == "C");
  CHECK(p.treatment_for("x1") == "D");
  CHECK(round2(p.marginal_or) == doctest::Approx(0.03));
  CHECK(round2(p.conditional_or) == doctest::Approx(0.04));
  CHECK(p.pooled.events == 13 + 6);
  CHECK(p.pooled.non_events == 737 + 244);

  // each subgroup gets the lowest-odds treatment
  for (const auto& s : t.subgroups()) {
    const double chosen = odds(t.cell(p.treatment_for(s.id), s.id));
    for (const auto& k : t.treatments()) CHECK(chosen <= odds(t.cell(k, s.id)));
  }

  const auto r = optimal_stratified_policy(t.restricted_to({"A", "B"}), Direction::lower_is_better);
  CHECK(r.treatment_for("x0") == "B");
  CHECK(r.treatment_for("x1") == "B");

  const auto hi = optimal_stratified_policy(t, Direction::higher_is_better);
  CHECK(hi.treatment_for("x0") == "A");
  CHECK(hi.treatment_for("x1") == "A");
}

TEST_CASE("dominating treatment gives a constant policy") {
  const auto t = parse(
      "treatment,subgroup,events,non_events\n"
      "A,s,50,50\nA,t,40,60\nB,s,10,90\nB,t,5,95\nC,s,30,70\nC,t,20,80\n",
      "subgroup,prevalence\ns,0.4\nt,0.6\n");
  const auto p = optimal_stratified_policy(t, Direction::lower_is_better);
  CHECK(p.treatment_for("s") == "B");
  CHECK(p.treatment_for("t") == "B");
  CHECK(p.marginal_or == doctest::Approx(marginal_or(t, "A", "B")).epsilon(1e-14));
  CHECK(p.conditional_or == doctest::Approx(population_conditional_or(t, "A", "B")).epsilon(1e-14));
}

TEST_CASE("zero cells") {
  const auto t = parse(
      "treatment,subgroup,events,non_events\n"
      "A,x0,10,90\nA,x1,20,80\nB,x0,0,100\nB,x1,5,95\n");
  CHECK_THROWS_AS(subgroup_conditional_or(t, "A", "B", "x0"), NumericalError);
  CHECK_THROWS_AS(population_conditional_or(t, "A", "B"), NumericalError);
  const double h = subgroup_conditional_or(t, "A", "B", "x0", ZeroCellPolicy::haldane);
  CHECK(h == doctest::Approx((0.5 / 100.5) / (10.5 / 90.5)).epsilon(1e-14));
  // the pooled B cell has no zero
  CHECK(marginal_or(t, "A", "B") == doctest::Approx((5.0 / 195.0) / (30.0 / 170.0)).epsilon(1e-14));
}

TEST_CASE("saturated logit model reproduces the table") {
  const auto t = stratified_table();
  const auto sat = saturated_logit_model(t);
  const auto scheme = IntegrationScheme::exact_discrete();
  for (const auto& k : t.treatments()) {
    if (k == "A") continue;
    const double marg = std::exp(population_marginal_effect(sat.model, sat.population, "A", k, scheme));
    const double cond = std::exp(population_conditional_effect(sat.model, sat.population, "A", k, scheme));
    CHECK(std::abs(marg - marginal_or(t, "A", k)) <= 1e-9);
    CHECK(std::abs(cond - population_conditional_or(t, "A", k)) <= 1e-9);
    for (std::size_t s = 0; s < 2; ++s) {
      const double x[] = {double(s)};
      const double id = std::exp(individual_conditional_effect(sat.model, "A", k, x));
      CHECK(std::abs(id - subgroup_conditional_or(t, "A", k, t.subgroups()[s].id)) <= 1e-9);
    }
  }
}

TEST_CASE("marginal and conditional rankings disagree on the table") {
  const auto r = contingency_report(stratified_table(), Direction::lower_is_better);
  REQUIRE(r.marginal_ranking.size() == 4);
  CHECK(r.marginal_ranking.front().id == "B");
  CHECK(r.conditional_ranking.front().id == "C");
  std::size_t pos_b = 0, pos_d = 0;
  for (std::size_t i = 0; i < r.conditional_ranking.size(); ++i) {
    if (r.conditional_ranking[i].id == "B") pos_b = i;
    if (r.conditional_ranking[i].id == "D") pos_d = i;
  }
  CHECK(pos_d < pos_b);
  CHECK(r.conflict);
  REQUIRE(r.comparisons.size() == 4);
  CHECK(r.comparisons[0].treatment == "A");
  CHECK(r.comparisons[0].marginal_or == 1.0);
}

TEST_CASE("collapsible case: equal odds ratios across subgroups with equal baselines") {
  // same reference odds in both subgroups and a constant OR: no distortion
  const auto t = parse(
      "treatment,subgroup,events,non_events\n"
      "A,x0,20,80\nA,x1,40,160\nB,x0,10,160\nB,x1,5,80\n");
  CHECK(marginal_or(t, "A", "B") == doctest::Approx(population_conditional_or(t, "A", "B")).epsilon(1e-12));
}

TEST_CASE("counts echo exactly") {
  const auto t = stratified_table();
  CHECK(t.cell("C", "x1").events == 144);
  CHECK(t.cell("C", "x1").non_events == 106);
  CHECK(t.pooled("D").events == 143);
  CHECK(t.reference() == "A");
  CHECK(t.subgroups()[1].prevalence == 0.25);
}

TEST_CASE("malformed CSV input") {
  CHECK_THROWS_AS(parse("treatment,group,events,non_events\nA,x0,1,1\n"), ValidationError);
  CHECK_THROWS_AS(parse("treatment,subgroup,events,non_events\nA,x0,1.5,1\nA,x1,1,1\n"), ValidationError);
  CHECK_THROWS_AS(parse("treatment,subgroup,events,non_events\nA,x0,-1,1\nA,x1,1,1\n"), ValidationError);
  CHECK_THROWS_AS(parse("treatment,subgroup,events,non_events\nA,x0,1,1\n"), ValidationError);  // x1 missing
  CHECK_THROWS_AS(parse("treatment,subgroup,events,non_events\nA,x0,1,1\nA,x0,2,2\nA,x1,1,1\n"), ValidationError);
  CHECK_THROWS_AS(parse(kCounts, "subgroup,prevalence\nx0,0.7\nx1,0.25\n"), ValidationError);
  CHECK_THROWS_AS(parse(kCounts, "subgroup,prevalence\nx0,0.75\nx2,0.25\n"), ValidationError);
  try {
    parse("treatment,subgroup,events,non_events\nA,x0,abc,1\nA,x1,1,1\n");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.path().rfind("contingency.table", 0) == 0);
  }
  CHECK_THROWS_AS(marginal_or(stratified_table(), "A", "Q"), ValidationError);
}

TEST_CASE("random tables: saturated model agrees") {
  testing::Generator gen(77);
  for (int rep = 0; rep < 50; ++rep) {
    // every arm has the same subgroup sizes, so pooling weights match the prevalences
    const int nu = gen.integer(50, 800), nv = gen.integer(50, 800);
    std::ostringstream c;
    c << "treatment,subgroup,events,non_events\n";
    for (const char* k : {"A", "B", "C"}) {
      const int eu = gen.integer(1, nu - 1), ev = gen.integer(1, nv - 1);
      c << k << ",u," << eu << ',' << nu - eu << '\n' << k << ",v," << ev << ',' << nv - ev << '\n';
    }
    const double w = double(nu) / double(nu + nv);
    std::ostringstream p;
    p.precision(17);
    p << "subgroup,prevalence\nu," << w << "\nv," << 1.0 - w << '\n';
    const auto t = parse(c.str(), p.str());
    const auto sat = saturated_logit_model(t);
    const auto scheme = IntegrationScheme::exact_discrete();
    for (const char* k : {"B", "C"}) {
      CHECK(std::abs(std::exp(population_marginal_effect(sat.model, sat.population, "A", k, scheme)) -
                     marginal_or(t, "A", k)) <= 1e-9);
      CHECK(std::abs(std::exp(population_conditional_effect(sat.model, sat.population, "A", k, scheme)) -
                     population_conditional_or(t, "A", k)) <= 1e-9);
    }
  }
}
