#include "estimand/link.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

#include "estimand/error.hpp"

namespace estimand {

namespace {

void require_probability(double p, double q) {
  if (!std::isfinite(p) || !std::isfinite(q) || p < 0.0 || p > 1.0 || q < 0.0 || q > 1.0)
    throw RangeError("probability outside [0, 1]: " + std::to_string(p));
  if (std::abs(p + q - 1.0) > 1e-9)
    throw RangeError("probability and complement do not sum to one");
}

double probit_quantile(double p) {
  // Phi^{-1}(p) = -sqrt(2) erfc^{-1}(2p), accurate for tiny p.
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace

Probability Probability::from_value(double p) {
  require_probability(p, 1.0 - p);
  return {p, 1.0 - p};
}

Probability Probability::from_pair(double p, double q) {
  require_probability(p, q);
  return {p, q};
}

double expit(double eta) noexcept {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

Link Link::parse(std::string_view name) {
  if (name == "logit") return Link(LinkKind::logit);
  if (name == "probit") return Link(LinkKind::probit);
  if (name == "log") return Link(LinkKind::log);
  if (name == "identity") return Link(LinkKind::identity);
  if (name == "cloglog") return Link(LinkKind::cloglog);
  throw ValidationError("unknown link function '" + std::string(name) + "'", "model.link");
}

std::string_view Link::name() const noexcept {
  switch (kind_) {
    case LinkKind::logit: return "logit";
    case LinkKind::probit: return "probit";
    case LinkKind::log: return "log";
    case LinkKind::identity: return "identity";
    case LinkKind::cloglog: return "cloglog";
  }
  return "unknown";
}

double Link::forward(const Probability& prob) const {
  const double p = prob.value();
  const double q = prob.complement();
  switch (kind_) {
    case LinkKind::identity:
      return p;
    case LinkKind::log:
      if (p == 0.0) throw RangeError("log link undefined at probability 0");
      return p > 0.5 ? std::log1p(-q) : std::log(p);
    case LinkKind::logit:
      if (p == 0.0 || q == 0.0) throw RangeError("logit link undefined at probability 0 or 1");
      return std::log(p) - std::log(q);
    case LinkKind::probit:
      if (p == 0.0 || q == 0.0) throw RangeError("probit link undefined at probability 0 or 1");
      return p <= 0.5 ? probit_quantile(p) : -probit_quantile(q);
    case LinkKind::cloglog:
      if (p == 0.0 || q == 0.0) throw RangeError("cloglog link undefined at probability 0 or 1");
      return p <= 0.5 ? std::log(-std::log1p(-p)) : std::log(-std::log(q));
  }
  throw RangeError("unknown link");
}

Probability Link::inverse(double eta) const {
  if (std::isnan(eta)) throw NumericalError("linear predictor is NaN");
  switch (kind_) {
    case LinkKind::identity:
      if (eta < 0.0 || eta > 1.0)
        throw RangeError("identity link produced probability " + std::to_string(eta) +
                         " outside [0, 1]");
      return Probability::from_pair(eta, 1.0 - eta);
    case LinkKind::log:
      if (eta > 0.0)
        throw RangeError("log link produced probability exp(" + std::to_string(eta) + ") > 1");
      return Probability::from_pair(std::exp(eta), -std::expm1(eta));
    case LinkKind::logit:
      return Probability::from_pair(expit(eta), expit(-eta));
    case LinkKind::probit: {
      const double z = eta / std::numbers::sqrt2;
      return Probability::from_pair(0.5 * std::erfc(-z), 0.5 * std::erfc(z));
    }
    case LinkKind::cloglog: {
      const double rate = std::exp(eta);
      return Probability::from_pair(-std::expm1(-rate), std::exp(-rate));
    }
  }
  throw RangeError("unknown link");
}

Collapsibility classify_collapsibility(const Link& link) {
  switch (link.kind()) {
    case LinkKind::identity:
    case LinkKind::log:
      return Collapsibility::collapsible;
    case LinkKind::logit:
    case LinkKind::probit:
    case LinkKind::cloglog:
      return Collapsibility::non_collapsible;
  }
  return Collapsibility::non_collapsible;
}

std::string_view to_string(Collapsibility c) noexcept {
  return c == Collapsibility::collapsible ? "collapsible" : "non_collapsible";
}

}  // namespace estimand
