#pragma once

#include <string>
#include <string_view>

namespace estimand {

/// A probability stored together with its complement.
///
/// Averaging over a population and the tails of the logit/probit/cloglog
/// links both lose everything in 1 - p once p is close to 1. Carrying q
/// separately keeps g(p) accurate at either end of (0, 1).
class Probability {
 public:
  /// q is taken as 1 - p.
  static Probability from_value(double p);
  /// Both parts supplied, e.g. as separately integrated averages.
  static Probability from_pair(double p, double q);

  double value() const noexcept { return p_; }
  double complement() const noexcept { return q_; }

 private:
  Probability(double p, double q) : p_(p), q_(q) {}
  double p_;
  double q_;
};

enum class LinkKind { logit, probit, log, identity, cloglog };

enum class Collapsibility { collapsible, non_collapsible };

/// Link function g mapping probabilities onto the linear predictor scale.
class Link {
 public:
  explicit Link(LinkKind kind = LinkKind::logit) : kind_(kind) {}

  /// Accepts "logit", "probit", "log", "identity", "cloglog".
  static Link parse(std::string_view name);

  LinkKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;

  /// g(p). Throws RangeError where g is unbounded (p = 0 for logit, probit,
  /// log and cloglog; p = 1 for logit, probit and cloglog).
  double forward(const Probability& p) const;
  double forward(double p) const { return forward(Probability::from_value(p)); }

  /// g^{-1}(eta). Throws RangeError when the result would leave [0, 1]
  /// (identity and log links).
  Probability inverse(double eta) const;

  friend bool operator==(const Link&, const Link&) = default;

 private:
  LinkKind kind_;
};

/// Collapsible iff the characteristic collapsibility function is linear in
/// the probability: identity and log are, logit/probit/cloglog are not.
Collapsibility classify_collapsibility(const Link& link);

std::string_view to_string(Collapsibility c) noexcept;

/// Logistic function, split so neither tail overflows.
double expit(double eta) noexcept;

}  // namespace estimand
