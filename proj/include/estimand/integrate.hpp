#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "estimand/model.hpp"

namespace estimand {

enum class SchemeKind { exact_discrete, gauss_legendre, qmc_sobol, empirical_mean };

/// How expectations over a covariate distribution are evaluated.
///
/// `nodes` applies to gauss_legendre (per continuous dimension), `points`
/// and `scramble_seed` to qmc_sobol. `tolerance` is the absolute accuracy
/// contract reported alongside every result.
struct IntegrationScheme {
  SchemeKind kind = SchemeKind::gauss_legendre;
  std::size_t nodes = 64;
  std::uint64_t points = std::uint64_t{1} << 14;
  std::uint64_t scramble_seed = 0;
  double tolerance = 1e-8;

  static IntegrationScheme exact_discrete();
  static IntegrationScheme gauss_legendre(std::size_t nodes = 64);
  static IntegrationScheme qmc_sobol(std::uint64_t points = std::uint64_t{1} << 14,
                                     std::uint64_t scramble_seed = 0);
  static IntegrationScheme empirical_mean();

  /// Throws ValidationError: nodes >= 2, points a power of two, tolerance > 0.
  void validate() const;

  friend bool operator==(const IntegrationScheme&, const IntegrationScheme&) = default;
};

std::string_view to_string(SchemeKind kind) noexcept;
SchemeKind parse_scheme_kind(std::string_view name);

/// exact_discrete for finite supports, empirical_mean for samples,
/// Gauss-Legendre(64) for up to two continuous dimensions, Sobol(2^14) beyond.
IntegrationScheme default_scheme(const CovariateDistribution& dist);

/// Weighted evaluation points for one (distribution, scheme) pair.
/// Coordinates are row-major, one row of `dimension()` values per node.
class NodeSet {
 public:
  NodeSet(const CovariateDistribution& dist, const IntegrationScheme& scheme);

  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t dimension() const noexcept { return dim_; }
  std::span<const double> point(std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<const double> weights() const noexcept { return weights_; }

  /// Sum of w_i f(x_i) in node order with pairwise summation.
  double expect(const std::function<double(std::span<const double>)>& f) const;
  /// Componentwise version; f writes `width` values into its output span.
  std::vector<double> expect_grid(
      const std::function<void(std::span<const double>, std::span<double>)>& f,
      std::size_t width) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<double> weights_;
};

/// E[f(x)] over `dist`. Throws ValidationError on a scheme the distribution
/// cannot use (e.g. exact_discrete on Uniform) and NumericalError if f is
/// non-finite at any node.
double expect(const CovariateDistribution& dist,
              const std::function<double(std::span<const double>)>& f,
              const IntegrationScheme& scheme);

/// Batched expect for vector-valued f sharing the covariate evaluations.
std::vector<double> expect_grid(
    const CovariateDistribution& dist,
    const std::function<std::vector<double>(std::span<const double>)>& f,
    const IntegrationScheme& scheme);

/// Gauss-Legendre nodes and weights on [-1, 1] (weights sum to 2).
void gauss_legendre_rule(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

/// Pairwise (cascade) summation in index order.
double pairwise_sum(std::span<const double> values) noexcept;

}  // namespace estimand
