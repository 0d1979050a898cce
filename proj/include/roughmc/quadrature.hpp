#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace roughmc {

/// A numerical procedure (quadrature, eigensolve, inner chain) failed to
/// reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class QuadratureScheme {
  Adaptive,   // node doubling until successive results agree
  FixedGrid,  // single composite Simpson pass at the given node count
};

struct QuadratureConfig {
  /// Integration runs over [center - half_width, center + half_width].
  double center = 0.0;
  double half_width = 8.0;
  std::size_t nodes = 64;
  QuadratureScheme scheme = QuadratureScheme::Adaptive;
  double rel_tol = 1e-8;
  /// Upper bound on the initial node spacing (set to eps/4 for oscillatory
  /// integrands). Non-positive means unconstrained.
  double max_spacing = 0.0;
  int max_doublings = 14;

  double lower() const { return center - half_width; }
  double upper() const { return center + half_width; }
  void validate() const;
};

/// Composite Simpson's rule on [a, b]. In adaptive mode the interval count is
/// doubled until two successive estimates agree to `rel_tol` relative to the
/// integral of |f|; throws NumericalError otherwise.
double integrate(const std::function<double(double)>& f, const QuadratureConfig& cfg);

/// Extent [lo, hi] of the set where beta (v - min v) <= tail, found on a grid
/// of spacing `dx` that grows outward from `start` until both ends exceed the
/// tail level. Throws if that needs more than `limit` on either side.
std::pair<double, double> boltzmann_window(const std::function<double(double)>& v, double beta,
                                           double tail, double start = 0.0, double dx = 1e-3,
                                           double limit = 1e3);

}  // namespace roughmc
