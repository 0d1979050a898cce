#include "roughmc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace roughmc {

void QuadratureConfig::validate() const {
  if (!(half_width > 0.0) || !std::isfinite(half_width) || !std::isfinite(center))
    throw std::invalid_argument("quadrature: half_width must be finite and > 0");
  if (nodes < 64) throw std::invalid_argument("quadrature: node count must be >= 64");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("quadrature: rel_tol must be > 0");
}

double integrate(const std::function<double(double)>& f, const QuadratureConfig& cfg) {
  cfg.validate();
  const double a = cfg.lower();
  const double b = cfg.upper();
  std::size_t intervals = cfg.nodes - 1;
  if (cfg.max_spacing > 0.0) {
    const auto needed = static_cast<std::size_t>(std::ceil((b - a) / cfg.max_spacing));
    intervals = std::max(intervals, needed);
  }
  if (intervals % 2) ++intervals;

  // Trapezoid sums are refined by adding midpoints; Simpson is the Richardson
  // combination of two successive trapezoids.
  double h = (b - a) / static_cast<double>(intervals);
  const double fa = f(a);
  const double fb = f(b);
  double sum = 0.5 * (fa + fb);
  double abs_sum = 0.5 * (std::abs(fa) + std::abs(fb));
  double odd = 0.0;
  for (std::size_t i = 1; i < intervals; ++i) {
    const double v = f(a + h * static_cast<double>(i));
    sum += v;
    abs_sum += std::abs(v);
    if (i % 2) odd += v;
  }
  const double trap_coarse = 2.0 * h * (sum - odd);
  double trap = h * sum;
  double simpson = (4.0 * trap - trap_coarse) / 3.0;
  if (cfg.scheme == QuadratureScheme::FixedGrid) return simpson;

  for (int level = 0; level < cfg.max_doublings; ++level) {
    h *= 0.5;
    double mid = 0.0;
    double mid_abs = 0.0;
    for (std::size_t i = 0; i < intervals; ++i) {
      const double v = f(a + h * static_cast<double>(2 * i + 1));
      mid += v;
      mid_abs += std::abs(v);
    }
    intervals *= 2;
    sum += mid;
    abs_sum += mid_abs;
    const double trap_next = h * sum;
    const double simpson_next = (4.0 * trap_next - trap) / 3.0;
    const double floor = std::max(h * abs_sum, std::numeric_limits<double>::min());
    if (std::abs(simpson_next - simpson) <= cfg.rel_tol * floor) return simpson_next;
    trap = trap_next;
    simpson = simpson_next;
  }
  throw NumericalError("quadrature did not converge to relative tolerance " +
                       std::to_string(cfg.rel_tol) + " after " +
                       std::to_string(cfg.max_doublings) + " node doublings");
}

std::pair<double, double> boltzmann_window(const std::function<double(double)>& v, double beta,
                                           double tail, double start, double dx, double limit) {
  if (!(beta > 0.0) || !(tail > 0.0) || !(dx > 0.0))
    throw std::invalid_argument("boltzmann_window: beta, tail and dx must be > 0");
  for (double reach = 1.0; reach <= 2.0 * limit; reach *= 2.0) {
    const auto count = static_cast<std::size_t>(std::ceil(2.0 * reach / dx)) + 1;
    const double lo = start - reach;
    std::vector<double> values(count);
    double vmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) {
      values[i] = v(lo + dx * static_cast<double>(i));
      vmin = std::min(vmin, values[i]);
    }
    if (beta * (values.front() - vmin) <= tail || beta * (values.back() - vmin) <= tail) continue;
    std::size_t first = 0;
    while (beta * (values[first] - vmin) > tail) ++first;
    std::size_t last = count - 1;
    while (beta * (values[last] - vmin) > tail) --last;
    return {lo + dx * static_cast<double>(first), lo + dx * static_cast<double>(last)};
  }
  throw std::invalid_argument("boltzmann_window: potential is not trapping within the search limit");
}

}  // namespace roughmc
