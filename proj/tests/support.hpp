#pragma once

// Oracles shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "roughmc/potentials.hpp"
#include "roughmc/quadrature.hpp"

namespace roughmc::testing {

/// Bin probabilities of the 1D density e^{-beta v} on equal bins of [lo, hi],
/// each integrated by adaptive Simpson; normalized over [lo, hi].
inline std::vector<double> bin_probabilities(const PotentialSpec& spec, double beta, double lo,
                                             double hi, int bins) {
  std::vector<double> p(static_cast<std::size_t>(bins));
  double total = 0.0;
  const double width = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) {
    QuadratureConfig q;
    q.center = lo + (b + 0.5) * width;
    q.half_width = 0.5 * width;
    q.nodes = 65;
    if (spec.has_rough_part()) q.max_spacing = spec.epsilon() / 8.0;
    p[static_cast<std::size_t>(b)] =
        integrate([&](double x) { return std::exp(-beta * spec.coordinate(x).value); }, q);
    total += p[static_cast<std::size_t>(b)];
  }
  for (double& v : p) v /= total;
  return p;
}

/// Histogram over equal bins of [lo, hi]; samples outside are tallied in
/// `outside`.
struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t outside = 0;
  std::uint64_t total = 0;

  Histogram(double a, double b, int bins) : lo(a), hi(b), counts(static_cast<std::size_t>(bins)) {}

  void add(double x) {
    ++total;
    if (!(x >= lo && x < hi)) {
      ++outside;
      return;
    }
    auto k = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(counts.size()));
    counts[std::min(k, counts.size() - 1)]++;
  }

  /// Total-variation distance to bin probabilities p (mass outside counts fully).
  double tv(const std::vector<double>& p) const {
    double d = static_cast<double>(outside) / static_cast<double>(total);
    for (std::size_t i = 0; i < counts.size(); ++i)
      d += std::abs(static_cast<double>(counts[i]) / static_cast<double>(total) - p[i]);
    return 0.5 * d;
  }
};

}  // namespace roughmc::testing
