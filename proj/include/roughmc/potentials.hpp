#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace roughmc {

enum class PotentialKind { SeparableRough, RandomMultiscale, Quadratic };

/// Per-coordinate smooth part of a separable landscape.
enum class SmoothKind {
  Harmonic,    // x^2 / 2
  DoubleWell,  // (x^2 - 1)^2
};

std::string_view to_string(PotentialKind kind);
std::string_view to_string(SmoothKind kind);
SmoothKind parse_smooth_kind(std::string_view name);

/// Value and first three derivatives of a one-dimensional function.
struct Derivatives {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

/// A decomposed landscape V = V0 + V1 with analytic value and gradient.
///
/// Three families are supported:
///   - separable rough:   V(x) = sum_i v0(x_i) + A cos(x_i / eps)
///   - random multiscale: V(x) = (x^2 - 1)^2 + sum_j c_j cos(k_j x), n = 1
///   - quadratic:         V(x) = (kappa / 2) |x|^2 + offset, no rough part
///
/// Values are immutable after construction and can be shared across chains.
/// The inverse temperature is not part of the landscape.
class PotentialSpec {
 public:
  static PotentialSpec separable_rough(SmoothKind smooth, std::size_t n, double eps,
                                       double amplitude = 0.125);
  static PotentialSpec random_multiscale(std::vector<double> coefficients,
                                         std::vector<double> wavenumbers);
  static PotentialSpec quadratic(std::size_t n, double curvature, double offset = 0.0);

  PotentialKind kind() const { return kind_; }
  std::size_t dimension() const { return n_; }

  /// Length scale of the rough part: eps for separable, 1 / max k_j for random
  /// multiscale, +inf for quadratic.
  double epsilon() const { return eps_; }

  SmoothKind smooth_kind() const { return smooth_; }
  double amplitude() const { return amplitude_; }
  double curvature() const { return curvature_; }
  double offset() const { return offset_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  const std::vector<double>& wavenumbers() const { return wavenumbers_; }

  bool has_rough_part() const;
  /// V0 grows without bound in every direction.
  bool is_trapping() const;

  double energy(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;
  /// Returns V(x) and writes grad V(x) to `out`.
  double energy_and_gradient(std::span<const double> x, std::span<double> out) const;

  double smooth_energy(std::span<const double> x) const;
  void smooth_gradient(std::span<const double> x, std::span<double> out) const;
  double smooth_energy_and_gradient(std::span<const double> x, std::span<double> out) const;

  /// V1 = V - V0.
  double rough_energy(std::span<const double> x) const;

  /// Upper bound on sup V1 - inf V1, valid for every eps. Exact for cosine forms.
  double osc_bound() const;

  /// A landscape with the rough part removed (same kind and dimension).
  PotentialSpec smooth_part() const;

  /// Per-coordinate terms of a separable landscape (all supported kinds are
  /// separable). `coordinate` is the full term v0 + v1, the others split it.
  Derivatives coordinate(double x) const;
  Derivatives coordinate_smooth(double x) const;
  Derivatives coordinate_rough(double x) const;

 private:
  PotentialSpec() = default;
  void check_dimension(std::size_t size) const;

  PotentialKind kind_ = PotentialKind::Quadratic;
  SmoothKind smooth_ = SmoothKind::Harmonic;
  std::size_t n_ = 1;
  double eps_ = 1.0;
  double amplitude_ = 0.0;
  double curvature_ = 1.0;
  double offset_ = 0.0;
  std::vector<double> coefficients_;
  std::vector<double> wavenumbers_;
};

/// Draws V(x) = (x^2 - 1)^2 + sum_{j<M} c_j cos(k_j x) with c_j ~ U(-0.1, 0.1)
/// and log10 k_j ~ U(1, 3). Deterministic in `seed`.
PotentialSpec draw_random_multiscale(int modes, std::uint64_t seed);

}  // namespace roughmc
