#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "roughmc/potentials.hpp"
#include "roughmc/quadrature.hpp"
#include "roughmc/samplers.hpp"

namespace roughmc {

/// Normalized MSD m(delta) = MSD / eps of MALA on V = x^2 / (2 eps) with
/// sigma^2 = 2 delta eps and the Metropolis rule.
double m_delta(double delta);

/// Limiting mean Metropolis acceptance of the same scalar model.
double a1_delta(double delta);

/// Golden-section maximizer of a unimodal function on [a, b].
struct Extremum {
  double argument = 0.0;
  double value = 0.0;
};
Extremum golden_section_max(const std::function<double(double)>& f, double a, double b,
                            double tol);

/// Maximizer of m_delta on (1e-4, 1e2), tolerance 1e-6 in delta.
Extremum optimal_delta();

double normal_cdf(double x);

/// Diffusion-limit acceptance a(l) = 2 Phi(-l^{1/I} sqrt(K) / 2).
/// `exponent` is I: 1 for RWM, 1/3 for MALA.
double limiting_acceptance(double ell, double k, double exponent);

struct ScalingConstants {
  double exponent = 1.0;
  double k = 1.0;
  double ell_sq = 0.0;
  double acceptance = 0.0;
};

/// Maximizes l^2 a(l; K, I) over l.
ScalingConstants optimal_scaling(double k, double exponent);

struct KFunctional {
  double value = 0.0;
  /// Set when the MALA functional comes out negative (v'' < 0 dominates).
  bool negative = false;
};

/// Boltzmann expectation of the diffusion-limit speed functional of one
/// coordinate term of `v`: E[(v')^2] for RWM, E[5 (v''')^2 + 3 (v'')^3] / 48
/// for MALA. Other methods throw std::invalid_argument.
KFunctional k_functional(const PotentialSpec& v, double beta, Method method,
                         const QuadratureConfig& quad);

/// Positive root sigma^2 of (sigma^4 / 2) A + sigma^2 n M - C = 0.
double sigma_first_order_root(double a, double m, double c, double n);

/// Stationary moments entering the first-order condition for sigma, estimated
/// along a MALA chain from proposals weighted by their acceptance probability.
struct FirstOrderMoments {
  double a = 0.0;  // E[|x-y|^2 F^2 |grad V(x)|^2]
  double m = 0.0;  // E[|x-y|^2 F]
  double c = 0.0;  // E[|x-y|^4 F]
};
FirstOrderMoments estimate_first_order_moments(const SamplerConfig& cfg,
                                               const PotentialSpec& potential,
                                               std::span<const double> x0, std::uint64_t steps,
                                               std::uint64_t burn_in, std::uint64_t seed);

struct RatioBounds {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

/// Extremes of d mu / d mu0 for one coordinate term of `spec` at inverse
/// temperature beta, with both normalizers by quadrature.
RatioBounds density_ratio_bounds(const PotentialSpec& spec, double beta,
                                 const QuadratureConfig& quad);

/// beta v1(x1 / eps) - E_{mu0}[beta v1(y / eps)] for one coordinate term,
/// mu0 proportional to e^{-beta v0}.
double mu_r(double x1, double beta, const PotentialSpec& spec, const QuadratureConfig& quad);

/// e^{-n |mu_r| / 2} + exp(-(n / 8) mu_r^2 / osc^2). Throws std::domain_error
/// when mu_r >= 0, where the bound does not apply.
double hoeffding_acceptance_bound(double n, double mu_r, double osc);

/// Window and spacing suited to Boltzmann quadrature for one coordinate term.
QuadratureConfig boltzmann_quadrature(const PotentialSpec& spec, double beta);

}  // namespace roughmc
