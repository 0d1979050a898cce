#include "roughmc/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace roughmc {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string(what) + " must be finite and > 0");
}

double min_on_window(const std::function<double(double)>& v, double lo, double hi) {
  double best = std::numeric_limits<double>::infinity();
  constexpr int samples = 1024;
  for (int i = 0; i <= samples; ++i) best = std::min(best, v(lo + (hi - lo) * i / samples));
  return best;
}

double coordinate_osc(const PotentialSpec& spec) {
  return spec.osc_bound() / static_cast<double>(spec.dimension());
}

}  // namespace

double m_delta(double delta) {
  require_positive(delta, "delta");
  const double d32 = std::pow(delta, 1.5);
  const double bracket = (8.0 + delta * delta * delta) * std::atan(std::sqrt(8.0) / d32) -
                         2.0 * std::sqrt(2.0) * d32;
  return 2.0 * delta / (kPi * (4.0 + delta * (delta - 2.0))) * bracket;
}

double a1_delta(double delta) {
  require_positive(delta, "delta");
  return 2.0 / kPi * std::atan(std::pow(2.0 / delta, 1.5));
}

Extremum golden_section_max(const std::function<double(double)>& f, double a, double b,
                            double tol) {
  if (!(b > a)) throw std::invalid_argument("golden_section_max: need a < b");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

Extremum optimal_delta() { return golden_section_max(m_delta, 1e-4, 1e2, 1e-6); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double limiting_acceptance(double ell, double k, double exponent) {
  require_positive(ell, "ell");
  require_positive(k, "K");
  if (std::abs(exponent - 1.0) > 1e-12 && std::abs(exponent - 1.0 / 3.0) > 1e-12)
    throw std::invalid_argument("scaling exponent must be 1 or 1/3");
  return 2.0 * normal_cdf(-std::pow(ell, 1.0 / exponent) * std::sqrt(k) / 2.0);
}

ScalingConstants optimal_scaling(double k, double exponent) {
  // Work in log l; l^2 a(l) is unimodal there.
  const auto objective = [&](double log_ell) {
    const double ell = std::exp(log_ell);
    return ell * ell * limiting_acceptance(ell, k, exponent);
  };
  const Extremum best = golden_section_max(objective, -30.0, 30.0, 1e-12);
  const double ell = std::exp(best.argument);
  return {exponent, k, ell * ell, limiting_acceptance(ell, k, exponent)};
}

QuadratureConfig boltzmann_quadrature(const PotentialSpec& spec, double beta) {
  require_positive(beta, "beta");
  const auto v0 = [&](double x) { return spec.coordinate_smooth(x).value; };
  // The rough part can lower the energy by at most its oscillation.
  const double tail = 50.0 + beta * coordinate_osc(spec);
  const auto [lo, hi] = boltzmann_window(v0, beta, tail);
  QuadratureConfig q;
  q.center = 0.5 * (lo + hi);
  q.half_width = 0.5 * (hi - lo);
  q.nodes = 257;
  if (spec.has_rough_part()) q.max_spacing = spec.epsilon() / 4.0;
  return q;
}

KFunctional k_functional(const PotentialSpec& v, double beta, Method method,
                         const QuadratureConfig& quad) {
  require_positive(beta, "beta");
  if (method != Method::RWM && method != Method::MALA)
    throw std::invalid_argument("k_functional: defined for RWM and MALA only");
  const double shift = min_on_window([&](double x) { return v.coordinate(x).value; },
                                     quad.lower(), quad.upper());
  const auto weight = [&](const Derivatives& d) { return std::exp(-beta * (d.value - shift)); };
  const double z = integrate([&](double x) { return weight(v.coordinate(x)); }, quad);
  const double num = integrate(
      [&](double x) {
        const Derivatives d = v.coordinate(x);
        const double g = method == Method::RWM
                             ? d.d1 * d.d1
                             : (5.0 * d.d3 * d.d3 + 3.0 * d.d2 * d.d2 * d.d2) / 48.0;
        return g * weight(d);
      },
      quad);
  KFunctional out;
  out.value = num / z;
  out.negative = out.value < 0.0;
  return out;
}

double sigma_first_order_root(double a, double m, double c, double n) {
  if (!(c > 0.0) || !std::isfinite(c))
    throw std::invalid_argument("sigma_first_order_root: C must be > 0");
  if (a < 0.0 || m < 0.0 || (a == 0.0 && m == 0.0))
    throw std::invalid_argument("sigma_first_order_root: A, M >= 0, not both zero");
  require_positive(n, "n");
  const double r = n * m / c;
  return 2.0 / (r + std::sqrt(r * r + 2.0 * a / c));
}

FirstOrderMoments estimate_first_order_moments(const SamplerConfig& cfg,
                                               const PotentialSpec& potential,
                                               std::span<const double> x0, std::uint64_t steps,
                                               std::uint64_t burn_in, std::uint64_t seed) {
  if (cfg.method != Method::MALA)
    throw std::invalid_argument("estimate_first_order_moments: MALA chain required");
  if (steps <= burn_in) throw std::invalid_argument("steps must exceed burn_in");
  Rng rng(seed);
  ChainState state = make_state(cfg, potential, x0);
  StepWorkspace work;
  FirstOrderMoments acc;
  for (std::uint64_t k = 0; k < steps; ++k) {
    double grad_sq = 0.0;
    for (double g : state.gradient) grad_sq += g * g;
    const StepRecord rec = step(state, cfg, potential, rng, work);
    if (k < burn_in) continue;
    const double f = rec.nonfinite ? 0.0 : accept_prob(rec.log_ratio, cfg.rule);
    const double d2 = rec.proposal_sq_displacement;
    acc.a += d2 * f * f * grad_sq;
    acc.m += d2 * f;
    acc.c += d2 * d2 * f;
  }
  const double count = static_cast<double>(steps - burn_in);
  acc.a /= count;
  acc.m /= count;
  acc.c /= count;
  return acc;
}

RatioBounds density_ratio_bounds(const PotentialSpec& spec, double beta,
                                 const QuadratureConfig& quad) {
  require_positive(beta, "beta");
  const auto v0 = [&](double x) { return spec.coordinate_smooth(x).value; };
  const double shift = min_on_window(v0, quad.lower(), quad.upper());
  const double z0 = integrate([&](double x) { return std::exp(-beta * (v0(x) - shift)); }, quad);
  const double z = integrate(
      [&](double x) { return std::exp(-beta * (spec.coordinate(x).value - shift)); }, quad);
  if (!spec.has_rough_part()) return {z0 / z, z0 / z};

  // d mu / d mu0 = e^{-beta v1} z0 / z; scan the window finely enough to
  // resolve every oscillation.
  const double spacing = std::min(spec.epsilon() / 16.0, 2.0 * quad.half_width / 4096.0);
  const auto count = static_cast<std::size_t>(std::ceil(2.0 * quad.half_width / spacing));
  RatioBounds out{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t i = 0; i <= count; ++i) {
    const double x = quad.lower() + spacing * static_cast<double>(i);
    const double r = std::exp(-beta * spec.coordinate_rough(x).value) * z0 / z;
    out.min_ratio = std::min(out.min_ratio, r);
    out.max_ratio = std::max(out.max_ratio, r);
  }
  return out;
}

double mu_r(double x1, double beta, const PotentialSpec& spec, const QuadratureConfig& quad) {
  require_positive(beta, "beta");
  if (!spec.has_rough_part()) return 0.0;
  const auto v0 = [&](double x) { return spec.coordinate_smooth(x).value; };
  const double shift = min_on_window(v0, quad.lower(), quad.upper());
  const auto w = [&](double x) { return std::exp(-beta * (v0(x) - shift)); };
  const double z0 = integrate(w, quad);
  const double mean =
      integrate([&](double x) { return spec.coordinate_rough(x).value * w(x); }, quad) / z0;
  return beta * (spec.coordinate_rough(x1).value - mean);
}

double hoeffding_acceptance_bound(double n, double mu_r, double osc) {
  if (!(mu_r < 0.0)) throw std::domain_error("hoeffding bound inapplicable: mu_r must be < 0");
  require_positive(n, "n");
  require_positive(osc, "osc");
  return std::exp(-n * std::abs(mu_r) / 2.0) + std::exp(-(n / 8.0) * mu_r * mu_r / (osc * osc));
}

}  // namespace roughmc
