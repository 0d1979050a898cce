#include "roughmc/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "roughmc/quadrature.hpp"

namespace roughmc {

TabulatedInverseCdf TabulatedInverseCdf::build(const std::function<double(double)>& v,
                                               double beta, const InverseCdfOptions& options) {
  if (!(beta > 0.0)) throw std::invalid_argument("inverse cdf: beta must be > 0");
  if (options.levels < 2 || options.fine_points < options.levels)
    throw std::invalid_argument("inverse cdf: need 2 <= levels <= fine_points");
  double lo = options.lower;
  double hi = options.upper;
  if (!(hi > lo)) std::tie(lo, hi) = boltzmann_window(v, beta, 50.0);

  TabulatedInverseCdf t;
  t.beta_ = beta;
  const std::size_t n = options.fine_points;
  const double h = (hi - lo) / static_cast<double>(n - 1);
  t.fine_x_.resize(n);
  std::vector<double> energy(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.fine_x_[i] = lo + h * static_cast<double>(i);
    energy[i] = v(t.fine_x_[i]);
  }
  const double vmin = *std::min_element(energy.begin(), energy.end());
  t.fine_cdf_.assign(n, 0.0);
  double prev = std::exp(-beta * (energy[0] - vmin));
  for (std::size_t i = 1; i < n; ++i) {
    const double cur = std::exp(-beta * (energy[i] - vmin));
    t.fine_cdf_[i] = t.fine_cdf_[i - 1] + 0.5 * h * (prev + cur);
    prev = cur;
  }
  const double total = t.fine_cdf_.back();
  if (!(total > 0.0) || !std::isfinite(total))
    throw NumericalError("inverse cdf: density does not integrate to a finite positive value");
  for (double& c : t.fine_cdf_) c /= total;
  for (std::size_t i = 1; i < n; ++i)
    if (!(t.fine_cdf_[i] >= t.fine_cdf_[i - 1]))
      throw NumericalError("inverse cdf: cumulative quadrature is not monotone");

  const std::size_t levels = options.levels;
  t.levels_.resize(levels);
  t.positions_.resize(levels);
  for (std::size_t k = 0; k < levels; ++k) {
    t.levels_[k] = static_cast<double>(k) / static_cast<double>(levels - 1);
    t.positions_[k] = t.fine_inverse(t.levels_[k]);
    if (k > 0 && !(t.positions_[k] > t.positions_[k - 1]))
      throw NumericalError("inverse cdf: positions are not strictly increasing at level " +
                           std::to_string(k));
  }
  return t;
}

TabulatedInverseCdf TabulatedInverseCdf::build(const PotentialSpec& spec, double beta,
                                               bool smooth_only,
                                               const InverseCdfOptions& options) {
  if (smooth_only)
    return build([&](double x) { return spec.coordinate_smooth(x).value; }, beta, options);
  return build([&](double x) { return spec.coordinate(x).value; }, beta, options);
}

double TabulatedInverseCdf::fine_inverse(double u) const {
  if (u <= 0.0) return fine_x_.front();
  const auto it = std::lower_bound(fine_cdf_.begin(), fine_cdf_.end(), u);
  if (it == fine_cdf_.end()) return fine_x_.back();
  const auto j = static_cast<std::size_t>(it - fine_cdf_.begin());
  const double c0 = fine_cdf_[j - 1];
  const double c1 = fine_cdf_[j];
  const double s = (u - c0) / (c1 - c0);
  return fine_x_[j - 1] + s * (fine_x_[j] - fine_x_[j - 1]);
}

double TabulatedInverseCdf::inverse(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  const double pos = u * static_cast<double>(levels_.size() - 1);
  const auto k = std::min(static_cast<std::size_t>(pos), levels_.size() - 2);
  const double s = pos - static_cast<double>(k);
  return positions_[k] + s * (positions_[k + 1] - positions_[k]);
}

double TabulatedInverseCdf::cdf(double x) const {
  if (x <= fine_x_.front()) return 0.0;
  if (x >= fine_x_.back()) return 1.0;
  const double h = fine_x_[1] - fine_x_[0];
  const auto j = std::min(static_cast<std::size_t>((x - fine_x_.front()) / h), fine_x_.size() - 2);
  const double s = (x - fine_x_[j]) / h;
  return fine_cdf_[j] + s * (fine_cdf_[j + 1] - fine_cdf_[j]);
}

void ProductInverseCdfSampler::sample(Rng& rng, std::span<double> out) const {
  for (double& v : out) v = table_->sample(rng);
}

void attach_smooth_auxiliary(SamplerConfig& cfg, const PotentialSpec& spec,
                             const InverseCdfOptions& options) {
  cfg.auxiliary = std::make_shared<const PotentialSpec>(spec.smooth_part());
  auto table = std::make_shared<const TabulatedInverseCdf>(
      TabulatedInverseCdf::build(spec, cfg.beta, true, options));
  cfg.auxiliary_sampler = std::make_shared<const ProductInverseCdfSampler>(std::move(table));
}

void LocalEntropyConfig::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("local entropy: gamma must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("local entropy: beta must be > 0");
  if (samples < 1) throw std::invalid_argument("local entropy: need at least one sample");
  if (!(dt > 0.0)) throw std::invalid_argument("local entropy: dt must be > 0");
}

LocalEntropyValue local_entropy_value(const PotentialSpec& v, std::span<const double> x,
                                      const LocalEntropyConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t n = x.size();
  const double scale = std::sqrt(cfg.gamma / cfg.beta);
  std::vector<double> energy(cfg.samples);
  std::vector<double> y(n);
  for (std::size_t j = 0; j < cfg.samples; ++j) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + scale * rng.normal();
    energy[j] = v.energy(y);
  }
  const double vmin = *std::min_element(energy.begin(), energy.end());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double e : energy) {
    const double a = std::exp(-cfg.beta * (e - vmin));
    sum += a;
    sum_sq += a * a;
  }
  if (!(sum > 0.0)) throw NumericalError("local entropy: all summands underflowed");
  const double count = static_cast<double>(cfg.samples);
  const double mean = sum / count;
  LocalEntropyValue out;
  out.value = vmin - std::log(mean) / cfg.beta;
  if (cfg.samples > 1) {
    const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0));
    out.stderr = std::sqrt(var / count) / (mean * cfg.beta);
  }
  return out;
}

bool auxiliary_diffusion_step(std::span<double> y, std::span<const double> x,
                              const PotentialSpec& v, const PotentialSpec& drift, double gamma,
                              double beta, double dt, Rng& rng) {
  const std::size_t n = y.size();
  if (x.size() != n) throw std::invalid_argument("auxiliary step: dimension mismatch");
  const double a = std::exp(-dt / gamma);
  const double var = gamma / beta * (1.0 - a * a);
  const double sd = std::sqrt(var);
  const double kick = gamma * (1.0 - a);

  std::vector<double> grad(n);
  std::vector<double> grad_prop(n);
  std::vector<double> prop(n);
  const bool own = &drift == &v;
  const double vy = v.energy_and_gradient(y, grad);
  if (!own) drift.gradient(y, grad);
  const auto mean = [&](std::span<const double> from, std::span<const double> g, std::size_t i) {
    return x[i] + a * (from[i] - x[i]) - kick * g[i];
  };
  for (std::size_t i = 0; i < n; ++i) prop[i] = mean(y, grad, i) + sd * rng.normal();
  const double vp = v.energy_and_gradient(prop, grad_prop);
  if (!own) drift.gradient(prop, grad_prop);

  double forward = 0.0;
  double reverse = 0.0;
  double quad_y = 0.0;
  double quad_p = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = prop[i] - mean(y, grad, i);
    const double r = y[i] - mean(prop, grad_prop, i);
    forward += f * f;
    reverse += r * r;
    quad_y += (y[i] - x[i]) * (y[i] - x[i]);
    quad_p += (prop[i] - x[i]) * (prop[i] - x[i]);
  }
  const double u_y = vy + quad_y / (2.0 * gamma);
  const double u_p = vp + quad_p / (2.0 * gamma);
  const double log_ratio = beta * (u_y - u_p) - (reverse - forward) / (2.0 * var);
  if (!std::isfinite(u_p) || std::isnan(log_ratio)) return false;
  if (std::log(rng.uniform_positive()) > log_ratio) return false;
  std::copy(prop.begin(), prop.end(), y.begin());
  return true;
}

bool auxiliary_diffusion_step(std::span<double> y, std::span<const double> x,
                              const PotentialSpec& v, double gamma, double beta, double dt,
                              Rng& rng) {
  return auxiliary_diffusion_step(y, x, v, v, gamma, beta, dt, rng);
}

namespace {

// Endpoint of one inner chain; returns the number of accepted moves.
std::size_t inner_chain(const PotentialSpec& v, const PotentialSpec& drift,
                        std::span<const double> x, const LocalEntropyConfig& cfg,
                        std::uint64_t seed, double* endpoint) {
  Rng rng(seed);
  std::span<double> y(endpoint, x.size());
  std::copy(x.begin(), x.end(), y.begin());
  std::size_t accepted = 0;
  for (std::size_t k = 0; k < cfg.inner_steps; ++k)
    accepted += auxiliary_diffusion_step(y, x, v, drift, cfg.gamma, cfg.beta, cfg.dt, rng);
  return accepted;
}

LocalEntropyGradient summarize(std::span<const double> x, const LocalEntropyConfig& cfg,
                               const std::vector<double>& endpoints,
                               const std::vector<std::size_t>& accepted) {
  const std::size_t n = x.size();
  const double count = static_cast<double>(cfg.samples);
  LocalEntropyGradient out;
  out.gradient.assign(n, 0.0);
  out.stderr.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t j = 0; j < cfg.samples; ++j) {
      const double yj = endpoints[j * n + i];
      sum += yj;
      sum_sq += yj * yj;
    }
    const double mean = sum / count;
    out.gradient[i] = (x[i] - mean) / cfg.gamma;
    if (cfg.samples > 1) {
      const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0));
      out.stderr[i] = std::sqrt(var / count) / cfg.gamma;
    }
  }
  std::size_t total = 0;
  for (std::size_t a : accepted) total += a;
  const double moves = count * static_cast<double>(cfg.inner_steps);
  out.inner_accept_rate = moves > 0.0 ? static_cast<double>(total) / moves : 1.0;
  out.collapsed = cfg.inner_steps > 0 && out.inner_accept_rate < 0.01;
  return out;
}

}  // namespace

LocalEntropyGradient local_entropy_gradient(const PotentialSpec& v, std::span<const double> x,
                                            const LocalEntropyConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::uint64_t base = rng.next_u64();
  const std::size_t n = x.size();
  std::vector<double> endpoints(cfg.samples * n);
  std::vector<std::size_t> accepted(cfg.samples);
  const PotentialSpec smooth = v.smooth_part();
  const PotentialSpec& drift = cfg.proposal == InnerProposal::Langevin ? v : smooth;
  const auto count = static_cast<std::ptrdiff_t>(cfg.samples);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    accepted[ju] = inner_chain(v, drift, x, cfg, derive_seed(base, ju), endpoints.data() + ju * n);
  }
  return summarize(x, cfg, endpoints, accepted);
}

LocalEntropyGradient local_entropy_gradient_serial(const PotentialSpec& v,
                                                   std::span<const double> x,
                                                   const LocalEntropyConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::uint64_t base = rng.next_u64();
  const std::size_t n = x.size();
  std::vector<double> endpoints(cfg.samples * n);
  std::vector<std::size_t> accepted(cfg.samples);
  const PotentialSpec smooth = v.smooth_part();
  const PotentialSpec& drift = cfg.proposal == InnerProposal::Langevin ? v : smooth;
  for (std::size_t j = 0; j < cfg.samples; ++j)
    accepted[j] = inner_chain(v, drift, x, cfg, derive_seed(base, j), endpoints.data() + j * n);
  return summarize(x, cfg, endpoints, accepted);
}

}  // namespace roughmc
