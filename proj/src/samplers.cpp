#include "roughmc/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace roughmc {

namespace {

constexpr double kLogRatioClamp = 700.0;

bool gradient_based(Method m) {
  return m == Method::MALA || m == Method::TamedMALA || m == Method::ModifiedMALA;
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return s;
}

// Drift from a gradient already evaluated at the point (grad V or grad U).
void drift_from_gradient(const SamplerConfig& cfg, std::span<const double> gradient,
                         std::span<double> out) {
  double scale = -0.5 * cfg.sigma * cfg.sigma;
  if (cfg.method == Method::TamedMALA) {
    const double norm = std::sqrt(squared_norm(gradient));
    scale /= std::max(1.0, cfg.tame_delta * norm);
  }
  for (std::size_t i = 0; i < gradient.size(); ++i) out[i] = scale * gradient[i];
}

// Gaussian log q(y -> x) - log q(x -> y) for proposals y = x + d(x) + (sigma/sqrt(beta)) xi.
double gaussian_log_q_ratio(const SamplerConfig& cfg, std::span<const double> x,
                            std::span<const double> y, std::span<const double> drift_x,
                            std::span<const double> drift_y) {
  double reverse = 0.0;
  double forward = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - y[i] - drift_y[i];
    const double f = y[i] - x[i] - drift_x[i];
    reverse += r * r;
    forward += f * f;
  }
  return -cfg.beta / (2.0 * cfg.sigma * cfg.sigma) * (reverse - forward);
}

bool decide(double log_ratio, AcceptanceRule rule, Rng& rng) {
  const double log_u = std::log(rng.uniform_positive());
  if (rule == AcceptanceRule::Metropolis) return log_u <= log_ratio;
  const double r = std::clamp(log_ratio, -kLogRatioClamp, kLogRatioClamp);
  // log F(r) = -log(1 + e^{-r})
  return log_u <= -std::log1p(std::exp(-r));
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::RWM:
      return "RWM";
    case Method::MALA:
      return "MALA";
    case Method::TamedMALA:
      return "TamedMALA";
    case Method::ModifiedMALA:
      return "ModifiedMALA";
    case Method::Independence:
      return "Independence";
  }
  return "unknown";
}

std::string_view to_string(AcceptanceRule rule) {
  return rule == AcceptanceRule::Metropolis ? "metropolis" : "barker";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::RWM, Method::MALA, Method::TamedMALA, Method::ModifiedMALA,
                   Method::Independence})
    if (name == to_string(m)) return m;
  throw std::invalid_argument("unknown sampler method: " + std::string(name));
}

AcceptanceRule parse_rule(std::string_view name) {
  if (name == "metropolis") return AcceptanceRule::Metropolis;
  if (name == "barker") return AcceptanceRule::Barker;
  throw std::invalid_argument("unknown acceptance rule: " + std::string(name));
}

bool uses_sigma(Method method) { return method != Method::Independence; }

void SamplerConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be > 0");
  if (uses_sigma(method) && (!(sigma > 0.0) || !std::isfinite(sigma)))
    throw std::invalid_argument("sigma must be > 0 for " + std::string(to_string(method)));
  if (method == Method::TamedMALA && !(tame_delta > 0.0))
    throw std::invalid_argument("TamedMALA requires tame_delta > 0");
  if ((method == Method::ModifiedMALA || method == Method::Independence) && !auxiliary)
    throw std::invalid_argument(std::string(to_string(method)) +
                                " requires an auxiliary potential");
  if (method == Method::Independence && !auxiliary_sampler)
    throw std::invalid_argument("Independence requires an auxiliary sampler");
}

double accept_prob(double log_ratio, AcceptanceRule rule) {
  const double r = std::clamp(log_ratio, -kLogRatioClamp, kLogRatioClamp);
  if (rule == AcceptanceRule::Metropolis) return r >= 0.0 ? 1.0 : std::exp(r);
  return 1.0 / (1.0 + std::exp(-r));
}

ChainState make_state(const SamplerConfig& cfg, const PotentialSpec& potential,
                      std::span<const double> x0) {
  cfg.validate();
  ChainState s;
  s.x.assign(x0.begin(), x0.end());
  const std::size_t n = s.x.size();
  switch (cfg.method) {
    case Method::MALA:
    case Method::TamedMALA:
      s.gradient.resize(n);
      s.energy = potential.energy_and_gradient(s.x, s.gradient);
      break;
    case Method::ModifiedMALA:
      s.gradient.resize(n);
      s.energy = potential.energy(s.x);
      cfg.auxiliary->gradient(s.x, s.gradient);
      break;
    case Method::Independence:
      s.energy = potential.energy(s.x);
      s.aux_energy = cfg.auxiliary->energy(s.x);
      break;
    case Method::RWM:
      s.energy = potential.energy(s.x);
      break;
  }
  return s;
}

void proposal_drift(const SamplerConfig& cfg, const PotentialSpec& potential,
                    std::span<const double> x, std::span<double> out) {
  std::vector<double> g(x.size());
  switch (cfg.method) {
    case Method::MALA:
    case Method::TamedMALA:
      potential.gradient(x, g);
      drift_from_gradient(cfg, g, out);
      return;
    case Method::ModifiedMALA:
      cfg.auxiliary->gradient(x, g);
      drift_from_gradient(cfg, g, out);
      return;
    case Method::RWM:
    case Method::Independence:
      std::fill(out.begin(), out.end(), 0.0);
      return;
  }
}

Proposal propose(const ChainState& state, const SamplerConfig& cfg,
                 const PotentialSpec& potential, Rng& rng) {
  cfg.validate();
  const std::size_t n = state.x.size();
  Proposal p;
  p.y.resize(n);
  if (cfg.method == Method::Independence) {
    cfg.auxiliary_sampler->sample(rng, p.y);
    p.log_q_ratio = cfg.beta * (cfg.auxiliary->energy(p.y) - state.aux_energy);
    return p;
  }
  std::vector<double> drift_x(n, 0.0);
  if (gradient_based(cfg.method)) drift_from_gradient(cfg, state.gradient, drift_x);
  const double scale = cfg.sigma / std::sqrt(cfg.beta);
  for (std::size_t i = 0; i < n; ++i) p.y[i] = state.x[i] + drift_x[i] + scale * rng.normal();
  if (cfg.method == Method::RWM) return p;
  std::vector<double> drift_y(n);
  proposal_drift(cfg, potential, p.y, drift_y);
  p.log_q_ratio = gaussian_log_q_ratio(cfg, state.x, p.y, drift_x, drift_y);
  return p;
}

double log_accept_ratio(std::span<const double> x, std::span<const double> y,
                        const SamplerConfig& cfg, const PotentialSpec& potential) {
  if (x.size() != y.size()) throw std::invalid_argument("log_accept_ratio: dimension mismatch");
  const double energy_term = cfg.beta * (potential.energy(x) - potential.energy(y));
  switch (cfg.method) {
    case Method::RWM:
      return energy_term;
    case Method::Independence:
      return energy_term + cfg.beta * (cfg.auxiliary->energy(y) - cfg.auxiliary->energy(x));
    case Method::MALA:
    case Method::TamedMALA:
    case Method::ModifiedMALA: {
      std::vector<double> dx(x.size());
      std::vector<double> dy(y.size());
      proposal_drift(cfg, potential, x, dx);
      proposal_drift(cfg, potential, y, dy);
      return energy_term + gaussian_log_q_ratio(cfg, x, y, dx, dy);
    }
  }
  return energy_term;
}

StepRecord step(ChainState& state, const SamplerConfig& cfg, const PotentialSpec& potential,
                Rng& rng, StepWorkspace& work) {
  const std::size_t n = state.x.size();
  work.y.resize(n);
  StepRecord rec;
  ++state.step_index;

  const bool gaussian = cfg.method != Method::Independence;
  const bool with_gradient = gradient_based(cfg.method);
  double log_q = 0.0;
  double energy_y = 0.0;
  double aux_y = 0.0;

  if (gaussian) {
    const double scale = cfg.sigma / std::sqrt(cfg.beta);
    if (with_gradient) {
      work.drift_x.resize(n);
      drift_from_gradient(cfg, state.gradient, work.drift_x);
      for (std::size_t i = 0; i < n; ++i)
        work.y[i] = state.x[i] + work.drift_x[i] + scale * rng.normal();
    } else {
      for (std::size_t i = 0; i < n; ++i) work.y[i] = state.x[i] + scale * rng.normal();
    }
  } else {
    cfg.auxiliary_sampler->sample(rng, work.y);
  }

  double prop_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = work.y[i] - state.x[i];
    prop_sq += d * d;
  }
  rec.proposal_sq_displacement = prop_sq;

  switch (cfg.method) {
    case Method::RWM:
      energy_y = potential.energy(work.y);
      break;
    case Method::MALA:
    case Method::TamedMALA:
      work.gradient_y.resize(n);
      energy_y = potential.energy_and_gradient(work.y, work.gradient_y);
      break;
    case Method::ModifiedMALA:
      work.gradient_y.resize(n);
      energy_y = potential.energy(work.y);
      cfg.auxiliary->gradient(work.y, work.gradient_y);
      break;
    case Method::Independence:
      energy_y = potential.energy(work.y);
      aux_y = cfg.auxiliary->energy(work.y);
      log_q = cfg.beta * (aux_y - state.aux_energy);
      break;
  }
  if (with_gradient) {
    work.drift_y.resize(n);
    drift_from_gradient(cfg, work.gradient_y, work.drift_y);
    log_q = gaussian_log_q_ratio(cfg, state.x, work.y, work.drift_x, work.drift_y);
  }

  const double log_ratio = cfg.beta * (state.energy - energy_y) + log_q;
  rec.log_ratio = log_ratio;
  if (!std::isfinite(energy_y) || std::isnan(log_ratio)) {
    rec.nonfinite = true;
    return rec;
  }
  if (!decide(log_ratio, cfg.rule, rng)) return rec;

  rec.accepted = true;
  rec.sq_displacement = prop_sq;
  state.x.swap(work.y);
  state.energy = energy_y;
  state.aux_energy = aux_y;
  if (with_gradient) state.gradient.swap(work.gradient_y);
  return rec;
}

StepRecord step(ChainState& state, const SamplerConfig& cfg, const PotentialSpec& potential,
                Rng& rng) {
  StepWorkspace work;
  return step(state, cfg, potential, rng, work);
}

BatchMeans batch_means(std::span<const double> series, std::uint64_t batches) {
  BatchMeans out;
  const std::size_t n = series.size();
  if (n == 0) return out;
  double total = 0.0;
  for (double v : series) total += v;
  out.mean = total / static_cast<double>(n);
  std::uint64_t b = batches ? batches : static_cast<std::uint64_t>(std::sqrt(double(n)));
  b = std::clamp<std::uint64_t>(b, 1, n);
  if (b < 2) return out;
  const std::size_t size = n / b;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t k = 0; k < b; ++k) {
    double m = 0.0;
    for (std::size_t i = k * size; i < (k + 1) * size; ++i) m += series[i];
    m /= static_cast<double>(size);
    sum += m;
    sum_sq += m * m;
  }
  const double bd = static_cast<double>(b);
  const double mean = sum / bd;
  const double var = std::max(0.0, (sum_sq - bd * mean * mean) / (bd - 1.0));
  out.stderr = std::sqrt(var / bd);
  return out;
}

ChainDiagnostics run_chain(const SamplerConfig& cfg, const PotentialSpec& potential,
                           std::span<const double> x0, const ChainOptions& options,
                           std::uint64_t seed) {
  if (options.steps <= options.burn_in)
    throw std::invalid_argument("run_chain: steps must exceed burn_in");
  Rng rng(seed);
  ChainState state = make_state(cfg, potential, x0);
  StepWorkspace work;
  ChainDiagnostics diag;
  diag.steps = options.steps;
  diag.burn_in = options.burn_in;

  const std::uint64_t sampled = options.steps - options.burn_in;
  std::uint64_t batches =
      options.batches ? options.batches : static_cast<std::uint64_t>(std::sqrt(double(sampled)));
  batches = std::clamp<std::uint64_t>(batches, 1, sampled);
  const std::uint64_t batch_size = sampled / batches;

  double sq_total = 0.0;
  double sq_post = 0.0;
  std::uint64_t accepted_total = 0;
  std::uint64_t accepted_post = 0;
  double batch_sum = 0.0;
  double batch_mean_sum = 0.0;
  double batch_mean_sq = 0.0;
  std::uint64_t in_batch = 0;
  std::uint64_t full_batches = 0;

  if (options.keep_records) diag.records.reserve(options.steps);
  for (std::uint64_t k = 0; k < options.steps; ++k) {
    const StepRecord rec = step(state, cfg, potential, rng, work);
    sq_total += rec.sq_displacement;
    accepted_total += rec.accepted;
    diag.nonfinite += rec.nonfinite;
    if (k >= options.burn_in) {
      sq_post += rec.sq_displacement;
      accepted_post += rec.accepted;
      if (full_batches < batches) {
        batch_sum += rec.sq_displacement;
        if (++in_batch == batch_size) {
          const double m = batch_sum / static_cast<double>(batch_size);
          batch_mean_sum += m;
          batch_mean_sq += m * m;
          ++full_batches;
          batch_sum = 0.0;
          in_batch = 0;
        }
      }
    }
    if (options.keep_records) diag.records.push_back(rec);
    if (options.thin && k % options.thin == 0) diag.trace.push_back(state.x);
    if (options.observer) options.observer(state, rec);
  }

  const double post = static_cast<double>(sampled);
  diag.msd = sq_post / post;
  diag.msd_full = sq_total / static_cast<double>(options.steps);
  diag.accept_rate = static_cast<double>(accepted_post) / post;
  diag.accept_rate_full = static_cast<double>(accepted_total) / static_cast<double>(options.steps);
  if (full_batches >= 2) {
    const double b = static_cast<double>(full_batches);
    const double mean = batch_mean_sum / b;
    const double var = std::max(0.0, (batch_mean_sq - b * mean * mean) / (b - 1.0));
    diag.msd_stderr = std::sqrt(var / b);
  }
  diag.final_state = std::move(state);
  return diag;
}

}  // namespace roughmc
